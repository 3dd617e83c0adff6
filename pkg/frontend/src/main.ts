/** DOM wiring: events in, state reducers, full re-render out.
 *
 * Rendering is innerHTML replacement, so open/closed states of the
 * collapsible boxes are captured before and restored after each render.
 */
import { fetchConfig, postLink } from "./api.js";
import { renderCards, renderSectionA } from "./render.js";
import {
  ConsoleState,
  initialState,
  failCard,
  removeCard,
  resolveCard,
  retryCard,
  submitCard,
} from "./state.js";
import type { ComboSelection, ConfigResponse, LinkRequestBody } from "./types.js";

let state: ConsoleState = initialState;
let config: ConfigResponse | null = null;
let validation: string | null = null;
const requests = new Map<number, LinkRequestBody>();

const sectionA = document.getElementById("section-a-host") as HTMLElement;
const sectionBC = document.getElementById("cards-host") as HTMLElement;

function openKeys(): Set<string> {
  const keys = new Set<string>();
  sectionBC.querySelectorAll("details[open]").forEach((el) => {
    const key = el.getAttribute("data-key");
    if (key !== null) keys.add(key);
  });
  return keys;
}

function render(): void {
  const question = (document.getElementById("question") as HTMLInputElement | null)?.value ?? "";
  const open = openKeys();
  sectionA.innerHTML = renderSectionA(config, validation);
  const input = document.getElementById("question") as HTMLInputElement | null;
  if (input !== null) input.value = question;
  sectionBC.innerHTML = renderCards(state.cards);
  open.forEach((key) => {
    sectionBC.querySelector(`details[data-key="${key}"]`)?.setAttribute("open", "");
  });
}

function requestFor(question: string, combo: ComboSelection): LinkRequestBody {
  const body: LinkRequestBody = {
    question,
    span_model: combo.span_model,
    mode: combo.mode,
  };
  if (combo.embedding !== null) body.embedding = combo.embedding;
  return body;
}

async function dispatch(id: number): Promise<void> {
  const body = requests.get(id);
  if (body === undefined) return;
  const outcome = await postLink(body);
  state = outcome.ok ? resolveCard(state, id, outcome.result) : failCard(state, id, outcome.error);
  if (!state.cards.some((c) => c.id === id)) requests.delete(id);
  render();
}

function selectValue(elementId: string): string {
  return (document.getElementById(elementId) as HTMLSelectElement).value;
}

function onSubmit(event: Event): void {
  event.preventDefault();
  const input = document.getElementById("question") as HTMLInputElement;
  const question = input.value.trim();
  if (question === "") {
    validation = "Enter a question first.";
    render();
    return;
  }
  validation = null;
  const embedding = selectValue("embedding");
  const combo: ComboSelection = {
    span_model: selectValue("span-model"),
    mode: selectValue("mode"),
    embedding: embedding === "" ? null : embedding,
  };
  const submitted = submitCard(state, question, combo);
  state = submitted.state;
  requests.set(submitted.id, requestFor(question, combo));
  render();
  void dispatch(submitted.id);
}

function onCardsClick(event: Event): void {
  const target = event.target as HTMLElement;
  const removeId = target.getAttribute("data-remove");
  if (removeId !== null) {
    const id = Number(removeId);
    state = removeCard(state, id);
    requests.delete(id);
    render();
    return;
  }
  const retryId = target.getAttribute("data-retry");
  if (retryId !== null) {
    const id = Number(retryId);
    state = retryCard(state, id);
    render();
    void dispatch(id);
  }
}

async function start(): Promise<void> {
  render();
  try {
    config = await fetchConfig();
  } catch (exc) {
    sectionA.innerHTML = `<section id="section-a"><p class="banner error-banner">${
      exc instanceof Error ? exc.message : String(exc)
    }</p></section>`;
    return;
  }
  render();
  sectionA.addEventListener("submit", onSubmit);
  sectionBC.addEventListener("click", onCardsClick);
}

void start();
