/** Pure HTML renderers for the three console sections.
 *
 * Every function maps state to a string with no DOM access, so recorded
 * service fixtures can drive snapshot tests. Server-reported values
 * (distances in particular) are inserted verbatim.
 */
import type { Card } from "./state.js";
import { comboTitle } from "./state.js";
import type { ConfigResponse, EntityRow, SpanBlock } from "./types.js";

/** Ranked-entities boxes never show more than this many rows. */
export const MAX_RANKED_ROWS = 10;

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function options(values: string[], labels?: Map<string, string>): string {
  return values
    .map((v) => `<option value="${escapeHtml(v)}">${escapeHtml(labels?.get(v) ?? v)}</option>`)
    .join("");
}

/** Section A: question entry plus one combination picker. */
export function renderSectionA(config: ConfigResponse | null, validation: string | null): string {
  if (config === null) {
    return `<section id="section-a"><p class="muted">Loading configuration...</p></section>`;
  }
  const samples = options(config.sample_questions);
  const embeddings = `<option value="">no embedding</option>` + options(config.embeddings);
  const note = validation === null ? "" : `<p class="validation">${escapeHtml(validation)}</p>`;
  return `<section id="section-a">
  <form id="ask-form" autocomplete="off">
    <label>Question
      <input id="question" name="question" type="text" list="sample-questions"
             placeholder="Type a question or pick a sample" />
    </label>
    <datalist id="sample-questions">${samples}</datalist>
    <div class="combo-row">
      <label>Span model<select id="span-model" name="span_model">${options(config.span_models)}</select></label>
      <label>Mode<select id="mode" name="mode">${options(config.modes)}</select></label>
      <label>Embedding<select id="embedding" name="embedding">${embeddings}</select></label>
      <button type="submit">Link</button>
    </div>
    ${note}
  </form>
</section>`;
}

function renderEntityRow(entity: EntityRow, rankNumber: number): string {
  return `<tr>
  <td class="rank">${rankNumber}</td>
  <td><a href="${escapeHtml(entity.url)}" target="_blank" rel="noopener">${escapeHtml(entity.label)}</a></td>
  <td class="etype">${escapeHtml(entity.type)}</td>
  <td class="distance">${escapeHtml(entity.distance)}</td>
</tr>`;
}

function renderSpan(span: SpanBlock, cardId: number, spanIndex: number): string {
  const banner =
    span.error === null
      ? ""
      : `<p class="banner error-banner">span failed: ${escapeHtml(span.error)}</p>`;
  const top = span.entities[0];
  const topBlock =
    top === undefined
      ? `<p class="muted">no candidates</p>`
      : `<p class="top-entity">
  <a href="${escapeHtml(top.url)}" target="_blank" rel="noopener">${escapeHtml(top.label)}</a>
  <span class="etype">${escapeHtml(top.type)}</span>
  <span class="distance" title="${escapeHtml(span.distance_kind)}">${escapeHtml(top.distance)}</span>
</p>`;
  const rows = span.entities
    .slice(0, MAX_RANKED_ROWS)
    .map((entity, i) => renderEntityRow(entity, i + 1))
    .join("");
  const ranked =
    span.entities.length === 0
      ? ""
      : `<details data-key="ranked-${cardId}-${spanIndex}">
  <summary>Ranked Entities (${Math.min(span.entities.length, MAX_RANKED_ROWS)})</summary>
  <table class="ranked"><tbody>${rows}</tbody></table>
  <p class="muted">A lower distance means a better match.</p>
</details>`;
  return `<div class="span-block">
  <p class="span-head"><span class="span-text">${escapeHtml(span.text)}</span>
    <span class="etype">${escapeHtml(span.type)}</span>
    ${span.disambiguation_ran ? `<span class="chip">re-ranked</span>` : ""}
  </p>
  ${banner}${topBlock}${ranked}
</div>`;
}

/** Section B: the body of one combination card. */
export function renderCardBody(card: Card): string {
  if (card.status === "pending") {
    return `<p class="muted pending">linking&hellip;</p>`;
  }
  if (card.status === "failed") {
    const err = card.error ?? { code: "unknown", message: "no error details" };
    return `<p class="banner error-banner">error[${escapeHtml(err.code)}]: ${escapeHtml(err.message)}</p>
<button class="retry" data-retry="${card.id}">Retry</button>`;
  }
  const spans = card.result?.spans ?? [];
  if (spans.length === 0) {
    return `<p class="muted">no entity mentions detected</p>`;
  }
  return spans.map((span, i) => renderSpan(span, card.id, i)).join("");
}

export function renderCard(card: Card): string {
  return `<article class="card" data-card="${card.id}">
<header>
  <h3>${escapeHtml(comboTitle(card.combo))}</h3>
  <button class="remove" data-remove="${card.id}" title="Remove this combination">&times;</button>
</header>
<p class="question-echo">${escapeHtml(card.question)}</p>
${renderCardBody(card)}
</article>`;
}

/** Sections B+C: all cards in submission order, or an empty-state note. */
export function renderCards(cards: readonly Card[]): string {
  if (cards.length === 0) {
    return `<section id="cards"><p class="muted empty-state">No combinations yet. Ask a question above to add one.</p></section>`;
  }
  return `<section id="cards">${cards.map(renderCard).join("\n")}</section>`;
}
