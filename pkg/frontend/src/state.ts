/** Console state and its pure reducers.
 *
 * The rendered page is a function of (config, ordered submissions and
 * their outcomes, removals), so every reducer returns a new state and
 * never mutates its input; tests snapshot render output directly from
 * reduced states.
 */
import type { ComboSelection, ErrorBody, LinkResponse } from "./types.js";

export type CardStatus = "pending" | "done" | "failed";

export interface Card {
  id: number;
  question: string;
  combo: ComboSelection;
  status: CardStatus;
  result: LinkResponse | null;
  error: ErrorBody | null;
}

export interface ConsoleState {
  nextId: number;
  cards: Card[];
}

export const initialState: ConsoleState = { nextId: 1, cards: [] };

export function comboTitle(combo: ComboSelection): string {
  return `${combo.span_model} / ${combo.mode} / ${combo.embedding ?? "no embedding"}`;
}

/** Append a pending card; returns the new state and the card's id so an
 * in-flight response can find its card even after others resolve. */
export function submitCard(
  state: ConsoleState,
  question: string,
  combo: ComboSelection,
): { state: ConsoleState; id: number } {
  const card: Card = {
    id: state.nextId,
    question,
    combo: { ...combo },
    status: "pending",
    result: null,
    error: null,
  };
  return {
    state: { nextId: state.nextId + 1, cards: [...state.cards, card] },
    id: card.id,
  };
}

function replaceCard(state: ConsoleState, id: number, patch: Partial<Card>): ConsoleState {
  if (!state.cards.some((c) => c.id === id)) {
    return state; // card was removed while its request was in flight
  }
  return {
    nextId: state.nextId,
    cards: state.cards.map((c) => (c.id === id ? { ...c, ...patch } : c)),
  };
}

export function resolveCard(state: ConsoleState, id: number, result: LinkResponse): ConsoleState {
  return replaceCard(state, id, { status: "done", result, error: null });
}

export function failCard(state: ConsoleState, id: number, error: ErrorBody): ConsoleState {
  return replaceCard(state, id, { status: "failed", error, result: null });
}

/** Put a failed card back into the pending state for a retry. */
export function retryCard(state: ConsoleState, id: number): ConsoleState {
  return replaceCard(state, id, { status: "pending", error: null });
}

/** Drop one card; the remaining cards keep their relative order. */
export function removeCard(state: ConsoleState, id: number): ConsoleState {
  return { nextId: state.nextId, cards: state.cards.filter((c) => c.id !== id) };
}
