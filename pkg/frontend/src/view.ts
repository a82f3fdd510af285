// DOM rendering. The whole app re-renders from AppState on every update;
// at chat scale that is simpler and fast enough.

import type { AppState, Chip, PredictionView, TurnCard } from "./store.js";
import { canSend } from "./store.js";

export interface Handlers {
  onSend(text: string): void;
  onRetry(text: string): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function chipNode(c: Chip, extraClass = ""): HTMLElement {
  const node = el("span", `chip ${c.label}${extraClass ? " " + extraClass : ""}`, c.display);
  node.dataset.kind = c.kind;
  node.dataset.id = c.id;
  node.dataset.label = c.label;
  if (c.rationale) node.title = c.rationale;
  return node;
}

function panel(title: string, chips: Chip[], testId: string): HTMLElement {
  const box = el("div", "panel");
  box.dataset.testid = testId;
  box.appendChild(el("h3", undefined, title));
  const body = el("div", "chips");
  if (chips.length === 0) {
    body.appendChild(el("span", "empty", "nothing tracked yet"));
  }
  for (const c of chips) body.appendChild(chipNode(c));
  box.appendChild(body);
  return box;
}

function predictionRow(p: PredictionView): HTMLElement {
  const row = el("div", `prediction-row${p.isNew ? " new" : ""}`);
  row.appendChild(el("code", "token", p.placeholder));
  if (p.resolved !== undefined) {
    row.appendChild(el("span", "arrow", "→"));
    row.appendChild(el("span", "resolved", p.resolved));
  }
  return row;
}

function turnCard(card: TurnCard): HTMLElement {
  const box = el("section", "turn-card");
  box.dataset.turn = String(card.turn);
  const head = el("header");
  head.appendChild(el("span", "phase", card.phase));
  if (card.socialTurn) {
    const badge = el("span", "badge social", "social turn");
    badge.dataset.testid = "social-badge";
    head.appendChild(badge);
  }
  box.appendChild(head);

  const pred = el("div", "prediction");
  pred.dataset.testid = "prediction";
  for (const p of card.prediction) pred.appendChild(predictionRow(p));
  box.appendChild(pred);

  const delta = el("div", "delta");
  delta.dataset.testid = "delta";
  for (const d of card.delta) delta.appendChild(chipNode(d, "highlight"));
  box.appendChild(delta);
  return box;
}

export function render(root: HTMLElement, state: AppState, handlers: Handlers): void {
  const previousDraft = root.querySelector<HTMLInputElement>("#composer-input")?.value ?? "";
  root.textContent = "";

  // retry banner
  if (state.error !== null) {
    const banner = el("div", "banner error");
    banner.dataset.testid = "retry-banner";
    banner.appendChild(el("span", undefined, state.error));
    const retry = el("button", "retry", "Retry");
    const failed = state.failedText ?? "";
    retry.addEventListener("click", () => handlers.onRetry(failed));
    banner.appendChild(retry);
    root.appendChild(banner);
  }

  // transcript
  const transcript = el("div", "transcript");
  transcript.dataset.testid = "transcript";
  for (const bubble of state.transcript) {
    transcript.appendChild(el("div", `bubble ${bubble.who}`, bubble.text));
  }
  if (state.pending) transcript.appendChild(el("div", "bubble bot pending", "…"));
  root.appendChild(transcript);

  // composer
  const composer = el("form", "composer");
  const input = el("input");
  input.id = "composer-input";
  input.type = "text";
  input.placeholder = "say something about movies";
  input.value = previousDraft;
  const send = el("button", "send", "Send");
  send.type = "submit";
  const refresh = () => {
    send.disabled = !canSend(state, input.value);
  };
  refresh();
  input.addEventListener("input", refresh);
  composer.addEventListener("submit", (event) => {
    event.preventDefault();
    if (!canSend(state, input.value)) return;
    handlers.onSend(input.value.trim());
  });
  composer.appendChild(input);
  composer.appendChild(send);
  root.appendChild(composer);

  // tracking inspector, side by side
  const inspector = el("div", "inspector");
  inspector.appendChild(panel("user tracking", state.latestUser, "user-panel"));
  inspector.appendChild(panel("system tracking", state.latestSystem, "system-panel"));
  root.appendChild(inspector);

  // per-turn prediction & delta cards, newest first
  const cards = el("div", "cards");
  for (const card of [...state.cards].reverse()) cards.appendChild(turnCard(card));
  root.appendChild(cards);
}
