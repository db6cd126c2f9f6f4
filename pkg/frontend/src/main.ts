// Operator console wiring. All history state is server-derived: turns are
// rebuilt from trace steps, and a full page reload reconstructs the same
// view from GET /v1/sessions/{id}/trace alone (the session id rides in the
// URL hash). The only client-only state is the draft text and panel toggles.

import { ApiClient, ApiError } from "./api.js";
import { buildTurns, scoreLine, turnFromStep, type ChatTurnView, type TraceStepView } from "./model.js";

const api = new ApiClient("");

interface AppState {
  sessionId: string | null;
  steps: TraceStepView[];
  personLoaded: boolean;
  busy: boolean;
}

const state: AppState = { sessionId: null, steps: [], personLoaded: false, busy: false };

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

function $(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

// --- banner ---

function showBanner(message: string | null): void {
  const banner = $("banner");
  banner.textContent = message ?? "";
  banner.classList.toggle("hidden", message === null);
}

function describeFailure(error: unknown): string {
  if (error instanceof ApiError) {
    if (error.code === "RegionNotFound") {
      return "The service could not find that region. Try naming the spot differently (sleeves, collar, hem).";
    }
    return error.message;
  }
  return "Service unreachable. Is the tryfit server running?";
}

// --- turn rendering ---

function previousImageUrl(turns: ChatTurnView[], index: number): string | null {
  for (let i = index - 1; i >= 0; i -= 1) {
    const url = turns[i].imageUrl;
    if (url) return url;
  }
  return null;
}

function renderMaskOverlay(container: HTMLElement, image: HTMLImageElement, turn: ChatTurnView): void {
  if (!turn.maskBbox) return;
  const [x, y, w, h] = turn.maskBbox;
  const overlay = el("div", "mask-overlay hidden");
  const place = () => {
    const nw = image.naturalWidth || 1;
    const nh = image.naturalHeight || 1;
    overlay.style.left = `${(x / nw) * 100}%`;
    overlay.style.top = `${(y / nh) * 100}%`;
    overlay.style.width = `${(w / nw) * 100}%`;
    overlay.style.height = `${(h / nh) * 100}%`;
  };
  if (image.complete) place();
  else image.addEventListener("load", place);
  container.appendChild(overlay);
}

function renderCompare(turn: ChatTurnView, beforeUrl: string): HTMLElement {
  const wrap = el("div", "compare");
  const before = el("img", "compare-before") as HTMLImageElement;
  before.src = beforeUrl;
  const clip = el("div", "compare-clip");
  const after = el("img", "compare-after") as HTMLImageElement;
  after.src = turn.imageUrl ?? "";
  clip.appendChild(after);
  const range = el("input", "compare-range") as HTMLInputElement;
  range.type = "range";
  range.min = "0";
  range.max = "100";
  range.value = "50";
  clip.style.width = "50%";
  range.addEventListener("input", () => {
    clip.style.width = `${range.value}%`;
  });
  wrap.append(before, clip, range);
  return wrap;
}

function renderTracePanel(turn: ChatTurnView, overlay: HTMLElement | null): HTMLElement {
  const details = el("details", "trace-panel");
  const summary = el("summary", undefined, "trace");
  details.appendChild(summary);
  const rows = el("div", "trace-rows");
  const add = (label: string, value: string | null) => {
    if (value === null) return;
    const row = el("div", "trace-row");
    row.append(el("span", "trace-label", label), el("span", "trace-value", value));
    rows.appendChild(row);
  };
  add("function", turn.functionName);
  add("route", turn.routeKind);
  add("garment", turn.garmentId);
  add("match", scoreLine(turn));
  if (turn.matchScore === null) add("τ", turn.tau.toFixed(3));
  add("mask bits", turn.maskSetBits === null ? null : String(turn.maskSetBits));
  add("mask bbox", turn.maskBbox ? `[${turn.maskBbox.join(", ")}]` : null);
  add("error", turn.errorCode);
  add(
    "backends",
    turn.backendCalls.map((c) => `${c.kind}:${c.mode} ${c.latency_ms}ms`).join(", ") || null,
  );
  add("raw response", turn.rawResponse);
  details.appendChild(rows);
  details.addEventListener("toggle", () => {
    overlay?.classList.toggle("hidden", !details.open);
  });
  return details;
}

function renderTurn(turn: ChatTurnView, index: number, turns: ChatTurnView[]): HTMLElement {
  const item = el("li", `turn outcome-${turn.outcome}`);
  const user = el("div", "bubble user", turn.userText);
  item.appendChild(user);

  const assistant = el("div", "bubble assistant");
  assistant.appendChild(el("span", `badge badge-${turn.outcomeBadge.toLowerCase()}`, turn.outcomeBadge));
  assistant.appendChild(el("span", "reply", turn.assistantReply));
  item.appendChild(assistant);

  let overlay: HTMLElement | null = null;
  if (turn.imageUrl) {
    const figure = el("div", "result");
    const image = el("img", "result-image") as HTMLImageElement;
    image.src = turn.imageUrl;
    figure.appendChild(image);
    renderMaskOverlay(figure, image, turn);
    overlay = figure.querySelector(".mask-overlay");
    item.appendChild(figure);
    const beforeUrl = previousImageUrl(turns, index);
    if (beforeUrl) {
      item.appendChild(renderCompare(turn, beforeUrl));
    }
  }
  item.appendChild(renderTracePanel(turn, overlay));
  return item;
}

export function renderHistory(steps: TraceStepView[]): void {
  const turns = buildTurns(steps);
  const list = $("turns");
  list.replaceChildren(...turns.map((turn, index) => renderTurn(turn, index, turns)));
  list.scrollTop = list.scrollHeight;
}

// --- actions ---

function setBusy(busy: boolean): void {
  state.busy = busy;
  ($("send") as HTMLButtonElement).disabled = busy;
  ($("text") as HTMLInputElement).disabled = busy;
}

async function ensureSession(): Promise<string> {
  if (state.sessionId) return state.sessionId;
  const sessionId = await api.createSession();
  state.sessionId = sessionId;
  window.location.hash = `s=${sessionId}`;
  $("session-label").textContent = sessionId.slice(0, 12);
  return sessionId;
}

async function sendMessage(): Promise<void> {
  if (state.busy) return;
  const input = $("text") as HTMLInputElement;
  const text = input.value.trim();
  const fileInput = $("image") as HTMLInputElement;
  const file = fileInput.files && fileInput.files[0] ? fileInput.files[0] : null;
  if (!text && !file) return;
  setBusy(true);
  showBanner(null);
  try {
    const sessionId = await ensureSession();
    const response = await api.postMessage(sessionId, text, file);
    if (response.trace) {
      state.steps = [...state.steps, response.trace];
      renderHistory(state.steps);
    } else {
      $("upload-note").textContent = response.reply;
    }
    if (file) {
      state.personLoaded = true;
      fileInput.value = "";
    }
    input.value = "";
  } catch (error) {
    showBanner(describeFailure(error));
  } finally {
    setBusy(false);
  }
}

async function restoreFromHash(): Promise<void> {
  const match = window.location.hash.match(/s=([0-9a-f-]+)/);
  if (!match) return;
  try {
    const steps = await api.getTrace(match[1]);
    state.sessionId = match[1];
    state.steps = steps;
    state.personLoaded = steps.length > 0;
    $("session-label").textContent = match[1].slice(0, 12);
    renderHistory(steps);
  } catch (error) {
    showBanner(describeFailure(error));
  }
}

async function applyTau(): Promise<void> {
  const slider = $("tau") as HTMLInputElement;
  try {
    const applied = await api.setTau(Number(slider.value));
    $("tau-value").textContent = applied.toFixed(2);
    showBanner(null);
  } catch (error) {
    showBanner(describeFailure(error));
  }
}

async function searchCatalog(): Promise<void> {
  const query = ($("catalog-query") as HTMLInputElement).value.trim();
  if (!query) return;
  const list = $("catalog-results");
  try {
    const response = await api.searchCatalog(query, 5);
    list.replaceChildren(
      ...response.results.map((result) => {
        const row = el("li", "catalog-row");
        row.append(
          el("span", "catalog-id", result.garment_id),
          el("span", "catalog-caption", result.caption ?? ""),
          el("span", "catalog-score", `${result.score.toFixed(3)} (τ ${response.tau.toFixed(2)})`),
        );
        return row;
      }),
    );
    showBanner(null);
  } catch (error) {
    showBanner(describeFailure(error));
  }
}

function wire(): void {
  $("send").addEventListener("click", () => void sendMessage());
  ($("text") as HTMLInputElement).addEventListener("keydown", (event) => {
    if (event.key === "Enter") void sendMessage();
  });
  $("new-session").addEventListener("click", () => {
    state.sessionId = null;
    state.steps = [];
    state.personLoaded = false;
    window.location.hash = "";
    $("session-label").textContent = "none";
    renderHistory([]);
    void ensureSession().catch((error) => showBanner(describeFailure(error)));
  });
  $("tau").addEventListener("change", () => void applyTau());
  $("catalog-search").addEventListener("click", () => void searchCatalog());
  void restoreFromHash();
}

if (typeof document !== "undefined" && document.getElementById("turns")) {
  wire();
}
