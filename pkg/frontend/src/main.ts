// App shell: hash router, single store, fetch-then-render per view.

import { ApiClient, ApiError } from "./api.js";
import { escapeHtml } from "./format.js";
import { decodeState, encodeState, DEFAULT_STATE, type ViewState } from "./state.js";
import { buildNodeViewModel, renderNodeView } from "./views/node.js";
import { renderNodeList, renderTraceList } from "./views/lists.js";
import { buildSystemViewModel, renderSystemView } from "./views/system.js";
import { buildTraceViewModel, renderTraceView } from "./views/trace.js";

const api = new ApiClient("");
const app = document.getElementById("app") as HTMLElement;

let current: ViewState = { ...DEFAULT_STATE };
let renderToken = 0;

function navigate(next: Partial<ViewState>): void {
  const merged: ViewState = { ...current, ...next };
  const hash = encodeState(merged);
  if (hash === window.location.hash) {
    void render(merged);
  } else {
    window.location.hash = hash; // hashchange listener triggers render
  }
}

function navBar(state: ViewState): string {
  const tab = (view: ViewState["view"], label: string, hash: string) =>
    `<a href="${hash}" class="${state.view === view ? "active" : ""}">${label}</a>`;
  return (
    `<nav>` +
    tab("system", "System", "#/system") +
    tab("node", "Nodes", "#/node") +
    tab("trace", "Traces", "#/trace") +
    `</nav>`
  );
}

function errorPanel(message: string, status?: number): string {
  const kind = status === 404 ? "not found" : "request failed";
  return (
    `<div class="error-panel"><h2>${escapeHtml(kind)}</h2>` +
    `<p>${escapeHtml(message)}</p>` +
    `<button data-role="retry">retry</button> <a href="#/system">back to system view</a></div>`
  );
}

async function viewHtml(state: ViewState): Promise<string> {
  if (state.view === "system") {
    return renderSystemView(buildSystemViewModel(await api.system()));
  }
  if (state.view === "node") {
    if (state.node === null) return renderNodeList(await api.nodes());
    return renderNodeView(buildNodeViewModel(await api.nodeDetail(state.node, state)), state);
  }
  if (state.trace === null) return renderTraceList(await api.traces(state), state);
  return renderTraceView(buildTraceViewModel(await api.traceDetail(state.trace)));
}

async function render(state: ViewState): Promise<void> {
  current = state;
  const token = ++renderToken;
  app.innerHTML = `${navBar(state)}<p class="loading">loading…</p>`;
  try {
    const html = await viewHtml(state);
    if (token !== renderToken) return; // superseded by a newer navigation
    app.innerHTML = navBar(state) + html;
  } catch (error) {
    if (token !== renderToken) return;
    const status = error instanceof ApiError ? error.status : undefined;
    const message = error instanceof Error ? error.message : String(error);
    app.innerHTML = navBar(state) + errorPanel(message, status);
  }
}

function onClick(event: Event): void {
  const target = event.target as HTMLElement;
  const retry = target.closest("[data-role=retry]");
  if (retry) {
    void render(current);
    return;
  }
  const nodeGlyph = target.closest<HTMLElement>("[data-node]");
  if (nodeGlyph?.dataset.node) {
    event.preventDefault();
    navigate({ view: "node", node: nodeGlyph.dataset.node, offset: 0 });
    return;
  }
  const insightTag = target.closest<HTMLElement>(".tag[data-insight]");
  if (insightTag?.dataset.insight && current.view === "node") {
    event.preventDefault();
    navigate({ insight: insightTag.dataset.insight, offset: 0 });
    return;
  }
  const clear = target.closest("[data-role=clear]");
  if (clear) {
    event.preventDefault();
    navigate({ insight: null, minScore: null, maxScore: null, offset: 0 });
    return;
  }
  const pagerButton = target.closest<HTMLElement>("[data-role=prev], [data-role=next]");
  if (pagerButton) {
    event.preventDefault();
    const delta = pagerButton.dataset.role === "next" ? 100 : -100;
    navigate({ offset: Math.max(0, current.offset + delta) });
  }
}

function onSubmit(event: Event): void {
  const form = event.target as HTMLFormElement;
  if (form.dataset.role === "filters") {
    event.preventDefault();
    const data = new FormData(form);
    const asScore = (name: string): number | null => {
      const raw = String(data.get(name) ?? "").trim();
      return raw === "" || Number.isNaN(Number(raw)) ? null : Number(raw);
    };
    const insight = String(data.get("insight") ?? "").trim();
    navigate({
      minScore: asScore("min_score"),
      maxScore: asScore("max_score"),
      insight: insight === "" ? null : insight,
      offset: 0,
    });
  } else if (form.dataset.role === "search") {
    event.preventDefault();
    const search = String(new FormData(form).get("search") ?? "").trim();
    navigate({ search: search === "" ? null : search, offset: 0 });
  }
}

window.addEventListener("hashchange", () => void render(decodeState(window.location.hash)));
app.addEventListener("click", onClick);
app.addEventListener("submit", onSubmit);
void render(decodeState(window.location.hash));
