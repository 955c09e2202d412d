// View state <-> URL hash. Every screen the app can show serializes to a
// hash fragment that restores it exactly (shareable deep links).

export type ViewName = "system" | "node" | "trace";

export interface ViewState {
  view: ViewName;
  node: string | null;
  trace: string | null;
  insight: string | null;
  minScore: number | null;
  maxScore: number | null;
  search: string | null;
  offset: number;
}

export const DEFAULT_STATE: ViewState = {
  view: "system",
  node: null,
  trace: null,
  insight: null,
  minScore: null,
  maxScore: null,
  search: null,
  offset: 0,
};

function clampScore(value: number): number {
  return Math.min(1, Math.max(0, value));
}

export function encodeState(state: ViewState): string {
  let path = "#/system";
  if (state.view === "node") {
    path = state.node === null ? "#/node" : `#/node/${encodeURIComponent(state.node)}`;
  } else if (state.view === "trace") {
    path = state.trace === null ? "#/trace" : `#/trace/${encodeURIComponent(state.trace)}`;
  }
  const params = new URLSearchParams();
  if (state.insight !== null) params.set("insight", state.insight);
  if (state.minScore !== null) params.set("min_score", String(state.minScore));
  if (state.maxScore !== null) params.set("max_score", String(state.maxScore));
  if (state.search !== null && state.search !== "") params.set("search", state.search);
  if (state.offset > 0) params.set("offset", String(state.offset));
  const query = params.toString();
  return query ? `${path}?${query}` : path;
}

export function decodeState(hash: string): ViewState {
  const state: ViewState = { ...DEFAULT_STATE };
  const stripped = hash.startsWith("#") ? hash.slice(1) : hash;
  const [path, query] = stripped.split("?", 2);
  const segments = path.split("/").filter((s) => s.length > 0);

  if (segments[0] === "node") {
    state.view = "node";
    state.node = segments.length > 1 ? decodeURIComponent(segments[1]) : null;
  } else if (segments[0] === "trace") {
    state.view = "trace";
    state.trace = segments.length > 1 ? decodeURIComponent(segments[1]) : null;
  } else {
    state.view = "system";
  }

  if (query) {
    const params = new URLSearchParams(query);
    const insight = params.get("insight");
    if (insight) state.insight = insight;
    const minScore = params.get("min_score");
    if (minScore !== null && minScore !== "" && !Number.isNaN(Number(minScore))) {
      state.minScore = clampScore(Number(minScore));
    }
    const maxScore = params.get("max_score");
    if (maxScore !== null && maxScore !== "" && !Number.isNaN(Number(maxScore))) {
      state.maxScore = clampScore(Number(maxScore));
    }
    // invariant: min <= max when both are present
    if (state.minScore !== null && state.maxScore !== null && state.minScore > state.maxScore) {
      [state.minScore, state.maxScore] = [state.maxScore, state.minScore];
    }
    const search = params.get("search");
    if (search) state.search = search;
    const offset = params.get("offset");
    if (offset !== null && /^\d+$/.test(offset)) state.offset = Number(offset);
  }
  return state;
}

// Query string for /api/nodes/{id}: filters are applied server-side only.
export function nodeQuery(state: ViewState): string {
  const params = new URLSearchParams();
  if (state.minScore !== null) params.set("min_score", String(state.minScore));
  if (state.maxScore !== null) params.set("max_score", String(state.maxScore));
  if (state.insight !== null) params.set("insight", state.insight);
  if (state.offset > 0) params.set("offset", String(state.offset));
  return params.toString();
}

export function traceListQuery(state: ViewState): string {
  const params = new URLSearchParams();
  if (state.search) params.set("search", state.search);
  if (state.offset > 0) params.set("offset", String(state.offset));
  return params.toString();
}
