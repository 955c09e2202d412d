import type {
  MetaPayload,
  NodeDetailPayload,
  NodeListPayload,
  SystemPayload,
  TraceDetailPayload,
  TraceListPayload,
} from "./types.js";
import { nodeQuery, traceListQuery, type ViewState } from "./state.js";

export class ApiError extends Error {
  constructor(message: string, public status: number) {
    super(message);
    this.name = "ApiError";
  }
}

async function fetchJson<T>(url: string): Promise<T> {
  const response = await fetch(url);
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      detail = body?.error?.message ?? detail;
    } catch {
      // non-JSON error body: keep the status text
    }
    throw new ApiError(detail, response.status);
  }
  return response.json() as Promise<T>;
}

export class ApiClient {
  constructor(private base: string = "") {}

  meta(): Promise<MetaPayload> {
    return fetchJson(`${this.base}/api/meta`);
  }

  system(): Promise<SystemPayload> {
    return fetchJson(`${this.base}/api/system`);
  }

  nodes(): Promise<NodeListPayload> {
    return fetchJson(`${this.base}/api/nodes`);
  }

  nodeDetail(nodeId: string, state: ViewState): Promise<NodeDetailPayload> {
    const query = nodeQuery(state);
    const suffix = query ? `?${query}` : "";
    return fetchJson(`${this.base}/api/nodes/${encodeURIComponent(nodeId)}${suffix}`);
  }

  traces(state: ViewState): Promise<TraceListPayload> {
    const query = traceListQuery(state);
    const suffix = query ? `?${query}` : "";
    return fetchJson(`${this.base}/api/traces${suffix}`);
  }

  traceDetail(traceId: string): Promise<TraceDetailPayload> {
    return fetchJson(`${this.base}/api/traces/${encodeURIComponent(traceId)}`);
  }
}
