// Thin typed client over fetch. Every call goes to the engine's local
// HTTP service; nothing in the UI touches the store directly.

import type {
  ApiError,
  CommitPayload,
  GraphPayload,
  HeadPayload,
  VariablesPayload,
} from "./types.js";

export class ApiRefusal extends Error {
  readonly status: number;
  readonly body: ApiError;

  constructor(status: number, body: ApiError) {
    super(body.message || `HTTP ${status}`);
    this.status = status;
    this.body = body;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(base = "", fetchImpl: FetchLike = fetch) {
    this.base = base.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    const body = await resp.json();
    if (!resp.ok) {
      throw new ApiRefusal(resp.status, body as ApiError);
    }
    return body as T;
  }

  graph(fold: boolean): Promise<GraphPayload> {
    return this.request(`/graph?fold=${fold}`);
  }

  head(): Promise<HeadPayload> {
    return this.request("/head");
  }

  commit(cid: string): Promise<CommitPayload> {
    return this.request(`/commit/${encodeURIComponent(cid)}`);
  }

  variables(
    cid: string,
    page: number,
    filter: string,
  ): Promise<VariablesPayload> {
    const params = new URLSearchParams({ page: String(page) });
    if (filter) params.set("filter", filter);
    return this.request(
      `/commit/${encodeURIComponent(cid)}/variables?${params}`,
    );
  }

  search(query: string): Promise<{ commits: string[] }> {
    return this.request(`/search?q=${encodeURIComponent(query)}`);
  }

  checkout(
    commit: string,
    mode: "both" | "data",
  ): Promise<{ head_code: string; head_data: string }> {
    return this.request("/checkout", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ commit, mode }),
    });
  }

  tag(commit: string, tag: string, message = ""): Promise<{ commit: string }> {
    return this.request("/tag", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ commit, tag, message }),
    });
  }

  // Long-poll; resolves with the new sequence number once anything changed
  // (or the server's poll window expired).
  events(since: number): Promise<{ seq: number }> {
    return this.request(`/events?since=${since}`);
  }
}
