// Typed client over the session service. All endpoint paths are taken
// from the contract document served by the backend; the only path known
// a priori is the contract's own location.

import type {
  AnswerBatch,
  Contract,
  SessionState,
  SessionSummary,
} from "./types.js";

const CONTRACT_PATH = "/api/v1/contract";

export class ConflictError extends Error {
  constructor(detail: string) {
    super(detail);
    this.name = "ConflictError";
  }
}

export class ApiClient {
  private contract: Contract;
  private base: string;

  constructor(contract: Contract, base = "") {
    this.contract = contract;
    this.base = base;
  }

  static async connect(base = ""): Promise<ApiClient> {
    const res = await fetch(base + CONTRACT_PATH);
    if (!res.ok) throw new Error(`contract fetch failed: ${res.status}`);
    return new ApiClient((await res.json()) as Contract, base);
  }

  endpoint(name: string, params: Record<string, string> = {}): string {
    const spec = this.contract.endpoints[name];
    if (!spec) throw new Error(`endpoint ${name} missing from contract`);
    let path = spec.path;
    for (const [key, value] of Object.entries(params)) {
      path = path.replace(`{${key}}`, encodeURIComponent(value));
    }
    return this.base + path;
  }

  private async request<T>(name: string, params: Record<string, string>, init?: RequestInit): Promise<T> {
    const res = await fetch(this.endpoint(name, params), init);
    if (res.status === 409) {
      const body = (await res.json().catch(() => ({ detail: "conflict" }))) as {
        detail?: string;
      };
      throw new ConflictError(body.detail ?? "conflict");
    }
    if (!res.ok) {
      const text = await res.text();
      throw new Error(`${name} failed (${res.status}): ${text}`);
    }
    return (await res.json()) as T;
  }

  listSessions(): Promise<{ sessions: SessionSummary[] }> {
    return this.request("list_sessions", {});
  }

  createSession(config: Record<string, unknown>): Promise<{ session_id: string }> {
    return this.request("create_session", {}, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config),
    });
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.request("get_state", { session_id: sessionId });
  }

  submitAnswers(
    sessionId: string,
    batch: AnswerBatch,
  ): Promise<{ phase: string; accepted: number }> {
    return this.request("submit_answers", { session_id: sessionId }, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(batch),
    });
  }

  async fetchTrace(sessionId: string): Promise<string> {
    const res = await fetch(this.endpoint("download_trace", { session_id: sessionId }));
    if (!res.ok) throw new Error(`trace fetch failed: ${res.status}`);
    return await res.text();
  }

  traceUrl(sessionId: string): string {
    return this.endpoint("download_trace", { session_id: sessionId });
  }
}
