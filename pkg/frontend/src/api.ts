/** Typed client for the session API. */

import type {
  CommonPair,
  EvaluateResponse,
  LayoutDoc,
  SelectionResponse,
  SessionRequest,
  SessionStatus,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<never> {
  let code = "http_error";
  let message = `${resp.status} ${resp.statusText}`;
  try {
    const body = await resp.json();
    if (body?.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(resp.status, code, message);
}

export class ApiClient {
  constructor(private base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.base + path, init);
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async createSession(req: SessionRequest): Promise<{ session_id: string }> {
    return this.post("/api/sessions", req);
  }

  async status(sessionId: string): Promise<{ state: SessionStatus; error?: string }> {
    return this.request(`/api/sessions/${sessionId}/status`);
  }

  async layout(sessionId: string): Promise<LayoutDoc> {
    return this.request(`/api/sessions/${sessionId}/layout`);
  }

  async evaluate(
    sessionId: string,
    keywordA: string,
    keywordB?: string,
    bins?: number,
  ): Promise<EvaluateResponse> {
    return this.post(`/api/sessions/${sessionId}/evaluate`, {
      keyword_a: keywordA,
      keyword_b: keywordB ?? null,
      bins: bins ?? 20,
    });
  }

  async selection(sessionId: string, recordIds: string[], topK = 10): Promise<SelectionResponse> {
    return this.post(`/api/sessions/${sessionId}/selection`, {
      record_ids: recordIds,
      top_k: topK,
    });
  }

  async commonPairs(): Promise<CommonPair[]> {
    return this.request("/api/common-pairs");
  }

  /** Resolves when an async (202) creation settles. */
  async waitReady(sessionId: string, pollMs = 500, timeoutMs = 300_000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const { state, error } = await this.status(sessionId);
      if (state === "ready") return;
      if (state === "failed") throw new ApiError(502, "backend_unavailable", error ?? "failed");
      if (Date.now() > deadline) throw new ApiError(504, "timeout", "session creation timed out");
      await new Promise((r) => setTimeout(r, pollMs));
    }
  }
}
