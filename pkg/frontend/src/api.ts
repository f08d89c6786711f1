/**
 * REST client for the layout editing service.
 *
 * Every mutation the UI performs goes through these six endpoints; there is
 * no client-side editing path.
 */
import type {
  CommandsResponse,
  LayoutDoc,
  SnapshotRef,
  TranscriptDoc,
  TurnResponse,
} from "./types.js";

export class ApiError extends Error {
  status: number;
  body: unknown;

  constructor(status: number, body: unknown, message?: string) {
    super(message ?? `request failed with status ${status}`);
    this.status = status;
    this.body = body;
  }
}

type FetchFn = typeof fetch;

export class ApiClient {
  base: string;
  private fetchFn: FetchFn;

  constructor(base: string, fetchFn?: FetchFn) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? fetch.bind(globalThis);
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(`${this.base}${path}`, init);
    const body = await res.json().catch(() => null);
    if (!res.ok) throw new ApiError(res.status, body);
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  health(): Promise<{ status: string; sessions: number }> {
    return this.request("/healthz");
  }

  createSession(
    netlist: string,
    placement: string,
  ): Promise<{ id: string; snapshot: SnapshotRef }> {
    return this.post("/sessions", { netlist, placement });
  }

  postTurn(sid: string, text: string): Promise<TurnResponse> {
    return this.post(`/sessions/${sid}/turns`, { text });
  }

  postCommands(sid: string, script: string): Promise<CommandsResponse> {
    return this.post(`/sessions/${sid}/commands`, { script });
  }

  getLayout(sid: string, label?: string): Promise<LayoutDoc> {
    const q = label ? `?label=${encodeURIComponent(label)}` : "";
    return this.request(`/sessions/${sid}/layout${q}`);
  }

  getTranscript(sid: string): Promise<TranscriptDoc> {
    return this.request(`/sessions/${sid}/transcript`);
  }
}
