// HTTP client and resumable event stream for the engine service.

import { StateSnapshot, StreamMessage, ViewMode, isEnvelope } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base: string,
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {
    this.base = base.replace(/\/$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.base + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(response.status, (payload as { error?: string }).error ?? response.statusText);
    }
    return payload as T;
  }

  state(): Promise<StateSnapshot> {
    return this.request("GET", "/v1/state");
  }

  setMode(mode: ViewMode): Promise<{ mode: ViewMode }> {
    return this.request("POST", "/v1/mode", { mode });
  }

  openSession(agent: string): Promise<{ session: string; agent: string }> {
    return this.request("POST", "/v1/sessions", { agent });
  }

  sendMessage(session: string, text: string): Promise<{ reply: string; acted: boolean }> {
    return this.request("POST", `/v1/sessions/${session}/messages`, { text });
  }

  closeSession(session: string): Promise<{ session: string; open: boolean }> {
    return this.request("DELETE", `/v1/sessions/${session}`);
  }
}

export interface SocketLike {
  onmessage: ((event: { data: unknown }) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface StreamHandlers {
  onMessage(message: StreamMessage): void;
  onStatus?(connected: boolean): void;
}

export function websocketUrl(httpBase: string, since: number): string {
  const base = httpBase.replace(/\/$/, "").replace(/^http/, "ws");
  return `${base}/v1/events?since=${since}`;
}

/** Resumable stream: tracks the last envelope seq and reconnects from it,
 * so nothing is missed or duplicated across drops. */
export class EventStream {
  lastSeq = 0;
  private socket: SocketLike | null = null;
  private stopped = false;
  private retryMs = 500;

  constructor(
    private base: string,
    private handlers: StreamHandlers,
    private makeSocket: SocketFactory = (url) => new WebSocket(url) as unknown as SocketLike,
    private scheduler: (fn: () => void, ms: number) => void = (fn, ms) => setTimeout(fn, ms),
  ) {}

  start(since?: number): void {
    this.stopped = false;
    if (since !== undefined) this.lastSeq = since;
    this.connect();
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
    this.socket = null;
  }

  private connect(): void {
    if (this.stopped) return;
    const socket = this.makeSocket(websocketUrl(this.base, this.lastSeq));
    this.socket = socket;
    socket.onopen = () => {
      this.retryMs = 500;
      this.handlers.onStatus?.(true);
    };
    socket.onmessage = (event) => {
      let message: StreamMessage;
      try {
        message = JSON.parse(String(event.data));
      } catch {
        console.info("dropping unparseable stream frame");
        return;
      }
      if (isEnvelope(message)) this.lastSeq = message.seq;
      this.handlers.onMessage(message);
    };
    let settled = false;
    const reconnect = () => {
      if (settled || this.stopped) return;
      settled = true;
      this.handlers.onStatus?.(false);
      this.scheduler(() => this.connect(), this.retryMs);
      this.retryMs = Math.min(this.retryMs * 2, 8000);
    };
    socket.onclose = reconnect;
    socket.onerror = reconnect;
  }
}
