// Chat panel state: one session with one agent, transcript, retryable errors.

import { ApiClient, ApiError } from "./client.js";

export interface ChatLine {
  role: "user" | "agent";
  text: string;
}

export interface SendResult {
  ok: boolean;
  acted: boolean;
  error?: string;
}

export class ChatController {
  lines: ChatLine[] = [];
  sessionId: string | null = null;
  agentId: string | null = null;
  busy = false;

  constructor(private client: ApiClient) {}

  async open(agent: string): Promise<void> {
    const opened = await this.client.openSession(agent);
    this.sessionId = opened.session;
    this.agentId = opened.agent;
    this.lines = [];
  }

  /** Send one message. On failure the transcript is untouched and the
   * error comes back for a retry toast. */
  async send(text: string): Promise<SendResult> {
    const trimmed = text.trim();
    if (!trimmed || !this.sessionId || this.busy) {
      return { ok: false, acted: false, error: "nothing to send" };
    }
    this.busy = true;
    try {
      const { reply, acted } = await this.client.sendMessage(this.sessionId, trimmed);
      this.lines.push({ role: "user", text: trimmed });
      this.lines.push({ role: "agent", text: reply });
      return { ok: true, acted };
    } catch (error) {
      const message =
        error instanceof ApiError && error.status === 503
          ? "the agent is unreachable right now — try again"
          : String(error instanceof Error ? error.message : error);
      return { ok: false, acted: false, error: message };
    } finally {
      this.busy = false;
    }
  }

  async close(): Promise<void> {
    if (this.sessionId) {
      await this.client.closeSession(this.sessionId);
      this.sessionId = null;
    }
  }
}
