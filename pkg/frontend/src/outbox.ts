/**
 * Client-side outbox for decisions made while the service is unreachable.
 * Queued decisions are flushed strictly in order; a flush stops at the first
 * transport failure so ordering is never violated.
 */

import { ApiClient, ApiError, MappingRequest, isNetworkError } from "./api.js";

export type QueuedDecision =
  | { kind: "accept"; request: MappingRequest }
  | { kind: "skip"; itemId: string };

export type OutboxResult =
  | { status: "sent" }
  | { status: "queued" }
  | { status: "rejected"; error: ApiError };

export class DecisionOutbox {
  private readonly pending: QueuedDecision[] = [];

  get size(): number {
    return this.pending.length;
  }

  /**
   * Try to send one decision. Transport failures queue it for later; HTTP
   * errors (409 conflict, 422, ...) are surfaced to the caller, not queued.
   */
  async submit(client: ApiClient, decision: QueuedDecision): Promise<OutboxResult> {
    if (this.pending.length > 0) {
      // Never let a fresh decision overtake queued ones.
      this.pending.push(decision);
      await this.flush(client);
      return this.pending.includes(decision) ? { status: "queued" } : { status: "sent" };
    }
    try {
      await this.send(client, decision);
      return { status: "sent" };
    } catch (err) {
      if (err instanceof ApiError) return { status: "rejected", error: err };
      if (isNetworkError(err)) {
        this.pending.push(decision);
        return { status: "queued" };
      }
      throw err;
    }
  }

  /** Replay queued decisions in order; stop on the first transport failure. */
  async flush(client: ApiClient): Promise<number> {
    let sent = 0;
    while (this.pending.length > 0) {
      const next = this.pending[0]!;
      try {
        await this.send(client, next);
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          // Already decided server-side (e.g. replayed earlier); drop it.
          this.pending.shift();
          continue;
        }
        if (isNetworkError(err)) return sent;
        throw err;
      }
      this.pending.shift();
      sent += 1;
    }
    return sent;
  }

  private async send(client: ApiClient, decision: QueuedDecision): Promise<void> {
    if (decision.kind === "accept") {
      await client.acceptMapping(decision.request);
    } else {
      await client.skip(decision.itemId);
    }
  }
}
