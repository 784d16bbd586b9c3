/**
 * Review session state machine, independent of the DOM.
 *
 * Drives the keyboard-first loop: show the next pending item with its top-k
 * suggestions, accept with 1..k, skip with "s", search for a manual override
 * with "/". All rankings round-trip through /v1/suggest; the client never
 * ranks anything itself.
 */

import {
  ApiClient,
  ApiError,
  Mode,
  ReviewItem,
  Stats,
  Suggestion,
} from "./api.js";
import { DecisionOutbox } from "./outbox.js";

export type BannerLevel = "info" | "warn" | "error";

export interface SessionEvents {
  onItem(item: ReviewItem | null, suggestions: Suggestion[]): void;
  onStats(stats: Stats): void;
  onBanner(level: BannerLevel, message: string): void;
  onBusyChange(busy: boolean): void;
  onSearchResults(results: Suggestion[]): void;
}

export interface SessionConfig {
  reviewer: string;
  mode?: Mode;
  k?: 3 | 5;
}

export class ReviewSession {
  mode: Mode;
  k: 3 | 5;
  current: ReviewItem | null = null;
  suggestions: Suggestion[] = [];
  searchResults: Suggestion[] = [];
  readonly outbox = new DecisionOutbox();

  private readonly reviewer: string;
  private inFlight = false;
  /** Items decided locally but still pending server-side (offline queue). */
  private readonly locallyDecided = new Set<string>();

  constructor(
    private readonly client: ApiClient,
    private readonly events: SessionEvents,
    config: SessionConfig,
  ) {
    this.reviewer = config.reviewer;
    this.mode = config.mode ?? "hybrid";
    this.k = config.k ?? 5;
  }

  get busy(): boolean {
    return this.inFlight;
  }

  async start(): Promise<void> {
    await this.loadNext();
    await this.refreshStats();
  }

  async loadNext(): Promise<void> {
    let pending: ReviewItem[];
    try {
      pending = await this.client.queue("pending", 50);
    } catch (err) {
      this.surface(err, "queue unreachable");
      this.current = null;
      this.suggestions = [];
      this.events.onItem(null, []);
      return;
    }
    const next =
      pending.find(
        (i) =>
          i.item_id !== this.current?.item_id && !this.locallyDecided.has(i.item_id),
      ) ?? null;
    this.current = next;
    this.searchResults = [];
    if (next === null) {
      this.suggestions = [];
      this.events.onItem(null, []);
      return;
    }
    try {
      const response = await this.client.suggest(next.clinic_text, this.k, this.mode);
      this.suggestions = response.suggestions;
    } catch (err) {
      this.suggestions = [];
      this.surface(err, "could not fetch suggestions");
    }
    this.events.onItem(next, this.suggestions);
  }

  /**
   * Accept the suggestion displayed at `rank` (1-based). Returns false when
   * the press was ignored: no item, rank out of range, or a decision for
   * this item is already in flight (double-submit guard).
   */
  async acceptRank(rank: number): Promise<boolean> {
    const suggestion = this.suggestions[rank - 1];
    if (!this.current || !suggestion) return false;
    return this.decide({
      kind: "accept",
      request: {
        item_id: this.current.item_id,
        masterlist_id: suggestion.masterlist_id,
        chosen_rank: rank,
        reviewer: this.reviewer,
      },
    });
  }

  /** Manual override from the search box: chosen_rank is "manual". */
  async acceptManual(masterlistId: string): Promise<boolean> {
    if (!this.current) return false;
    return this.decide({
      kind: "accept",
      request: {
        item_id: this.current.item_id,
        masterlist_id: masterlistId,
        chosen_rank: "manual",
        reviewer: this.reviewer,
      },
    });
  }

  async skip(): Promise<boolean> {
    if (!this.current) return false;
    return this.decide({ kind: "skip", itemId: this.current.item_id });
  }

  /** Typeahead for the manual-override search box. */
  async search(q: string): Promise<void> {
    if (q.trim() === "") {
      this.searchResults = [];
      this.events.onSearchResults([]);
      return;
    }
    try {
      const response = await this.client.suggest(q, this.k, this.mode);
      this.searchResults = response.suggestions;
      this.events.onSearchResults(this.searchResults);
    } catch (err) {
      this.surface(err, "search failed");
    }
  }

  setMode(mode: Mode): void {
    this.mode = mode;
  }

  setK(k: 3 | 5): void {
    this.k = k;
  }

  /** Retry queued offline decisions; call when connectivity returns. */
  async flushOutbox(): Promise<number> {
    const sent = await this.outbox.flush(this.client);
    if (sent > 0) {
      this.events.onBanner("info", `flushed ${sent} queued decision(s)`);
      await this.refreshStats();
    }
    return sent;
  }

  async refreshStats(): Promise<void> {
    try {
      this.events.onStats(await this.client.stats());
    } catch (err) {
      this.surface(err, "stats unavailable");
    }
  }

  /**
   * Keyboard dispatch: "1".."9" accepts at that rank, "s" skips. Returns
   * true when the key triggered a decision. "/" (search focus) is handled
   * by the DOM layer since it is pure focus management.
   */
  async handleKey(key: string): Promise<boolean> {
    if (key >= "1" && key <= "9") return this.acceptRank(Number(key));
    if (key === "s") return this.skip();
    return false;
  }

  private async decide(
    decision: Parameters<DecisionOutbox["submit"]>[1],
  ): Promise<boolean> {
    if (this.inFlight) return false; // double-submit guard
    this.inFlight = true;
    this.events.onBusyChange(true);
    try {
      const result = await this.outbox.submit(this.client, decision);
      if (result.status === "rejected") {
        this.surface(result.error, "decision rejected");
        if (result.error.status === 409) await this.loadNext();
        return false;
      }
      if (result.status === "queued") {
        const itemId =
          decision.kind === "accept" ? decision.request.item_id : decision.itemId;
        this.locallyDecided.add(itemId);
        this.events.onBanner("warn", "offline — decision queued, will retry in order");
      }
      await this.loadNext();
      await this.refreshStats();
      return true;
    } finally {
      this.inFlight = false;
      this.events.onBusyChange(false);
    }
  }

  private surface(err: unknown, fallback: string): void {
    if (err instanceof ApiError) {
      const level: BannerLevel = err.status >= 500 ? "error" : "warn";
      this.events.onBanner(level, `${err.code}: ${err.message}`);
    } else {
      this.events.onBanner("error", fallback);
    }
  }
}
