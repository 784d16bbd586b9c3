import { describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { ReviewSession, SessionEvents } from "../src/session.js";
import { FakeServer, SAMPLE_MASTERLIST } from "./fake_server.js";

function makeSession(server: FakeServer) {
  const client = new ApiClient({
    apiBase: "http://service.test",
    fetchFn: server.fetch,
  });
  const events: SessionEvents = {
    onItem: vi.fn(),
    onStats: vi.fn(),
    onBanner: vi.fn(),
    onBusyChange: vi.fn(),
    onSearchResults: vi.fn(),
  };
  const session = new ReviewSession(client, events, { reviewer: "dr-pop" });
  return { session, events, client };
}

describe("ReviewSession", () => {
  it("loads the first pending item with its suggestions", async () => {
    const server = new FakeServer(SAMPLE_MASTERLIST);
    server.seed(["radiografie toracica standard"]);
    const { session } = makeSession(server);
    await session.start();
    expect(session.current?.clinic_text).toBe("radiografie toracica standard");
    expect(session.suggestions.length).toBeGreaterThan(0);
    expect(session.suggestions[0]!.masterlist_id).toBe("M1");
  });

  it("keyboard '1' accepts at rank 1 and advances to the next item", async () => {
    const server = new FakeServer(SAMPLE_MASTERLIST);
    server.seed(["radiografie toracica", "hemoleucograma"]);
    const { session } = makeSession(server);
    await session.start();

    const handled = await session.handleKey("1");
    expect(handled).toBe(true);
    const accept = server.requests.find((r) => r.path === "/v1/mappings")!;
    expect(accept.body).toMatchObject({
      masterlist_id: "M1",
      chosen_rank: 1,
      reviewer: "dr-pop",
    });
    expect(session.current?.clinic_text).toBe("hemoleucograma");
  });

  it("keyboard 's' skips; out-of-range rank keys are ignored", async () => {
    const server = new FakeServer(SAMPLE_MASTERLIST);
    server.seed(["ceva neclar"]);
    const { session } = makeSession(server);
    await session.start();

    expect(await session.handleKey("9")).toBe(false); // only 5 suggestions
    expect(await session.handleKey("s")).toBe(true);
    expect(server.items[0]!.status).toBe("skipped");
    expect(session.current).toBeNull();
  });

  it("manual override posts chosen_rank 'manual' with the picked entry", async () => {
    const server = new FakeServer(SAMPLE_MASTERLIST);
    server.seed(["glicemie a jeun"]);
    const { session, events } = makeSession(server);
    await session.start();

    await session.search("glicemie");
    expect(events.onSearchResults).toHaveBeenCalled();
    const accepted = await session.acceptManual("M5");
    expect(accepted).toBe(true);
    const accept = server.requests.find((r) => r.path === "/v1/mappings")!;
    expect(accept.body).toMatchObject({ masterlist_id: "M5", chosen_rank: "manual" });
    expect(server.items[0]!.decision?.chosen_rank).toBe("manual");
  });

  it("blocks a second decision while one is in flight (double-submit)", async () => {
    const server = new FakeServer(SAMPLE_MASTERLIST);
    server.seed(["radiografie toracica"]);
    const { session } = makeSession(server);
    await session.start();

    let release!: () => void;
    server.respondAfter = new Promise((resolve) => (release = resolve));
    const first = session.acceptRank(1);
    const second = await session.acceptRank(2); // while first is in flight
    expect(second).toBe(false);
    server.respondAfter = null;
    release();
    expect(await first).toBe(true);

    const accepts = server.requests.filter((r) => r.path === "/v1/mappings");
    expect(accepts).toHaveLength(1);
    expect(accepts[0]!.body).toMatchObject({ chosen_rank: 1 });
  });

  it("surfaces a 409 conflict as a banner instead of crashing", async () => {
    const server = new FakeServer(SAMPLE_MASTERLIST);
    const [itemId] = server.seed(["radiografie toracica"]);
    const { session, events } = makeSession(server);
    await session.start();

    // Another session decides the same item first.
    server.items.find((i) => i.item_id === itemId)!.status = "mapped";
    server.items.find((i) => i.item_id === itemId)!.decision = {
      masterlist_id: "M1",
      chosen_rank: 1,
      reviewer: "other",
      timestamp: 0,
    };
    const accepted = await session.acceptRank(1);
    expect(accepted).toBe(false);
    expect(events.onBanner).toHaveBeenCalledWith(
      "warn",
      expect.stringContaining("conflict"),
    );
  });

  it("queues decisions while offline and flushes them in order", async () => {
    const server = new FakeServer(SAMPLE_MASTERLIST);
    server.seed(["radiografie toracica", "hemoleucograma", "ecografie abdominala"]);
    const { session, events } = makeSession(server);
    await session.start();

    server.offline = true;
    expect(await session.acceptRank(1)).toBe(true); // queued locally
    expect(events.onBanner).toHaveBeenCalledWith("warn", expect.stringContaining("queued"));
    expect(session.outbox.size).toBe(1);
    expect(server.items.every((i) => i.status === "pending")).toBe(true);

    server.offline = false;
    await session.loadNext(); // reconnect; second item loads
    expect(session.current?.clinic_text).toBe("hemoleucograma");
    expect(await session.handleKey("s")).toBe(true); // flushes queue first

    expect(session.outbox.size).toBe(0);
    expect(server.items[0]!.status).toBe("mapped");
    expect(server.items[0]!.decision?.chosen_rank).toBe(1);
    expect(server.items[1]!.status).toBe("skipped");
  });
});
