import fs from "node:fs";
import path from "node:path";
import url from "node:url";

import { describe, expect, it } from "vitest";

import { decodeEnvelope, type Envelope } from "../src/protocol.js";
import {
  DashboardStore,
  parseTraceLines,
  timelineFromTrace,
  viewFromDashState,
  type DashStatePayload,
} from "../src/viewmodel.js";

const HERE = path.dirname(url.fileURLToPath(import.meta.url));
const FIXTURES = path.join(HERE, "fixtures");

function fixture(name: string): string {
  return fs.readFileSync(path.join(FIXTURES, name), "utf-8");
}

function dashState(over: Partial<DashStatePayload> = {}): DashStatePayload {
  return {
    t: 1.0,
    drones: [],
    targets: [],
    fired_events: [],
    plans_digest: "0".repeat(64),
    ...over,
  };
}

function droneState(id: string, over: Record<string, unknown> = {}) {
  return {
    drone_id: id,
    phase: "navigating",
    action_index: 0,
    position: { x: 0, y: 0, z: 10 },
    battery: 0.9,
    failed: false,
    plan: [],
    ...over,
  };
}

describe("trace replay", () => {
  const timeline = timelineFromTrace(parseTraceLines(fixture("parkour.jsonl")));

  it("renders one timeline row per drone: two for the parkour session", () => {
    expect(timeline.rows.map((r) => r.droneId)).toEqual(["drone_1", "drone_2"]);
  });

  it("renders five action blocks total across the parkour fleet", () => {
    const total = timeline.rows.reduce((n, r) => n + r.blocks.length, 0);
    expect(total).toBe(5);
    // one drone covered two shots, the other three
    expect(timeline.rows.map((r) => r.blocks.length).sort()).toEqual([2, 3]);
  });

  it("places every block inside the trace and in causal order", () => {
    for (const row of timeline.rows) {
      let prevEnd = -Infinity;
      for (const blk of row.blocks) {
        expect(blk.start).toBeGreaterThanOrEqual(prevEnd);
        expect(blk.end).toBeGreaterThan(blk.start);
        expect(blk.end).toBeLessThanOrEqual(timeline.tEnd);
        prevEnd = blk.end;
      }
    }
    // nothing films before the start cue at t=20
    const first = Math.min(...timeline.rows.map((r) => r.blocks[0]!.start));
    expect(first).toBeCloseTo(20.0, 1);
  });
});

describe("live state reduction", () => {
  it("replaying the recorded message log ends at the same view as the last snapshot", () => {
    const lines = fixture("parkour.msgs.jsonl").split("\n").filter((l) => l.trim());
    const store = new DashboardStore();
    let lastState: Envelope | null = null;
    for (const line of lines) {
      const env = decodeEnvelope(line);
      store.apply(env);
      if (env.type === "DASH_STATE") lastState = env;
    }
    expect(lastState).not.toBeNull();
    const direct = viewFromDashState(
      lastState!.payload as unknown as DashStatePayload,
    );
    // freshness aside, replay and direct render agree exactly
    expect({ ...store.view, drones: store.view.drones.map((d) => ({ ...d, stale: false })) })
      .toEqual({ ...direct, drones: direct.drones.map((d) => ({ ...d, stale: false })) });
    expect(store.banner).toBeNull();
  });

  it("derives the parkour timeline and buttons from the final snapshot", () => {
    const lines = fixture("parkour.msgs.jsonl").split("\n").filter((l) => l.trim());
    const store = new DashboardStore();
    for (const line of lines) store.apply(decodeEnvelope(line));
    const view = store.view;
    expect(view.rows).toHaveLength(2);
    const shots = view.rows.flatMap((r) => r.blocks.filter((b) => b.kind === "shot"));
    expect(shots.map((b) => b.label).sort()).toEqual(["fb2", "ft1", "lt4", "ob5", "st3"]);
    expect(view.buttons).toEqual(["START_RACE"]);
    expect(view.eventLog).toEqual([{ name: "START_RACE", t: 20.0 }]);
    // the snapshot cadence is 0.5 s, so the last one can catch the final
    // touchdown still in progress; by then wrap-up is all that remains
    for (const d of view.drones) {
      expect(["navigating", "done"]).toContain(d.phase);
    }
  });

  it("keeps the last good view and raises a banner on malformed input", () => {
    const store = new DashboardStore();
    store.apply({
      type: "DASH_STATE",
      sender: "ground",
      seq: 1,
      payload: dashState({ drones: [droneState("d1")] }) as unknown as Record<string, unknown>,
    });
    const before = store.view;
    store.applyLine("{garbage", decodeEnvelope);
    expect(store.banner).toMatch(/malformed/);
    expect(store.view).toBe(before);
    // a structurally broken snapshot is also refused
    store.apply({ type: "DASH_STATE", sender: "ground", seq: 2, payload: { t: "x" } });
    expect(store.banner).toMatch(/malformed/);
    expect(store.view).toBe(before);
    // the next good snapshot clears the banner
    store.apply({
      type: "DASH_STATE",
      sender: "ground",
      seq: 3,
      payload: dashState({ t: 2.0 }) as unknown as Record<string, unknown>,
    });
    expect(store.banner).toBeNull();
    expect(store.view.t).toBe(2.0);
  });

  it("greys drones whose status stream went quiet for more than two seconds", () => {
    const store = new DashboardStore();
    const status = (t: number) => ({
      type: "STATUS",
      sender: "d1",
      seq: 1,
      payload: { drone_id: "d1", phase: "navigating", t },
    });
    store.apply(status(0.5));
    store.apply({
      type: "DASH_STATE",
      sender: "ground",
      seq: 1,
      payload: dashState({ t: 3.0, drones: [droneState("d1")] }) as unknown as Record<string, unknown>,
    });
    expect(store.view.drones[0]!.stale).toBe(true);
    store.apply(status(2.9));
    store.refresh();
    expect(store.view.drones[0]!.stale).toBe(false);
  });

  it("marks failed drones and keeps an emergency ticker", () => {
    const store = new DashboardStore();
    store.apply({
      type: "EMERGENCY",
      sender: "d2",
      seq: 5,
      payload: { drone_id: "d2", kind: "low_battery", t: 12.25 },
    });
    store.apply({
      type: "DASH_STATE",
      sender: "ground",
      seq: 9,
      payload: dashState({
        t: 12.5,
        drones: [droneState("d2", { phase: "emergency", failed: true })],
      }) as unknown as Record<string, unknown>,
    });
    expect(store.alerts).toEqual(["emergency d2 (low_battery) at t=12.25"]);
    expect(store.view.drones[0]!.failed).toBe(true);
  });

  it("renders an empty session as an empty view", () => {
    const view = viewFromDashState(dashState());
    expect(view.drones).toEqual([]);
    expect(view.rows).toEqual([]);
    expect(view.buttons).toEqual([]);
  });

  it("tracks the plan cursor through done, active, and pending blocks", () => {
    const plan = [
      { kind: "take_off", alt: 15 },
      { kind: "go_to_waypoint", n_waypoints: 3 },
      { kind: "shot", id: "s1", shot_type: "lateral", duration_s: 8, start_event: "GO" },
      { kind: "land" },
    ];
    const view = viewFromDashState(
      dashState({ drones: [droneState("d1", { action_index: 2, plan })] }),
    );
    const row = view.rows[0]!;
    expect(row.blocks.map((b) => b.state)).toEqual(["done", "done", "active", "pending"]);
    expect(row.blocks[2]!).toMatchObject({ label: "s1", kind: "shot", startEvent: "GO" });
    expect(view.buttons).toEqual(["GO"]);
  });
});
