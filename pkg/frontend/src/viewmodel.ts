/**
 * Pure view-state derivation for the dashboard.
 *
 * The map and timeline are a function of the latest DASH_STATE snapshot, so
 * a render is always a full stateless re-render. The store around the pure
 * reducer only keeps transport-level adornments: per-drone status freshness
 * (to grey out drones that stopped reporting), the emergency ticker, and the
 * bad-message banner that preserves the last good view.
 */

import {
  DASH_STATE,
  EMERGENCY,
  STATUS,
  WireFormatError,
  type Envelope,
} from "./protocol.js";

export interface PointJson {
  x: number;
  y: number;
  z: number;
}

export interface CompactAction {
  kind: string;
  id?: string;
  shot_type?: string;
  duration_s?: number;
  start_event?: string | null;
  alt?: number;
  n_waypoints?: number;
}

export interface DroneStateJson {
  drone_id: string;
  phase: string;
  action_index: number;
  position: PointJson;
  battery: number;
  failed: boolean;
  plan: CompactAction[];
}

export interface DashStatePayload {
  t: number;
  drones: DroneStateJson[];
  targets: { target_id: string; position: PointJson }[];
  fired_events: { name: string; t: number }[];
  plans_digest: string;
}

export type BlockState = "done" | "active" | "pending";

export interface TimelineBlock {
  label: string;
  kind: "shot" | "nav";
  state: BlockState;
  startEvent: string | null;
}

export interface TimelineRow {
  droneId: string;
  cursor: number; // index of the active block
  blocks: TimelineBlock[];
}

export interface DroneMarker {
  droneId: string;
  position: PointJson;
  phase: string;
  battery: number;
  failed: boolean;
  stale: boolean;
}

export interface ViewModel {
  t: number;
  drones: DroneMarker[];
  targets: { targetId: string; position: PointJson }[];
  rows: TimelineRow[];
  eventLog: { name: string; t: number }[];
  buttons: string[]; // one fire button per known event name
  plansDigest: string;
}

export const STALE_AFTER_S = 2.0;

function blockLabel(a: CompactAction): string {
  if (a.kind === "shot") return a.id ?? a.shot_type ?? "shot";
  if (a.kind === "go_to_waypoint") return "goto";
  return a.kind.replace(/_/g, " ");
}

/**
 * Build the full view from one DASH_STATE payload. `lastStatusT` maps
 * drone id to the sim time of its most recent STATUS; drones more than
 * STALE_AFTER_S behind the snapshot are flagged stale.
 */
export function viewFromDashState(
  payload: DashStatePayload,
  lastStatusT?: Map<string, number>,
): ViewModel {
  const drones: DroneMarker[] = payload.drones.map((d) => {
    const seen = lastStatusT?.get(d.drone_id);
    const stale = seen !== undefined && payload.t - seen > STALE_AFTER_S;
    return {
      droneId: d.drone_id,
      position: d.position,
      phase: d.phase,
      battery: d.battery,
      failed: d.failed,
      stale,
    };
  });
  const rows: TimelineRow[] = payload.drones.map((d) => ({
    droneId: d.drone_id,
    cursor: d.action_index,
    blocks: d.plan.map((a, i) => ({
      label: blockLabel(a),
      kind: a.kind === "shot" ? "shot" : "nav",
      state:
        i < d.action_index ? "done" : i === d.action_index ? "active" : "pending",
      startEvent: a.kind === "shot" ? (a.start_event ?? null) : null,
    })),
  }));
  const names = new Set<string>();
  for (const d of payload.drones) {
    for (const a of d.plan) {
      if (a.kind === "shot" && a.start_event) names.add(a.start_event);
    }
  }
  for (const e of payload.fired_events) names.add(e.name);
  return {
    t: payload.t,
    drones,
    targets: payload.targets.map((t) => ({
      targetId: t.target_id,
      position: t.position,
    })),
    rows,
    eventLog: payload.fired_events,
    buttons: [...names].sort(),
    plansDigest: payload.plans_digest,
  };
}

export function emptyView(): ViewModel {
  return {
    t: 0,
    drones: [],
    targets: [],
    rows: [],
    eventLog: [],
    buttons: [],
    plansDigest: "",
  };
}

/**
 * Envelope-driven wrapper around the pure reducer. Malformed input raises a
 * banner and keeps the last good view; EMERGENCY messages feed the alert
 * ticker; STATUS messages only refresh the per-drone freshness clock.
 */
export class DashboardStore {
  view: ViewModel = emptyView();
  banner: string | null = null;
  alerts: string[] = [];
  private lastStatusT = new Map<string, number>();
  private lastState: DashStatePayload | null = null;

  apply(env: Envelope): void {
    if (env.type === DASH_STATE) {
      const payload = env.payload as unknown;
      if (!isDashState(payload)) {
        this.banner = "malformed DASH_STATE; showing last good state";
        return;
      }
      this.banner = null;
      this.lastState = payload;
      this.view = viewFromDashState(payload, this.lastStatusT);
      return;
    }
    if (env.type === STATUS) {
      const p = env.payload;
      if (typeof p.drone_id === "string" && typeof p.t === "number") {
        this.lastStatusT.set(p.drone_id, p.t);
      }
      return;
    }
    if (env.type === EMERGENCY) {
      const p = env.payload;
      this.alerts.push(`emergency ${p.drone_id} (${p.kind}) at t=${p.t}`);
      return;
    }
    // PLAN / EVENT / STOP / REPLAN_NOTICE carry nothing the snapshot lacks
  }

  /** Decode-and-apply for raw lines off the socket. */
  applyLine(line: string, decode: (l: string) => Envelope): void {
    try {
      this.apply(decode(line));
    } catch (exc) {
      if (exc instanceof WireFormatError) {
        this.banner = "malformed message; showing last good state";
        return;
      }
      throw exc;
    }
  }

  /** Re-derive the view, e.g. after more STATUS messages moved the clocks. */
  refresh(): void {
    if (this.lastState) {
      this.view = viewFromDashState(this.lastState, this.lastStatusT);
    }
  }
}

function isPoint(v: unknown): v is PointJson {
  return (
    v !== null &&
    typeof v === "object" &&
    typeof (v as PointJson).x === "number" &&
    typeof (v as PointJson).y === "number" &&
    typeof (v as PointJson).z === "number"
  );
}

function isDashState(v: unknown): v is DashStatePayload {
  if (v === null || typeof v !== "object") return false;
  const p = v as Partial<DashStatePayload>;
  return (
    typeof p.t === "number" &&
    Array.isArray(p.drones) &&
    p.drones.every(
      (d) =>
        typeof d.drone_id === "string" &&
        typeof d.phase === "string" &&
        typeof d.action_index === "number" &&
        isPoint(d.position) &&
        Array.isArray(d.plan),
    ) &&
    Array.isArray(p.targets) &&
    Array.isArray(p.fired_events) &&
    typeof p.plans_digest === "string"
  );
}

// ----------------------------------------------------------------- replay

export interface TraceRow {
  t: number;
  drone_id: string;
  phase: string;
  position: PointJson;
  setpoint: PointJson | null;
  gimbal_axis: number[];
  events: string[];
}

export interface ReplayBlock {
  start: number;
  end: number;
}

export interface ReplayRow {
  droneId: string;
  blocks: ReplayBlock[];
}

export interface ReplayTimeline {
  rows: ReplayRow[];
  tEnd: number;
}

export function parseTraceLines(text: string): TraceRow[] {
  const rows: TraceRow[] = [];
  for (const line of text.split("\n")) {
    if (!line.trim()) continue;
    rows.push(JSON.parse(line) as TraceRow);
  }
  return rows;
}

/**
 * One timeline row per drone seen in the trace; one block per recording,
 * delimited by the camera start/stop markers the executive stamps into the
 * row events. A recording still open at the end of the trace is closed at
 * the last timestamp.
 */
export function timelineFromTrace(rows: TraceRow[]): ReplayTimeline {
  const order: string[] = [];
  const open = new Map<string, number>();
  const blocks = new Map<string, ReplayBlock[]>();
  let tEnd = 0;
  for (const row of rows) {
    tEnd = Math.max(tEnd, row.t);
    if (!blocks.has(row.drone_id)) {
      blocks.set(row.drone_id, []);
      order.push(row.drone_id);
    }
    for (const ev of row.events) {
      if (ev === "camera:record_start") {
        open.set(row.drone_id, row.t);
      } else if (ev === "camera:record_stop") {
        const start = open.get(row.drone_id);
        if (start !== undefined) {
          blocks.get(row.drone_id)!.push({ start, end: row.t });
          open.delete(row.drone_id);
        }
      }
    }
  }
  for (const [did, start] of open) {
    blocks.get(did)!.push({ start, end: tEnd });
  }
  return {
    rows: order.map((did) => ({ droneId: did, blocks: blocks.get(did)! })),
    tEnd,
  };
}
