/**
 * Browser entry point. Subscribes to the bridge's event stream, folds every
 * envelope into the store, and re-renders the whole page from the resulting
 * view model on each snapshot; there is no incremental DOM state to drift.
 */

import { DashboardStore, type ViewModel } from "./viewmodel.js";
import type { Envelope } from "./protocol.js";

interface MapBlob {
  bounds?: { x_min: number; y_min: number; x_max: number; y_max: number };
  no_fly_zones: { x: number; y: number }[][];
  base_stations: { x: number; y: number; z: number }[];
}

const PHASE_COLOR: Record<string, string> = {
  idle: "#8b95a3",
  navigating: "#5aa7ff",
  waiting_event: "#e5c07b",
  shooting: "#7bd88f",
  emergency: "#ff6b6b",
  done: "#72808f",
};

const store = new DashboardStore();
let mapBlob: MapBlob = { no_fly_zones: [], base_stations: [] };
// names whose button is held down until the event shows up or 2 s pass
const inFlight = new Map<string, number>();

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

async function sendCommand(op: string, args: Record<string, unknown>) {
  await fetch("/cmd", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ op, args }),
  });
}

function esc(s: string): string {
  return s.replace(/[&<>"']/g, (c) => `&#${c.charCodeAt(0)};`);
}

function renderMap(view: ViewModel) {
  const b = mapBlob.bounds ?? { x_min: -60, y_min: -60, x_max: 60, y_max: 60 };
  const w = b.x_max - b.x_min;
  const h = b.y_max - b.y_min;
  // svg y grows downward; world y grows up
  const sy = (y: number) => b.y_max - y;
  const parts: string[] = [];
  for (const poly of mapBlob.no_fly_zones) {
    const pts = poly.map((p) => `${p.x},${sy(p.y)}`).join(" ");
    parts.push(`<polygon class="zone" points="${pts}"/>`);
  }
  for (const base of mapBlob.base_stations) {
    parts.push(
      `<rect class="base" x="${base.x - 1}" y="${sy(base.y) - 1}" width="2" height="2"/>`,
    );
  }
  for (const t of view.targets) {
    parts.push(
      `<circle class="target" cx="${t.position.x}" cy="${sy(t.position.y)}" r="1.1"/>` +
        `<text x="${t.position.x + 1.6}" y="${sy(t.position.y)}">${esc(t.targetId)}</text>`,
    );
  }
  for (const d of view.drones) {
    const color = d.failed
      ? PHASE_COLOR.emergency
      : d.stale
        ? "#555c66"
        : (PHASE_COLOR[d.phase] ?? "#d8dde4");
    const label = `${d.droneId} ${d.position.z.toFixed(0)}m`;
    parts.push(
      `<g class="drone" opacity="${d.stale ? 0.5 : 1}">` +
        `<circle cx="${d.position.x}" cy="${sy(d.position.y)}" r="1.6" fill="${color}"/>` +
        `<text x="${d.position.x + 2.1}" y="${sy(d.position.y) + 1}">${esc(label)}</text>` +
        `</g>`,
    );
  }
  const svg = el<HTMLElement>("map");
  svg.setAttribute("viewBox", `${b.x_min} 0 ${w} ${h}`);
  svg.innerHTML = parts.join("");
}

function renderTimeline(view: ViewModel) {
  const rows = view.rows
    .map((row) => {
      const blocks = row.blocks
        .map(
          (blk) =>
            `<span class="block ${blk.kind} ${blk.state}" title="${esc(
              blk.startEvent ? `on ${blk.startEvent}` : "",
            )}">${esc(blk.label)}</span>`,
        )
        .join("");
      return `<div class="row"><span class="name">${esc(row.droneId)}</span><span class="blocks">${blocks}</span></div>`;
    })
    .join("");
  el("timeline").innerHTML = rows || "<em>no plans yet</em>";
}

function renderButtons(view: ViewModel) {
  const fired = new Set(view.eventLog.map((e) => e.name));
  const now = Date.now();
  const html = view.buttons
    .map((name) => {
      const pressedAt = inFlight.get(name);
      const waiting =
        pressedAt !== undefined && now - pressedAt < 2000 && !fired.has(name);
      const disabled = fired.has(name) || waiting;
      return `<button data-event="${esc(name)}" ${disabled ? "disabled" : ""}>fire ${esc(name)}</button>`;
    })
    .join("");
  el("buttons").innerHTML = html || "<em>no events in mission</em>";
  for (const btn of el("buttons").querySelectorAll("button")) {
    btn.addEventListener("click", () => {
      const name = btn.dataset.event!;
      inFlight.set(name, Date.now());
      btn.disabled = true;
      void sendCommand("fire_event", { name });
      setTimeout(render, 2100); // re-enable on timeout if no effect shows
    });
  }
  const sel = el<HTMLSelectElement>("faildrone");
  const have = new Set([...sel.options].map((o) => o.value));
  for (const d of view.drones) {
    if (!have.has(d.droneId)) {
      const opt = document.createElement("option");
      opt.value = opt.textContent = d.droneId;
      sel.append(opt);
    }
  }
}

function renderLogs(view: ViewModel) {
  el("eventlog").innerHTML = view.eventLog
    .map((e) => `<li>${esc(e.name)} at t=${e.t.toFixed(2)}s</li>`)
    .join("");
  el("alerts").innerHTML = store.alerts
    .map((a) => `<li class="alert">${esc(a)}</li>`)
    .join("");
  el("simt").textContent = `t=${view.t.toFixed(1)}s`;
  const banner = el("banner");
  banner.style.display = store.banner ? "block" : "none";
  banner.textContent = store.banner ?? "";
}

function render() {
  const view = store.view;
  renderMap(view);
  renderTimeline(view);
  renderButtons(view);
  renderLogs(view);
}

async function boot() {
  mapBlob = (await (await fetch("/map")).json()) as MapBlob;
  const source = new EventSource("/events");
  source.onmessage = (e) => {
    store.apply(JSON.parse(e.data) as Envelope);
    render();
  };
  source.addEventListener("meta", (e) => {
    const meta = JSON.parse((e as MessageEvent).data);
    const conn = el("conn");
    conn.textContent = meta.connected ? "connected" : "disconnected";
    conn.className = meta.connected ? "ok" : "down";
    el("pending").textContent = meta.pending ? `${meta.pending} pending` : "";
  });
  el("failbtn").addEventListener("click", () => {
    void sendCommand("fail_drone", {
      drone_id: el<HTMLSelectElement>("faildrone").value,
      kind: el<HTMLSelectElement>("failkind").value,
    });
  });
  el("stopbtn").addEventListener("click", () => {
    void sendCommand("stop", {});
  });
  render();
}

boot();
