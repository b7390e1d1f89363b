import { spawn, type ChildProcess } from "node:child_process";
import path from "node:path";
import url from "node:url";

import { afterEach, describe, expect, it } from "vitest";

import { DashboardClient } from "../src/client.js";
import type { Envelope } from "../src/protocol.js";
import { until } from "./station.js";

const HERE = path.dirname(url.fileURLToPath(import.meta.url));
const REPO = path.resolve(HERE, "../..");

let child: ChildProcess | null = null;

function launchSession(): Promise<{ host: string; port: number }> {
  child = spawn(
    "python3",
    [
      "-u",
      "-m",
      "cineswarm.cli",
      "run",
      "--mission", path.join(REPO, "scenarios/parkour.json"),
      "--map", path.join(REPO, "scenarios/parkour_map.json"),
      "--drones", "2",
      "--seed", "5",
      "--realtime",
      "--listen", "127.0.0.1:0",
      "--horizon", "120",
    ],
    { cwd: REPO, stdio: ["ignore", "pipe", "pipe"] },
  );
  return new Promise((resolve, reject) => {
    let out = "";
    child!.stdout!.on("data", (chunk: Buffer) => {
      out += chunk.toString();
      const m = out.match(/listening on ([\d.]+):(\d+)/);
      if (m) resolve({ host: m[1]!, port: Number(m[2]!) });
    });
    child!.stderr!.on("data", () => {});
    child!.on("exit", (code) =>
      reject(new Error(`session exited early (code ${code}): ${out}`)),
    );
    setTimeout(() => reject(new Error(`no listen line; got: ${out}`)), 15000);
  });
}

afterEach(() => {
  child?.kill("SIGKILL");
  child = null;
});

describe("live session", () => {
  it(
    "a fire button press reaches every drone within half a second",
    { timeout: 30000 },
    async () => {
      const { host, port } = await launchSession();
      const client = new DashboardClient();
      const seen: { env: Envelope; at: number }[] = [];
      client.onMessage = (env) => seen.push({ env, at: Date.now() });
      try {
        await client.connect(host, port);
        // the stream is live once the first full-state snapshot arrives
        await until(() => seen.some((s) => s.env.type === "DASH_STATE"), 10000);

        const pressedAt = Date.now();
        client.sendCommand("fire_event", { name: "START_RACE" });

        // the ground station broadcasts the event to every drone inbox and
        // this tap in the same publish; seeing it here is delivery
        await until(
          () =>
            seen.some(
              (s) => s.env.type === "EVENT" && s.env.payload.name === "START_RACE",
            ),
          2000,
        );
        const receipt = seen.find(
          (s) => s.env.type === "EVENT" && s.env.payload.name === "START_RACE",
        )!;
        expect(receipt.at - pressedAt).toBeLessThan(500);
        expect(receipt.env.sender).toBe("ground");
        const firedT = receipt.env.payload.t as number;

        // both schedulers keep reporting after the event, i.e. they consumed
        // it and moved on rather than stalling in their wait states
        await until(() => {
          const after = seen.filter(
            (s) =>
              s.env.type === "STATUS" && (s.env.payload.t as number) > firedT,
          );
          const ids = new Set(after.map((s) => s.env.payload.drone_id));
          return ids.has("drone_1") && ids.has("drone_2");
        }, 5000);

        // pressing again must not re-fire: the latch re-announces the event
        // with the original firing time instead of a fresh one
        client.sendCommand("fire_event", { name: "START_RACE" });
        await until(
          () =>
            seen.filter(
              (s) => s.env.type === "EVENT" && s.env.payload.name === "START_RACE",
            ).length >= 2,
          2000,
        );
        const events = seen.filter(
          (s) => s.env.type === "EVENT" && s.env.payload.name === "START_RACE",
        );
        for (const e of events) expect(e.env.payload.t).toBe(firedT);
      } finally {
        client.close();
      }
    },
  );
});
