/**
 * Local bridge between the browser page and the ground-station socket.
 *
 * The ground station speaks newline-framed JSON over TCP; browsers cannot
 * open raw sockets, so this process connects as an ordinary dashboard
 * client and re-exposes the stream to the page over server-sent events,
 * with a small POST endpoint for button presses. One bridge, one socket,
 * one seq counter, which keeps the one-press-one-command rule intact even
 * with several browser tabs open.
 *
 *   node dist/bridge.js --connect 127.0.0.1:8130 [--http 127.0.0.1:8070]
 *                       [--map scenarios/parkour_map.json]
 */

import fs from "node:fs";
import http from "node:http";
import path from "node:path";
import url from "node:url";
import { parseArgs } from "node:util";

import { DashboardClient } from "./client.js";
import type { Envelope } from "./protocol.js";

const HERE = path.dirname(url.fileURLToPath(import.meta.url));
const ROOT = path.resolve(HERE, "..");

function splitHostPort(s: string): [string, number] {
  const idx = s.lastIndexOf(":");
  const port = Number(s.slice(idx + 1));
  if (idx <= 0 || !Number.isInteger(port)) {
    throw new Error(`expected HOST:PORT, got ${s}`);
  }
  return [s.slice(0, idx), port];
}

interface SseSink {
  send(event: string | null, data: unknown): void;
}

export class Bridge {
  readonly client: DashboardClient;
  private sinks = new Set<SseSink>();
  private mapBlob: string;
  private server: http.Server;

  constructor(client: DashboardClient, mapFile?: string) {
    this.client = client;
    this.mapBlob = mapFile
      ? fs.readFileSync(mapFile, "utf-8")
      : JSON.stringify({ no_fly_zones: [], base_stations: [] });
    client.onMessage = (env) => this.fanOut(env);
    client.onConnectionChange = () => this.meta();
    this.server = http.createServer((req, res) => this.handle(req, res));
  }

  private fanOut(env: Envelope): void {
    for (const sink of this.sinks) sink.send(null, env);
  }

  private meta(): void {
    const m = {
      connected: this.client.connected,
      pending: this.client.pendingCount,
    };
    for (const sink of this.sinks) sink.send("meta", m);
  }

  private handle(req: http.IncomingMessage, res: http.ServerResponse): void {
    const u = new URL(req.url ?? "/", "http://bridge");
    if (req.method === "GET" && u.pathname === "/") {
      this.file(res, path.join(ROOT, "index.html"), "text/html");
      return;
    }
    if (req.method === "GET" && u.pathname.startsWith("/dist/")) {
      const rel = path.normalize(u.pathname).replace(/^[/\\]+/, "");
      const full = path.join(ROOT, rel);
      if (!full.startsWith(path.join(ROOT, "dist"))) {
        res.writeHead(404).end();
        return;
      }
      const type = full.endsWith(".js") ? "text/javascript" : "application/json";
      this.file(res, full, type);
      return;
    }
    if (req.method === "GET" && u.pathname === "/map") {
      res.writeHead(200, { "content-type": "application/json" });
      res.end(this.mapBlob);
      return;
    }
    if (req.method === "GET" && u.pathname === "/events") {
      res.writeHead(200, {
        "content-type": "text/event-stream",
        "cache-control": "no-cache",
        connection: "keep-alive",
      });
      const sink: SseSink = {
        send(event, data) {
          if (event) res.write(`event: ${event}\n`);
          res.write(`data: ${JSON.stringify(data)}\n\n`);
        },
      };
      this.sinks.add(sink);
      sink.send("meta", {
        connected: this.client.connected,
        pending: this.client.pendingCount,
      });
      req.on("close", () => this.sinks.delete(sink));
      return;
    }
    if (req.method === "POST" && u.pathname === "/cmd") {
      let body = "";
      req.on("data", (c) => (body += c));
      req.on("end", () => {
        let op: string, args: Record<string, unknown>;
        try {
          const obj = JSON.parse(body);
          op = String(obj.op);
          args = obj.args ?? {};
        } catch {
          res.writeHead(400, { "content-type": "application/json" });
          res.end(JSON.stringify({ error: "body must be {op, args}" }));
          return;
        }
        const env = this.client.sendCommand(op, args);
        this.meta();
        res.writeHead(200, { "content-type": "application/json" });
        res.end(
          JSON.stringify({ seq: env.seq, pending: this.client.pendingCount }),
        );
      });
      return;
    }
    res.writeHead(404).end();
  }

  private file(res: http.ServerResponse, p: string, type: string): void {
    fs.readFile(p, (err, data) => {
      if (err) {
        res.writeHead(404).end();
        return;
      }
      res.writeHead(200, { "content-type": type });
      res.end(data);
    });
  }

  listen(host: string, port: number): Promise<number> {
    return new Promise((resolve) => {
      this.server.listen(port, host, () => {
        const addr = this.server.address();
        resolve(typeof addr === "object" && addr ? addr.port : port);
      });
    });
  }

  close(): void {
    this.server.close();
    this.client.close();
  }
}

async function main(): Promise<void> {
  const { values } = parseArgs({
    options: {
      connect: { type: "string" },
      http: { type: "string", default: "127.0.0.1:8070" },
      map: { type: "string" },
    },
  });
  if (!values.connect) {
    console.error("usage: bridge --connect HOST:PORT [--http HOST:PORT] [--map FILE]");
    process.exit(2);
  }
  const [gsHost, gsPort] = splitHostPort(values.connect);
  const [webHost, webPort] = splitHostPort(values.http);
  const client = new DashboardClient();
  const bridge = new Bridge(client, values.map);
  await client.connect(gsHost, gsPort).catch((err) => {
    console.error(`cannot reach ground station: ${err.message}`);
    process.exit(1);
  });
  const port = await bridge.listen(webHost, webPort);
  console.log(`dashboard at http://${webHost}:${port}/`);
}

if (process.argv[1] && import.meta.url === url.pathToFileURL(process.argv[1]).href) {
  main();
}
