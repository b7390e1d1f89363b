/**
 * TCP client for the ground-station dashboard listener.
 *
 * One socket, line framed. Commands go out as DASH_CMD envelopes with a
 * per-sender strictly increasing seq; one call, one envelope, no batching
 * and no retries that could double-fire an event. While disconnected,
 * commands queue locally (the UI shows them as pending) and flush in order
 * on reconnect, seq already assigned so ordering survives the gap.
 */

import net from "node:net";

import {
  DASH_CMD,
  LineDecoder,
  decodeEnvelope,
  encodeEnvelope,
  type Envelope,
} from "./protocol.js";

export class DashboardClient {
  readonly sender: string;
  onMessage: ((env: Envelope) => void) | null = null;
  onConnectionChange: ((connected: boolean) => void) | null = null;

  private sock: net.Socket | null = null;
  private decoder = new LineDecoder();
  private seq = 0;
  private queue: string[] = [];
  private closed = false;

  constructor(sender = "dash") {
    this.sender = sender;
  }

  get connected(): boolean {
    return this.sock !== null;
  }

  /** Commands waiting for a connection; drives the pending badge. */
  get pendingCount(): number {
    return this.queue.length;
  }

  connect(host: string, port: number): Promise<void> {
    return new Promise((resolve, reject) => {
      const sock = net.createConnection({ host, port }, () => {
        this.sock = sock;
        this.flush();
        this.onConnectionChange?.(true);
        resolve();
      });
      sock.setNoDelay(true);
      sock.on("data", (chunk) => {
        for (const line of this.decoder.push(chunk)) {
          let env: Envelope;
          try {
            env = decodeEnvelope(line);
          } catch {
            continue; // transport noise; the store never sees it
          }
          this.onMessage?.(env);
        }
      });
      sock.on("error", (err) => {
        if (this.sock === null) reject(err);
      });
      sock.on("close", () => {
        if (this.sock === sock) {
          this.sock = null;
          if (!this.closed) this.onConnectionChange?.(false);
        }
      });
    });
  }

  /**
   * Emit exactly one DASH_CMD for this press and return it. args must be
   * JSON-serializable; the ground station reads `op` plus op-specific keys.
   */
  sendCommand(op: string, args: Record<string, unknown> = {}): Envelope {
    this.seq += 1;
    const env: Envelope = {
      type: DASH_CMD,
      sender: this.sender,
      seq: this.seq,
      payload: { op, args },
    };
    const line = encodeEnvelope(env);
    if (this.sock) {
      this.sock.write(line);
    } else {
      this.queue.push(line);
    }
    return env;
  }

  private flush(): void {
    if (!this.sock) return;
    for (const line of this.queue) this.sock.write(line);
    this.queue = [];
  }

  close(): void {
    this.closed = true;
    this.sock?.destroy();
    this.sock = null;
  }
}
