/**
 * Wire protocol between the dashboard and the ground station.
 *
 * Every message is one JSON line: {"type", "sender", "seq", "payload"},
 * compact encoding with object keys sorted, so identical messages are
 * byte-identical regardless of who serialized them. seq is per-sender and
 * strictly increasing; receivers use it to shed stale state.
 *
 * This module is platform neutral (no node imports) so both the bridge
 * process and the browser page can use it.
 */

export const PLAN = "PLAN";
export const EVENT = "EVENT";
export const STOP = "STOP";
export const STATUS = "STATUS";
export const EMERGENCY = "EMERGENCY";
export const REPLAN_NOTICE = "REPLAN_NOTICE";
export const DASH_STATE = "DASH_STATE";
export const DASH_CMD = "DASH_CMD";

export interface Envelope {
  type: string;
  sender: string;
  seq: number;
  payload: Record<string, unknown>;
}

export class WireFormatError extends Error {}

/** JSON.stringify with object keys sorted recursively, arrays kept in order. */
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  const obj = value as Record<string, unknown>;
  const keys = Object.keys(obj).sort();
  const parts = keys.map((k) => JSON.stringify(k) + ":" + canonicalJson(obj[k]));
  return "{" + parts.join(",") + "}";
}

export function encodeEnvelope(env: Envelope): string {
  return (
    canonicalJson({
      type: env.type,
      sender: env.sender,
      seq: env.seq,
      payload: env.payload,
    }) + "\n"
  );
}

export function decodeEnvelope(line: string): Envelope {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch (exc) {
    throw new WireFormatError(`bad JSON: ${exc}`);
  }
  if (obj === null || typeof obj !== "object" || Array.isArray(obj)) {
    throw new WireFormatError("message must be an object");
  }
  const rec = obj as Record<string, unknown>;
  for (const key of ["type", "sender", "seq", "payload"]) {
    if (!(key in rec)) throw new WireFormatError(`missing field ${key}`);
  }
  if (typeof rec.type !== "string" || typeof rec.sender !== "string") {
    throw new WireFormatError("type and sender must be strings");
  }
  if (typeof rec.seq !== "number" || !Number.isInteger(rec.seq)) {
    throw new WireFormatError("seq must be an integer");
  }
  const payload = rec.payload;
  if (payload === null || typeof payload !== "object" || Array.isArray(payload)) {
    throw new WireFormatError("payload must be an object");
  }
  return {
    type: rec.type,
    sender: rec.sender,
    seq: rec.seq,
    payload: payload as Record<string, unknown>,
  };
}

/**
 * Incremental newline framing for a byte or string stream. Partial lines are
 * held until their terminator arrives; blank lines are skipped.
 */
export class LineDecoder {
  private tail = "";

  push(chunk: string | Uint8Array): string[] {
    const text =
      typeof chunk === "string" ? chunk : new TextDecoder().decode(chunk);
    const data = this.tail + text;
    const lines = data.split("\n");
    this.tail = lines.pop() ?? "";
    return lines.filter((l) => l.trim().length > 0);
  }
}
