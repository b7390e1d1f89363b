import { describe, expect, it } from "vitest";

import {
  LineDecoder,
  WireFormatError,
  canonicalJson,
  decodeEnvelope,
  encodeEnvelope,
} from "../src/protocol.js";

describe("envelope codec", () => {
  it("encodes byte-identically to the ground station encoder", () => {
    // golden line produced by the python side for the same message
    const line = encodeEnvelope({
      type: "DASH_CMD",
      sender: "dash",
      seq: 3,
      payload: { op: "fire_event", args: { name: "START_RACE" } },
    });
    expect(line).toBe(
      '{"payload":{"args":{"name":"START_RACE"},"op":"fire_event"},"sender":"dash","seq":3,"type":"DASH_CMD"}\n',
    );
  });

  it("round-trips through decode", () => {
    const env = {
      type: "STATUS",
      sender: "drone_1",
      seq: 41,
      payload: { phase: "shooting", nested: { a: [1, 2, 3] } },
    };
    expect(decodeEnvelope(encodeEnvelope(env).trimEnd())).toEqual(env);
  });

  it("sorts keys recursively and keeps arrays in order", () => {
    expect(canonicalJson({ b: 1, a: { d: 2, c: [3, { f: 4, e: 5 }] } })).toBe(
      '{"a":{"c":[3,{"e":5,"f":4}],"d":2},"b":1}',
    );
  });

  it("rejects malformed lines", () => {
    const bad = [
      "not json",
      "[1,2,3]",
      '"just a string"',
      '{"type":"X","sender":"y","seq":1}', // no payload
      '{"type":"X","sender":"y","seq":1.5,"payload":{}}', // fractional seq
      '{"type":"X","sender":"y","seq":"1","payload":{}}',
      '{"type":1,"sender":"y","seq":1,"payload":{}}',
      '{"type":"X","sender":"y","seq":1,"payload":[]}',
    ];
    for (const line of bad) {
      expect(() => decodeEnvelope(line), line).toThrow(WireFormatError);
    }
  });
});

describe("line framing", () => {
  it("holds partial lines until the newline arrives", () => {
    const dec = new LineDecoder();
    expect(dec.push('{"a":1}\n{"b"')).toEqual(['{"a":1}']);
    expect(dec.push(":2}")).toEqual([]);
    expect(dec.push("\n")).toEqual(['{"b":2}']);
  });

  it("accepts bytes and skips blank lines", () => {
    const dec = new LineDecoder();
    const chunk = new TextEncoder().encode('\n{"a":1}\n\n{"b":2}\n');
    expect(dec.push(chunk)).toEqual(['{"a":1}', '{"b":2}']);
  });
});
