import assert from "node:assert/strict";
import { test } from "node:test";

import { FrameParser, FramingError, encodeFrame } from "../src/framing";

// deterministic xorshift so the fuzz corpus is reproducible
function makeRng(seed: number): () => number {
  let s = seed >>> 0 || 1;
  return () => {
    s ^= s << 13;
    s >>>= 0;
    s ^= s >> 17;
    s ^= s << 5;
    s >>>= 0;
    return s / 0xffffffff;
  };
}

function randomPayload(rng: () => number): Record<string, unknown> {
  const n = Math.floor(rng() * 40);
  const values: number[] = [];
  for (let i = 0; i < n; i++) {
    values.push(rng() * 2000 - 1000);
  }
  return {
    op: "step",
    values,
    k: Math.floor(rng() * 2 ** 31),
    s: "x".repeat(Math.floor(rng() * 300)),
    nested: { a: rng(), b: [rng(), rng()] },
  };
}

test("round trip is exact on 1000 random payloads", () => {
  const rng = makeRng(1234);
  for (let i = 0; i < 1000; i++) {
    const payload = randomPayload(rng);
    const parser = new FrameParser();
    const got = parser.feed(encodeFrame(payload));
    assert.equal(got.length, 1);
    assert.deepEqual(got[0], payload);
  }
});

test("round trip survives a payload near 1 MB", () => {
  const payload = { op: "blob", data: "y".repeat(1_000_000) };
  const parser = new FrameParser();
  const got = parser.feed(encodeFrame(payload));
  assert.deepEqual(got, [payload]);
});

test("length prefix is a little-endian byte count", () => {
  const frame = encodeFrame({ op: "ping" });
  // {"op":"ping"} is 13 bytes
  assert.deepEqual([...frame.subarray(0, 4)], [0x0d, 0x00, 0x00, 0x00]);
});

test("parser handles arbitrary chunk boundaries", () => {
  const a = encodeFrame({ op: "a", v: 1 });
  const b = encodeFrame({ op: "b", v: [2, 3] });
  const stream = Buffer.concat([a, b]);
  for (let cut = 1; cut < stream.length; cut++) {
    const parser = new FrameParser();
    const got = [...parser.feed(stream.subarray(0, cut)), ...parser.feed(stream.subarray(cut))];
    assert.deepEqual(got, [
      { op: "a", v: 1 },
      { op: "b", v: [2, 3] },
    ]);
  }
});

test("oversize length is rejected", () => {
  const bad = Buffer.alloc(5);
  bad.writeUInt32LE(0x7fffffff, 0);
  const parser = new FrameParser();
  assert.throws(() => parser.feed(bad), FramingError);
});

test("non-JSON payload is rejected", () => {
  const body = Buffer.from("{{{", "utf-8");
  const header = Buffer.alloc(4);
  header.writeUInt32LE(body.length, 0);
  const parser = new FrameParser();
  assert.throws(() => parser.feed(Buffer.concat([header, body])), FramingError);
});
