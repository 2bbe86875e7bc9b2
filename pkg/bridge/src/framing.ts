/**
 * Wire framing: a u32 little-endian byte count followed by a UTF-8 JSON
 * payload. The parser is incremental so it can feed on arbitrary socket
 * chunk boundaries.
 */

export const MAX_FRAME_BYTES = 16 * 1024 * 1024;

export class FramingError extends Error {}

export function encodeFrame(payload: unknown): Buffer {
  const body = Buffer.from(JSON.stringify(payload), "utf-8");
  if (body.length > MAX_FRAME_BYTES) {
    throw new FramingError(`frame too large: ${body.length} bytes`);
  }
  const header = Buffer.alloc(4);
  header.writeUInt32LE(body.length, 0);
  return Buffer.concat([header, body]);
}

/** Accumulates bytes and yields complete JSON payloads. */
export class FrameParser {
  private buf: Buffer = Buffer.alloc(0);

  /** Feed a chunk; returns every payload completed by it. Throws FramingError on garbage. */
  feed(chunk: Buffer): unknown[] {
    this.buf = this.buf.length === 0 ? chunk : Buffer.concat([this.buf, chunk]);
    const out: unknown[] = [];
    let pos = 0;
    while (this.buf.length - pos >= 4) {
      const length = this.buf.readUInt32LE(pos);
      if (length > MAX_FRAME_BYTES) {
        throw new FramingError(`frame length ${length} exceeds limit`);
      }
      if (this.buf.length - pos - 4 < length) {
        break;
      }
      const body = this.buf.subarray(pos + 4, pos + 4 + length);
      let payload: unknown;
      try {
        payload = JSON.parse(body.toString("utf-8"));
      } catch (err) {
        throw new FramingError(`malformed frame payload: ${(err as Error).message}`);
      }
      out.push(payload);
      pos += 4 + length;
    }
    this.buf = this.buf.subarray(pos);
    return out;
  }
}
