/**
 * CAPK binary tensor files: magic "CAPK", u32 version, u32 ndim, u64 dims,
 * then row-major little-endian float32 payload.
 *
 * Reading returns a Float32Array view over the file buffer (zero copy);
 * writing a BoundArray back produces byte-identical files.
 */

export interface BoundArray {
  data: Float32Array;
  shape: number[];
}

const MAGIC = 0x4b504143; // "CAPK" little-endian
const VERSION = 1;

export function decodeCapk(raw: Buffer): BoundArray {
  if (raw.length < 12) {
    throw new Error("CAPK: truncated header");
  }
  if (raw.readUInt32LE(0) !== MAGIC) {
    throw new Error("CAPK: bad magic");
  }
  const version = raw.readUInt32LE(4);
  if (version !== VERSION) {
    throw new Error(`CAPK: unsupported version ${version}`);
  }
  const ndim = raw.readUInt32LE(8);
  const shape: number[] = [];
  let offset = 12;
  for (let i = 0; i < ndim; i++) {
    const dim = raw.readBigUInt64LE(offset);
    shape.push(Number(dim));
    offset += 8;
  }
  const count = shape.reduce((a, b) => a * b, 1);
  if (raw.length !== offset + 4 * count) {
    throw new Error(
      `CAPK: payload size mismatch (${raw.length - offset} bytes for ${count} floats)`,
    );
  }
  // zero-copy view when the payload is 4-byte aligned, else one copy
  const byteOffset = raw.byteOffset + offset;
  const data =
    byteOffset % 4 === 0
      ? new Float32Array(raw.buffer, byteOffset, count)
      : new Float32Array(raw.subarray(offset).buffer.slice(byteOffset, byteOffset + 4 * count));
  return { data, shape };
}

export function encodeCapk(array: BoundArray): Buffer {
  const count = array.shape.reduce((a, b) => a * b, 1);
  if (count !== array.data.length) {
    throw new Error("CAPK: shape does not match data length");
  }
  const header = Buffer.alloc(12 + 8 * array.shape.length);
  header.writeUInt32LE(MAGIC, 0);
  header.writeUInt32LE(VERSION, 4);
  header.writeUInt32LE(array.shape.length, 8);
  array.shape.forEach((dim, i) => header.writeBigUInt64LE(BigInt(dim), 12 + 8 * i));
  const payload = Buffer.from(array.data.buffer, array.data.byteOffset, 4 * count);
  return Buffer.concat([header, payload]);
}
