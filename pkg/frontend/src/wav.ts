/** Minimal RIFF/WAVE io for mono 32-bit float PCM (format 3). */

export function encodeWavFloat32(samples: Float32Array, sampleRate: number): Buffer {
  const dataBytes = samples.length * 4;
  const buf = Buffer.alloc(44 + dataBytes);
  buf.write("RIFF", 0, "ascii");
  buf.writeUInt32LE(36 + dataBytes, 4);
  buf.write("WAVE", 8, "ascii");
  buf.write("fmt ", 12, "ascii");
  buf.writeUInt32LE(16, 16); // fmt chunk size
  buf.writeUInt16LE(3, 20); // IEEE float
  buf.writeUInt16LE(1, 22); // mono
  buf.writeUInt32LE(sampleRate, 24);
  buf.writeUInt32LE(sampleRate * 4, 28); // byte rate
  buf.writeUInt16LE(4, 32); // block align
  buf.writeUInt16LE(32, 34); // bits per sample
  buf.write("data", 36, "ascii");
  buf.writeUInt32LE(dataBytes, 40);
  Buffer.from(samples.buffer, samples.byteOffset, dataBytes).copy(buf, 44);
  return buf;
}

export function decodeWavFloat32(raw: Buffer): { samples: Float32Array; sampleRate: number } {
  if (raw.toString("ascii", 0, 4) !== "RIFF" || raw.toString("ascii", 8, 12) !== "WAVE") {
    throw new Error("not a RIFF/WAVE file");
  }
  let offset = 12;
  let sampleRate = 0;
  let format = 0;
  let channels = 1;
  while (offset + 8 <= raw.length) {
    const chunkId = raw.toString("ascii", offset, offset + 4);
    const chunkSize = raw.readUInt32LE(offset + 4);
    const body = offset + 8;
    if (chunkId === "fmt ") {
      format = raw.readUInt16LE(body);
      channels = raw.readUInt16LE(body + 2);
      sampleRate = raw.readUInt32LE(body + 4);
    } else if (chunkId === "data") {
      if (format !== 3) {
        throw new Error(`expected 32-bit float PCM, got format ${format}`);
      }
      if (channels !== 1) {
        throw new Error(`expected mono, got ${channels} channels`);
      }
      const count = Math.floor(chunkSize / 4);
      const byteOffset = raw.byteOffset + body;
      const samples =
        byteOffset % 4 === 0
          ? new Float32Array(raw.buffer, byteOffset, count)
          : new Float32Array(raw.buffer.slice(byteOffset, byteOffset + 4 * count));
      return { samples, sampleRate };
    }
    offset = body + chunkSize + (chunkSize % 2);
  }
  throw new Error("no data chunk found");
}
