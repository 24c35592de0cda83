/**
 * Client-side WAV capture encoding.
 *
 * The service ingests 16 kHz mono PCM, so microphone audio is downmixed,
 * linearly resampled, and packed into a 44-byte-header RIFF/WAVE file
 * before upload.  All functions are pure and DOM-free.
 */

export const TARGET_RATE_HZ = 16000;

/** Average parallel channels of equal length into one mono buffer. */
export function downmixToMono(channels: readonly Float32Array[]): Float32Array {
  if (channels.length === 0) {
    throw new RangeError("no channels to downmix");
  }
  const length = channels[0].length;
  for (const channel of channels) {
    if (channel.length !== length) {
      throw new RangeError("channel lengths differ");
    }
  }
  if (channels.length === 1) {
    return Float32Array.from(channels[0]);
  }
  const mono = new Float32Array(length);
  for (const channel of channels) {
    for (let i = 0; i < length; i++) {
      mono[i] += channel[i];
    }
  }
  const scale = 1 / channels.length;
  for (let i = 0; i < length; i++) {
    mono[i] *= scale;
  }
  return mono;
}

/** Join sequential capture chunks into one contiguous buffer. */
export function concatChunks(chunks: readonly Float32Array[]): Float32Array {
  let total = 0;
  for (const chunk of chunks) {
    total += chunk.length;
  }
  const out = new Float32Array(total);
  let offset = 0;
  for (const chunk of chunks) {
    out.set(chunk, offset);
    offset += chunk.length;
  }
  return out;
}

/** Linear-interpolation resampler; output length is round(n * to / from). */
export function resampleLinear(
  samples: Float32Array,
  fromRate: number,
  toRate: number,
): Float32Array {
  if (fromRate <= 0 || toRate <= 0) {
    throw new RangeError("sample rates must be positive");
  }
  if (fromRate === toRate) {
    return Float32Array.from(samples);
  }
  if (samples.length === 0) {
    return new Float32Array(0);
  }
  const outLength = Math.max(1, Math.round((samples.length * toRate) / fromRate));
  const out = new Float32Array(outLength);
  const step = fromRate / toRate;
  const last = samples.length - 1;
  for (let i = 0; i < outLength; i++) {
    const position = i * step;
    const left = Math.min(Math.floor(position), last);
    const right = Math.min(left + 1, last);
    const frac = position - left;
    out[i] = samples[left] * (1 - frac) + samples[right] * frac;
  }
  return out;
}

function writeAscii(view: DataView, offset: number, text: string): void {
  for (let i = 0; i < text.length; i++) {
    view.setUint8(offset + i, text.charCodeAt(i));
  }
}

/** Pack mono float samples into a PCM16 little-endian WAV file. */
export function encodeWavPcm16(samples: Float32Array, sampleRate: number): Uint8Array {
  const dataBytes = samples.length * 2;
  const view = new DataView(new ArrayBuffer(44 + dataBytes));
  writeAscii(view, 0, "RIFF");
  view.setUint32(4, 36 + dataBytes, true);
  writeAscii(view, 8, "WAVE");
  writeAscii(view, 12, "fmt ");
  view.setUint32(16, 16, true);
  view.setUint16(20, 1, true); // PCM
  view.setUint16(22, 1, true); // mono
  view.setUint32(24, sampleRate, true);
  view.setUint32(28, sampleRate * 2, true);
  view.setUint16(32, 2, true);
  view.setUint16(34, 16, true);
  writeAscii(view, 36, "data");
  view.setUint32(40, dataBytes, true);
  for (let i = 0; i < samples.length; i++) {
    const clamped = Math.min(1, Math.max(-1, samples[i]));
    view.setInt16(44 + i * 2, Math.round(clamped * 32767), true);
  }
  return new Uint8Array(view.buffer);
}

/** Full capture pipeline: concat chunks, resample to 16 kHz, encode WAV. */
export function captureToWav(
  chunks: readonly Float32Array[],
  sourceRate: number,
): Uint8Array {
  const joined = concatChunks(chunks);
  const resampled = resampleLinear(joined, sourceRate, TARGET_RATE_HZ);
  return encodeWavPcm16(resampled, TARGET_RATE_HZ);
}
