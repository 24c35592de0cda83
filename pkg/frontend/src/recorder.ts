import { captureToWav, downmixToMono } from "./wav.js";

/**
 * Microphone capture that accumulates raw PCM chunks and, on stop, returns
 * a 16 kHz mono WAV ready for upload.  Uses a ScriptProcessorNode so the
 * float samples are available directly without any codec round-trip.
 */
export class MicRecorder {
  private context: AudioContext | null = null;
  private stream: MediaStream | null = null;
  private source: MediaStreamAudioSourceNode | null = null;
  private processor: ScriptProcessorNode | null = null;
  private chunks: Float32Array[] = [];

  get recording(): boolean {
    return this.context !== null;
  }

  async start(): Promise<void> {
    if (this.context) {
      throw new Error("already recording");
    }
    const stream = await navigator.mediaDevices.getUserMedia({ audio: true });
    const context = new AudioContext();
    const source = context.createMediaStreamSource(stream);
    const processor = context.createScriptProcessor(4096, 1, 1);
    this.chunks = [];
    processor.onaudioprocess = (event) => {
      const buffer = event.inputBuffer;
      const channels: Float32Array[] = [];
      for (let c = 0; c < buffer.numberOfChannels; c++) {
        channels.push(buffer.getChannelData(c));
      }
      // downmixToMono copies, so the live views handed out by the audio
      // graph are never retained across callbacks.
      this.chunks.push(downmixToMono(channels));
    };
    source.connect(processor);
    processor.connect(context.destination);
    this.context = context;
    this.stream = stream;
    this.source = source;
    this.processor = processor;
  }

  async stop(): Promise<Uint8Array> {
    const context = this.context;
    if (!context) {
      throw new Error("not recording");
    }
    const sampleRate = context.sampleRate;
    this.processor?.disconnect();
    this.source?.disconnect();
    this.stream?.getTracks().forEach((track) => track.stop());
    await context.close();
    const wav = captureToWav(this.chunks, sampleRate);
    this.chunks = [];
    this.context = null;
    this.stream = null;
    this.source = null;
    this.processor = null;
    return wav;
  }
}
