import type { UtalkClient } from "./api.js";
import type { VideoManifest } from "./types.js";

/**
 * Map an audio playhead position to the frame index to display.
 *
 * Pure, so pause/resume resynchronisation is inherent: the shown frame is
 * always derived from the audio element's current time, never from a
 * separate frame counter that could drift.
 */
export function frameForTime(timeS: number, fps: number, frameCount: number): number {
  if (frameCount <= 0) {
    throw new RangeError("frameCount must be positive");
  }
  if (!Number.isFinite(timeS) || timeS <= 0) {
    return 0;
  }
  return Math.min(Math.floor(timeS * fps), frameCount - 1);
}

/**
 * Canvas frame player driven by an <audio> element.
 *
 * Frames are fetched from the service's per-frame PNG endpoints once at
 * load time; during playback a requestAnimationFrame loop paints whichever
 * frame corresponds to the audio clock.
 */
export class FramePlayer {
  private readonly canvas: HTMLCanvasElement;
  private readonly audio: HTMLAudioElement;
  private frames: ImageBitmap[] = [];
  private manifest: VideoManifest | null = null;
  private rafHandle: number | null = null;
  private lastDrawn = -1;

  constructor(canvas: HTMLCanvasElement, audio: HTMLAudioElement) {
    this.canvas = canvas;
    this.audio = audio;
    this.audio.addEventListener("ended", () => this.stopLoop());
  }

  get loaded(): boolean {
    return this.manifest !== null;
  }

  async load(client: UtalkClient, manifest: VideoManifest): Promise<void> {
    this.stopLoop();
    this.audio.pause();
    for (const frame of this.frames) {
      frame.close();
    }
    this.frames = [];
    this.manifest = null;
    this.lastDrawn = -1;

    const fetched = await Promise.all(
      manifest.frames.map(async (_url, index) => {
        const png = await client.fetchFrame(manifest.video_id, index);
        return createImageBitmap(new Blob([png], { type: "image/png" }));
      }),
    );
    this.frames = fetched;
    this.manifest = manifest;
    this.canvas.width = manifest.width;
    this.canvas.height = manifest.height;
    this.audio.src = client.audioUrl(manifest.video_id);
    this.drawCurrent();
  }

  play(): void {
    if (!this.manifest) {
      return;
    }
    if (this.audio.ended || this.audio.currentTime >= this.manifest.duration_s) {
      this.audio.currentTime = 0;
    }
    void this.audio.play();
    this.startLoop();
  }

  pause(): void {
    this.audio.pause();
    this.drawCurrent();
    this.stopLoop();
  }

  get playing(): boolean {
    return !this.audio.paused && !this.audio.ended;
  }

  dispose(): void {
    this.stopLoop();
    this.audio.pause();
    for (const frame of this.frames) {
      frame.close();
    }
    this.frames = [];
    this.manifest = null;
  }

  private startLoop(): void {
    if (this.rafHandle !== null) {
      return;
    }
    const tick = () => {
      this.rafHandle = requestAnimationFrame(tick);
      this.drawCurrent();
    };
    this.rafHandle = requestAnimationFrame(tick);
  }

  private stopLoop(): void {
    if (this.rafHandle !== null) {
      cancelAnimationFrame(this.rafHandle);
      this.rafHandle = null;
    }
    this.drawCurrent();
  }

  private drawCurrent(): void {
    if (!this.manifest || this.frames.length === 0) {
      return;
    }
    const index = frameForTime(
      this.audio.currentTime,
      this.manifest.fps,
      this.manifest.frame_count,
    );
    if (index === this.lastDrawn) {
      return;
    }
    const context = this.canvas.getContext("2d");
    if (!context) {
      return;
    }
    context.drawImage(this.frames[Math.min(index, this.frames.length - 1)], 0, 0);
    this.lastDrawn = index;
  }
}
