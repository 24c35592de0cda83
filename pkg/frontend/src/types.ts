/** Response shapes returned by the avatar service. */

export interface FaceBox {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface SessionInfo {
  session_id: string;
  face_box: FaceBox;
}

export interface VideoHeaderInfo {
  width: number;
  height: number;
  fps: number;
  frame_count: number;
  audio_sample_rate: number;
  audio_sample_count: number;
  duration_s: number;
}

export interface GenerationResult {
  video_id: string;
  transcript: string | null;
  answer: string | null;
  timings_s: Record<string, number>;
  header: VideoHeaderInfo;
}

export interface VideoManifest extends VideoHeaderInfo {
  video_id: string;
  frames: string[];
  audio_url: string;
}

export interface HealthInfo {
  status: string;
  initialized: boolean;
  init_count: number;
}

export interface ErrorEnvelope {
  error: string;
  message: string;
}
