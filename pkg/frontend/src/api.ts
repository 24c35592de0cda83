import type {
  GenerationResult,
  HealthInfo,
  SessionInfo,
  VideoManifest,
} from "./types.js";

/** Minimal fetch signature so tests can inject a fake transport. */
export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** A non-2xx service reply, carrying the machine-readable envelope code. */
export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(code: string, message: string, status: number) {
    super(message);
    this.name = "ApiError";
    this.code = code;
    this.status = status;
  }
}

export interface GenerationInput {
  text?: string;
  audio?: Blob;
}

async function responseBody(response: Response): Promise<unknown> {
  const contentType = response.headers.get("content-type") ?? "";
  if (contentType.startsWith("application/json")) {
    try {
      return await response.json();
    } catch {
      return null;
    }
  }
  return await response.text();
}

function toApiError(status: number, body: unknown): ApiError {
  if (typeof body === "object" && body !== null) {
    const envelope = body as Record<string, unknown>;
    if (typeof envelope.error === "string" && typeof envelope.message === "string") {
      return new ApiError(envelope.error, envelope.message, status);
    }
  }
  return new ApiError("http_error", `request failed with status ${status}`, status);
}

/** Typed client for the avatar service; every call goes through one base URL. */
export class UtalkClient {
  readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async requestJson<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const body = await responseBody(response);
    if (!response.ok) {
      throw toApiError(response.status, body);
    }
    return body as T;
  }

  private async requestBytes(path: string): Promise<ArrayBuffer> {
    const response = await this.fetchImpl(this.baseUrl + path);
    if (!response.ok) {
      throw toApiError(response.status, await responseBody(response));
    }
    return await response.arrayBuffer();
  }

  async healthz(): Promise<HealthInfo> {
    return this.requestJson<HealthInfo>("/healthz");
  }

  async createSession(image: Blob, filename = "avatar.png"): Promise<SessionInfo> {
    const form = new FormData();
    form.append("image", image, filename);
    return this.requestJson<SessionInfo>("/sessions", { method: "POST", body: form });
  }

  async chat(sessionId: string, input: GenerationInput, fps?: number): Promise<GenerationResult> {
    return this.generate("chat", sessionId, input, fps);
  }

  async content(sessionId: string, input: GenerationInput, fps?: number): Promise<GenerationResult> {
    return this.generate("content", sessionId, input, fps);
  }

  private async generate(
    kind: "chat" | "content",
    sessionId: string,
    input: GenerationInput,
    fps?: number,
  ): Promise<GenerationResult> {
    const hasText = typeof input.text === "string";
    const hasAudio = input.audio instanceof Blob;
    if (hasText === hasAudio) {
      throw new TypeError("exactly one of text or audio input is required");
    }
    const query = fps === undefined ? "" : `?fps=${fps}`;
    const path = `/sessions/${encodeURIComponent(sessionId)}/${kind}${query}`;
    if (hasText) {
      return this.requestJson<GenerationResult>(path, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ text: input.text }),
      });
    }
    const form = new FormData();
    form.append("audio", input.audio as Blob, "input.wav");
    return this.requestJson<GenerationResult>(path, { method: "POST", body: form });
  }

  async manifest(videoId: string): Promise<VideoManifest> {
    return this.requestJson<VideoManifest>(`/videos/${encodeURIComponent(videoId)}/manifest`);
  }

  async fetchFrame(videoId: string, index: number): Promise<ArrayBuffer> {
    return this.requestBytes(`/videos/${encodeURIComponent(videoId)}/frames/${index}`);
  }

  async fetchAudio(videoId: string): Promise<ArrayBuffer> {
    return this.requestBytes(`/videos/${encodeURIComponent(videoId)}/audio`);
  }

  videoUrl(videoId: string): string {
    return `${this.baseUrl}/videos/${encodeURIComponent(videoId)}`;
  }

  frameUrl(videoId: string, index: number): string {
    return `${this.videoUrl(videoId)}/frames/${index}`;
  }

  audioUrl(videoId: string): string {
    return `${this.videoUrl(videoId)}/audio`;
  }

  previewUrl(videoId: string): string {
    return `${this.videoUrl(videoId)}/preview`;
  }
}
