import { ApiError, UtalkClient } from "./api.js";
import { FramePlayer } from "./player.js";
import { MicRecorder } from "./recorder.js";
import {
  AppState,
  FPS_MAX,
  FPS_MIN,
  HistoryEntry,
  TabName,
  baseUrlChanged,
  canSubmit,
  dismissBanner,
  initialState,
  sessionCreated,
  sessionUploadFailed,
  sessionUploadStarted,
  setFps,
  submitFailed,
  submitStarted,
  submitSucceeded,
  switchTab,
} from "./state.js";
import type { GenerationResult } from "./types.js";

const TABS: readonly TabName[] = ["chat", "content"];

const TAB_BLURB: Record<TabName, string> = {
  chat: "Ask a question; the avatar answers it aloud.",
  content: "Provide a script or a voice clip; the avatar performs it verbatim.",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function errorMessage(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.message} (${err.code})`;
  }
  if (err instanceof Error) {
    return err.message;
  }
  return String(err);
}

/** Build a history entry strictly from service response fields. */
export function entryFromResult(request: string, result: GenerationResult): HistoryEntry {
  return {
    request,
    transcript: result.transcript,
    answer: result.answer,
    videoId: result.video_id,
    fps: result.header.fps,
    frameCount: result.header.frame_count,
    durationS: result.header.duration_s,
  };
}

interface TabWidgets {
  panel: HTMLElement;
  button: HTMLButtonElement;
  banner: HTMLElement;
  bannerText: HTMLElement;
  textInput: HTMLInputElement;
  micButton: HTMLButtonElement;
  clipLabel: HTMLElement;
  submitButton: HTMLButtonElement;
  historyList: HTMLOListElement;
}

export function mountApp(root: HTMLElement, defaultBaseUrl = "http://127.0.0.1:8787"): void {
  let appState: AppState = initialState();
  let client = new UtalkClient(defaultBaseUrl);
  const recorder = new MicRecorder();
  const voiceClips = new Map<TabName, Uint8Array | null>();

  // --- static scaffolding -------------------------------------------------
  const header = el("header");
  header.append(el("h1", "", "uTalk"));
  const baseRow = el("div", "row");
  const baseInput = el("input");
  baseInput.type = "url";
  baseInput.value = defaultBaseUrl;
  baseInput.spellcheck = false;
  const baseApply = el("button", "", "apply");
  baseRow.append(el("label", "", "service"), baseInput, baseApply);
  header.append(baseRow);

  const sessionRow = el("div", "row");
  const avatarInput = el("input");
  avatarInput.type = "file";
  avatarInput.accept = "image/png,image/jpeg";
  const uploadButton = el("button", "", "upload avatar");
  const sessionLabel = el("span", "session-label", "upload an avatar to begin");
  sessionRow.append(avatarInput, uploadButton, sessionLabel);
  header.append(sessionRow);

  const fpsRow = el("div", "row");
  const fpsSlider = el("input");
  fpsSlider.type = "range";
  fpsSlider.min = String(FPS_MIN);
  fpsSlider.max = String(FPS_MAX);
  fpsSlider.step = "1";
  fpsSlider.value = String(appState.fps);
  const fpsLabel = el("span", "fps-label");
  fpsRow.append(el("label", "", "frame rate"), fpsSlider, fpsLabel);
  header.append(fpsRow);

  const tabBar = el("nav", "tabs");
  const main = el("main");

  const widgets = {} as Record<TabName, TabWidgets>;
  for (const tab of TABS) {
    const button = el("button", "tab-button", tab);
    button.addEventListener("click", () => {
      appState = switchTab(appState, tab);
      render();
    });
    tabBar.append(button);

    const panel = el("section", "panel");
    panel.append(el("p", "blurb", TAB_BLURB[tab]));

    const banner = el("div", "banner");
    const bannerText = el("span");
    const bannerDismiss = el("button", "dismiss", "×");
    bannerDismiss.addEventListener("click", () => {
      appState = dismissBanner(appState, tab);
      render();
    });
    banner.append(bannerText, bannerDismiss);
    panel.append(banner);

    const inputRow = el("div", "row");
    const textInput = el("input");
    textInput.type = "text";
    textInput.placeholder = tab === "chat" ? "type a question" : "type a script";
    const micButton = el("button", "", "record");
    const clipLabel = el("span", "clip-label", "");
    const submitButton = el("button", "submit", "submit");
    inputRow.append(textInput, micButton, clipLabel, submitButton);
    panel.append(inputRow);

    const historyList = el("ol", "history");
    panel.append(historyList);
    main.append(panel);

    widgets[tab] = {
      panel,
      button,
      banner,
      bannerText,
      textInput,
      micButton,
      clipLabel,
      submitButton,
      historyList,
    };

    textInput.addEventListener("keydown", (event) => {
      if (event.key === "Enter") {
        void submit(tab);
      }
    });
    submitButton.addEventListener("click", () => void submit(tab));
    micButton.addEventListener("click", () => void toggleMic(tab));
  }

  const playerSection = el("section", "player");
  const canvas = el("canvas");
  const audio = el("audio");
  audio.style.display = "none";
  const playerRow = el("div", "row");
  const playButton = el("button", "", "play");
  const pauseButton = el("button", "", "pause");
  const playerStatus = el("span", "player-status", "no video loaded");
  playerRow.append(playButton, pauseButton, playerStatus);
  playerSection.append(canvas, audio, playerRow);

  root.append(header, tabBar, main, playerSection);
  const player = new FramePlayer(canvas, audio);

  // --- behaviour ----------------------------------------------------------
  baseApply.addEventListener("click", () => {
    client = new UtalkClient(baseInput.value.trim());
    appState = baseUrlChanged(appState);
    render();
  });

  uploadButton.addEventListener("click", () => void uploadAvatar());

  fpsSlider.addEventListener("input", () => {
    appState = setFps(appState, Number(fpsSlider.value));
    render();
  });

  playButton.addEventListener("click", () => player.play());
  pauseButton.addEventListener("click", () => player.pause());

  async function uploadAvatar(): Promise<void> {
    const file = avatarInput.files?.[0];
    if (!file) {
      appState = sessionUploadFailed(appState, "choose an image file first");
      render();
      return;
    }
    appState = sessionUploadStarted(appState);
    render();
    try {
      const session = await client.createSession(file, file.name);
      appState = sessionCreated(appState, session.session_id);
    } catch (err) {
      appState = sessionUploadFailed(appState, errorMessage(err));
    }
    render();
  }

  async function toggleMic(tab: TabName): Promise<void> {
    const tabWidgets = widgets[tab];
    try {
      if (recorder.recording) {
        const wav = await recorder.stop();
        voiceClips.set(tab, wav);
        const seconds = (wav.length - 44) / 2 / 16000;
        tabWidgets.clipLabel.textContent = `voice clip ready (${seconds.toFixed(1)} s)`;
        tabWidgets.micButton.textContent = "record";
      } else {
        await recorder.start();
        tabWidgets.micButton.textContent = "stop";
        tabWidgets.clipLabel.textContent = "recording…";
      }
    } catch (err) {
      appState = submitFailed(appState, tab, errorMessage(err));
      tabWidgets.micButton.textContent = "record";
    }
    render();
  }

  async function submit(tab: TabName): Promise<void> {
    if (!canSubmit(appState, tab) || recorder.recording) {
      return;
    }
    const tabWidgets = widgets[tab];
    const clip = voiceClips.get(tab) ?? null;
    const text = tabWidgets.textInput.value.trim();
    if (!clip && !text) {
      appState = submitFailed(appState, tab, "type something or record a voice clip");
      render();
      return;
    }
    const input = clip
      ? { audio: new Blob([clip.buffer as ArrayBuffer], { type: "audio/wav" }) }
      : { text };
    const requestLabel = clip ? "(voice clip)" : text;
    appState = submitStarted(appState, tab);
    render();
    try {
      const sessionId = appState.sessionId as string;
      const result =
        tab === "chat"
          ? await client.chat(sessionId, input, appState.fps)
          : await client.content(sessionId, input, appState.fps);
      appState = submitSucceeded(appState, tab, entryFromResult(requestLabel, result));
      voiceClips.set(tab, null);
      tabWidgets.clipLabel.textContent = "";
      tabWidgets.textInput.value = "";
      render();
      await playVideo(tab, result.video_id);
    } catch (err) {
      appState = submitFailed(appState, tab, errorMessage(err));
      render();
    }
  }

  async function playVideo(tab: TabName, videoId: string): Promise<void> {
    try {
      playerStatus.textContent = "loading frames…";
      const manifest = await client.manifest(videoId);
      await player.load(client, manifest);
      playerStatus.textContent = `${manifest.frame_count} frames at ${manifest.fps} fps`;
      player.play();
    } catch (err) {
      appState = submitFailed(appState, tab, `playback failed: ${errorMessage(err)}`);
      playerStatus.textContent = "no video loaded";
      render();
    }
  }

  function renderHistory(tab: TabName): void {
    const list = widgets[tab].historyList;
    list.replaceChildren();
    for (const entry of appState.tabs[tab].history) {
      const item = el("li");
      item.append(el("div", "req", `you: ${entry.request}`));
      if (entry.transcript !== null) {
        item.append(el("div", "heard", `heard: ${entry.transcript}`));
      }
      if (entry.answer !== null) {
        item.append(el("div", "ans", entry.answer));
      }
      const meta = el("div", "meta");
      meta.append(
        el("span", "", `${entry.fps} fps · ${entry.frameCount} frames`),
      );
      const replay = el("button", "", "play");
      replay.addEventListener("click", () => void playVideo(tab, entry.videoId));
      meta.append(replay);
      item.append(meta);
      list.append(item);
    }
  }

  function render(): void {
    sessionLabel.textContent = appState.sessionPending
      ? "uploading…"
      : appState.sessionId
        ? `session ${appState.sessionId}`
        : "upload an avatar to begin";
    uploadButton.disabled = appState.sessionPending;
    fpsLabel.textContent = `${appState.fps} fps`;
    fpsSlider.value = String(appState.fps);

    for (const tab of TABS) {
      const tabWidgets = widgets[tab];
      const tabState = appState.tabs[tab];
      tabWidgets.button.classList.toggle("active", appState.activeTab === tab);
      tabWidgets.panel.style.display = appState.activeTab === tab ? "" : "none";
      tabWidgets.banner.style.display = tabState.banner === null ? "none" : "";
      tabWidgets.bannerText.textContent = tabState.banner ?? "";
      tabWidgets.submitButton.disabled = !canSubmit(appState, tab);
      tabWidgets.submitButton.textContent = tabState.pending ? "working…" : "submit";
      renderHistory(tab);
    }
  }

  render();
}
