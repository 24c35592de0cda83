/**
 * UI state and transitions, kept pure so every rule is unit-testable:
 *
 * - at most one in-flight request per tab (submit is disabled while pending);
 * - failures surface as a dismissible per-tab banner, never silently;
 * - history lives in memory for the lifetime of the page;
 * - the fps slider is clamped to the service's supported range;
 * - every displayed value in a history entry comes from a response field.
 */

export const FPS_MIN = 16;
export const FPS_MAX = 25;
export const DEFAULT_FPS = 20;

export type TabName = "chat" | "content";

export interface HistoryEntry {
  /** What the user submitted: the typed text, or a voice-clip marker. */
  readonly request: string;
  readonly transcript: string | null;
  readonly answer: string | null;
  readonly videoId: string;
  readonly fps: number;
  readonly frameCount: number;
  readonly durationS: number;
}

export interface TabState {
  readonly pending: boolean;
  readonly banner: string | null;
  readonly history: readonly HistoryEntry[];
}

export interface AppState {
  readonly activeTab: TabName;
  readonly fps: number;
  readonly sessionId: string | null;
  readonly sessionPending: boolean;
  readonly tabs: Readonly<Record<TabName, TabState>>;
}

const EMPTY_TAB: TabState = { pending: false, banner: null, history: [] };

export function initialState(): AppState {
  return {
    activeTab: "chat",
    fps: DEFAULT_FPS,
    sessionId: null,
    sessionPending: false,
    tabs: { chat: EMPTY_TAB, content: EMPTY_TAB },
  };
}

function withTab(state: AppState, tab: TabName, patch: Partial<TabState>): AppState {
  return {
    ...state,
    tabs: { ...state.tabs, [tab]: { ...state.tabs[tab], ...patch } },
  };
}

export function switchTab(state: AppState, tab: TabName): AppState {
  return { ...state, activeTab: tab };
}

export function setFps(state: AppState, fps: number): AppState {
  const clamped = Math.min(FPS_MAX, Math.max(FPS_MIN, Math.round(fps)));
  return { ...state, fps: clamped };
}

export function sessionUploadStarted(state: AppState): AppState {
  if (state.sessionPending) {
    throw new Error("an avatar upload is already pending");
  }
  return withTab({ ...state, sessionPending: true }, state.activeTab, { banner: null });
}

export function sessionCreated(state: AppState, sessionId: string): AppState {
  return { ...state, sessionPending: false, sessionId };
}

export function sessionUploadFailed(state: AppState, message: string): AppState {
  return withTab({ ...state, sessionPending: false }, state.activeTab, {
    banner: message,
  });
}

/** Pointing at a different service invalidates the session, not the history. */
export function baseUrlChanged(state: AppState): AppState {
  return { ...state, sessionId: null, sessionPending: false };
}

export function canSubmit(state: AppState, tab: TabName): boolean {
  return state.sessionId !== null && !state.tabs[tab].pending;
}

export function submitStarted(state: AppState, tab: TabName): AppState {
  if (!canSubmit(state, tab)) {
    throw new Error(`cannot submit on ${tab}: no session or a request is pending`);
  }
  return withTab(state, tab, { pending: true, banner: null });
}

export function submitSucceeded(
  state: AppState,
  tab: TabName,
  entry: HistoryEntry,
): AppState {
  return withTab(state, tab, {
    pending: false,
    banner: null,
    history: [...state.tabs[tab].history, entry],
  });
}

export function submitFailed(state: AppState, tab: TabName, message: string): AppState {
  return withTab(state, tab, { pending: false, banner: message });
}

export function dismissBanner(state: AppState, tab: TabName): AppState {
  return withTab(state, tab, { banner: null });
}
