"""Application configuration: TOML file + environment overrides.

File layout (all keys optional; defaults are the fully local profile):

    default_fps = 20
    listen_addr = "127.0.0.1:8787"
    video_store_dir = "./utalk-videos"
    cors_origins = ["*"]

    [stages.asr]       # likewise [stages.llm] and [stages.tts]
    backend = "stub"   # "stub" | "http"
    endpoint = ""

    [render]
    progress_callbacks = false
    resize_policy = "fast256"      # "full512" | "fast256"
    detector = "light"             # "heavy" | "light"
    edge_blur = false
    persist_intermediates = false
    writer = "streaming"           # "buffered" | "streaming"

Environment variables override file values (UTALK_DEFAULT_FPS,
UTALK_ASR_BACKEND, UTALK_RENDER_DETECTOR, ...). Credentials are taken
only from the environment: UTALK_ASR_KEY / UTALK_LLM_KEY / UTALK_TTS_KEY.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .renderer import RenderConfig
from .stages import StageAdapter

_STAGE_NAMES = ("asr", "llm", "tts")

_MODEL_LABELS = {
    "asr": "whisper-tiny / 39M params",
    "llm": "gpt-3.5-class chat",
    "tts": "multilingual / 140 languages",
}

_RENDER_KEYS = ("progress_callbacks", "resize_policy", "detector",
                "edge_blur", "persist_intermediates", "writer")

_BOOL_RENDER_KEYS = ("progress_callbacks", "edge_blur", "persist_intermediates")


@dataclass(frozen=True)
class StageConfig:
    backend: str = "stub"
    endpoint: str = ""


@dataclass(frozen=True)
class AppConfig:
    default_fps: int = 20
    listen_addr: str = "127.0.0.1:8787"
    video_store_dir: str = "./utalk-videos"
    cors_origins: tuple = ("*",)
    stages: dict = field(default_factory=lambda: {n: StageConfig() for n in _STAGE_NAMES})
    render: RenderConfig = field(default_factory=RenderConfig)

    def render_config(self, fps: int | None = None) -> RenderConfig:
        """The configured render toggles, with an optional per-request fps."""
        target = self.default_fps if fps is None else fps
        if target == self.render.fps:
            return self.render
        return replace(self.render, fps=target)

    def adapter(self, stage: str) -> StageAdapter:
        if stage not in _STAGE_NAMES:
            raise ConfigError("unknown stage %r" % stage)
        cfg = self.stages[stage]
        return StageAdapter(backend=cfg.backend, endpoint_url=cfg.endpoint,
                            credential=os.environ.get("UTALK_%s_KEY" % stage.upper(), ""),
                            model_label=_MODEL_LABELS[stage])


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError("%s: %r is not a boolean" % (key, raw))


def _check_keys(table: dict, allowed, where: str) -> None:
    unknown = set(table) - set(allowed)
    if unknown:
        raise ConfigError("unknown %s key(s): %s" % (where, ", ".join(sorted(unknown))))


def load_config(path: str | None = None) -> AppConfig:
    """Parse the TOML file (when given), then apply environment overrides."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError("cannot read config %s: %s" % (path, exc)) from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("malformed config %s: %s" % (path, exc)) from None

    _check_keys(data, ("default_fps", "listen_addr", "video_store_dir",
                       "cors_origins", "stages", "render"), "config")

    stages = {}
    stage_tables = data.get("stages", {})
    _check_keys(stage_tables, _STAGE_NAMES, "stages")
    for name in _STAGE_NAMES:
        table = stage_tables.get(name, {})
        _check_keys(table, ("backend", "endpoint"), "stages.%s" % name)
        stages[name] = StageConfig(backend=table.get("backend", "stub"),
                                   endpoint=table.get("endpoint", ""))

    render_table = dict(data.get("render", {}))
    _check_keys(render_table, _RENDER_KEYS, "render")

    config = AppConfig(
        default_fps=data.get("default_fps", 20),
        listen_addr=data.get("listen_addr", "127.0.0.1:8787"),
        video_store_dir=data.get("video_store_dir", "./utalk-videos"),
        cors_origins=tuple(data.get("cors_origins", ("*",))),
        stages=stages,
        render=None,  # placeholder, replaced below after env merge
    )
    config = _apply_env(config, render_table)
    return config


def _apply_env(config: AppConfig, render_table: dict) -> AppConfig:
    env = os.environ
    updates: dict = {}

    for name in _STAGE_NAMES:
        backend = env.get("UTALK_%s_BACKEND" % name.upper())
        endpoint = env.get("UTALK_%s_ENDPOINT" % name.upper())
        if backend is not None or endpoint is not None:
            old = config.stages[name]
            stages = dict(config.stages)
            stages[name] = StageConfig(
                backend=backend if backend is not None else old.backend,
                endpoint=endpoint if endpoint is not None else old.endpoint)
            config = replace(config, stages=stages)

    if "UTALK_DEFAULT_FPS" in env:
        try:
            updates["default_fps"] = int(env["UTALK_DEFAULT_FPS"])
        except ValueError:
            raise ConfigError("UTALK_DEFAULT_FPS: %r is not an integer"
                              % env["UTALK_DEFAULT_FPS"]) from None
    if "UTALK_LISTEN_ADDR" in env:
        updates["listen_addr"] = env["UTALK_LISTEN_ADDR"]
    if "UTALK_VIDEO_STORE_DIR" in env:
        updates["video_store_dir"] = env["UTALK_VIDEO_STORE_DIR"]
    if "UTALK_CORS_ORIGINS" in env:
        updates["cors_origins"] = tuple(
            s.strip() for s in env["UTALK_CORS_ORIGINS"].split(",") if s.strip())

    for key in _RENDER_KEYS:
        env_key = "UTALK_RENDER_%s" % key.upper()
        if env_key in env:
            raw = env[env_key]
            render_table[key] = (_parse_bool(raw, env_key)
                                 if key in _BOOL_RENDER_KEYS else raw)

    config = replace(config, **updates) if updates else config

    fps = config.default_fps
    try:
        render = RenderConfig(fps=fps, **render_table)
    except TypeError as exc:
        raise ConfigError("bad render settings: %s" % exc) from None
    return replace(config, render=render)
