"""uTalk: a deterministic, benchmarkable talking-avatar pipeline.

Speech recognition, chat completion, and speech synthesis run behind
swappable stage adapters (offline stubs by default); a procedural
renderer turns synthesized speech into an uncompressed UVID video; a
benchmark harness measures every optimization toggle; an HTTP service
exposes the whole pipeline to clients.
"""

from .bench import (BenchRow, BenchStats, FpsStudyRow, fps_sweep,
                    load_fps_study, mean_sd, presets, reduction_percent,
                    run_ablation, select_fps)
from .config import AppConfig, load_config
from .core import (AudioBuffer, FaceBox, FrameRate, ImageBuffer, Transcript,
                   decode_png, decode_wav, encode_png, encode_wav, frame_count,
                   word_count)
from .errors import (AudioDecode, Busy, BoxOutOfBounds, ConfigError, EmptyAudio,
                     EmptyText, FormatError, ImageDecode, NoFace,
                     NonPositiveBaseline, SilentInput, TooFewSamples,
                     UnknownFixture, UpstreamError, UTalkError, WriteFailure)
from .orchestrator import (AvatarSession, Engine, PipelineResult, build_engine,
                           chat, content, create_session, initialize)
from .profiler import ProfilerRegistry, render_report, report_json
from .renderer import (EnvelopeSeries, RenderConfig, VideoFile, composite_face,
                       compute_envelope, detect_face, render_face_crop,
                       render_video)
from .stages import (ConversationContext, Exchange, PromptMessage, StageAdapter,
                     build_prompt, complete, push_exchange, synthesize,
                     transcribe, validate_transcript)
from .uvid import StreamingWriter, VideoHeader, parse_header, read_video, write_buffered

__version__ = "0.1.0"

__all__ = [
    "AppConfig", "AudioBuffer", "AudioDecode", "AvatarSession", "BenchRow",
    "BenchStats", "BoxOutOfBounds", "Busy", "ConfigError",
    "ConversationContext", "EmptyAudio", "EmptyText", "Engine",
    "EnvelopeSeries", "Exchange", "FaceBox", "FormatError", "FpsStudyRow",
    "FrameRate", "ImageBuffer", "ImageDecode", "NoFace",
    "NonPositiveBaseline", "PipelineResult", "ProfilerRegistry",
    "PromptMessage", "RenderConfig", "SilentInput", "StageAdapter",
    "StreamingWriter", "TooFewSamples", "Transcript", "UTalkError",
    "UnknownFixture", "UpstreamError", "VideoFile", "VideoHeader",
    "WriteFailure", "build_engine", "build_prompt", "chat", "complete",
    "composite_face", "compute_envelope", "content", "create_session",
    "decode_png", "decode_wav", "detect_face", "encode_png", "encode_wav",
    "fps_sweep", "frame_count", "initialize", "load_config", "load_fps_study",
    "mean_sd", "parse_header", "presets", "push_exchange", "read_video",
    "reduction_percent", "render_face_crop", "render_report", "render_video",
    "report_json", "run_ablation", "select_fps", "synthesize", "transcribe",
    "validate_transcript", "word_count", "write_buffered",
]
