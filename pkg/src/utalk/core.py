"""Shared domain types and frame/time arithmetic.

Everything here is an immutable value type, safe to share across threads.
Canonical audio is 16 kHz mono s16; canonical pixels are RGB24 row-major.
"""
from __future__ import annotations

import io
import math
import wave
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import AudioDecode, BoxOutOfBounds, ConfigError, ImageDecode

CANONICAL_RATE_HZ = 16000
MIN_IMAGE_SIDE = 16


def frame_count(duration_s: float, fps: int) -> int:
    """Frames for a clip: round-half-up(duration * fps), at least 1 when
    the clip is non-empty. floor(x + 0.5) in float64 keeps the rule identical
    across platforms (and matches IEEE-754 JS arithmetic on the same inputs).
    """
    if duration_s < 0:
        raise ValueError("duration_s must be >= 0")
    if duration_s == 0:
        return 0
    return max(1, int(math.floor(duration_s * fps + 0.5)))


def word_count(text: str) -> int:
    """Number of maximal non-whitespace runs (Unicode whitespace split)."""
    return len(text.split())


@dataclass(frozen=True)
class AudioBuffer:
    """Mono PCM signed 16-bit samples."""

    samples: np.ndarray  # int16, shape (n,)
    sample_rate_hz: int = CANONICAL_RATE_HZ

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        arr = np.asarray(self.samples, dtype=np.int16)
        if arr.ndim != 1:
            raise ValueError("samples must be one channel")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class ImageBuffer:
    """RGB24 raster, row-major."""

    array: np.ndarray  # uint8, shape (h, w, 3)

    def __post_init__(self):
        arr = np.asarray(self.array)
        if arr.dtype != np.uint8:
            raise ValueError("expected uint8 pixels, got %s" % arr.dtype)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError("expected (h, w, 3) uint8 array")
        if arr.shape[0] < MIN_IMAGE_SIDE or arr.shape[1] < MIN_IMAGE_SIDE:
            raise ValueError("image smaller than %d px" % MIN_IMAGE_SIDE)
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "array", arr)

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def pixels(self) -> bytes:
        return self.array.tobytes()


@dataclass(frozen=True)
class FaceBox:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError("face box extents must be positive")

    def check_inside(self, width: int, height: int) -> None:
        if self.x < 0 or self.y < 0 or self.x + self.w > width or self.y + self.h > height:
            raise BoxOutOfBounds("box (%d,%d,%d,%d) exceeds %dx%d frame"
                                 % (self.x, self.y, self.w, self.h, width, height))


@dataclass(frozen=True)
class FrameRate:
    fps: int

    MIN = 16
    MAX = 60

    def __post_init__(self):
        if not isinstance(self.fps, int) or isinstance(self.fps, bool):
            raise ConfigError("fps must be an integer, got %r" % (self.fps,))
        if not (self.MIN <= self.fps <= self.MAX):
            raise ConfigError("fps %r outside %d..%d" % (self.fps, self.MIN, self.MAX))


@dataclass(frozen=True)
class Transcript:
    text: str
    word_count: int = field(default=-1)

    def __post_init__(self):
        if self.word_count == -1:
            object.__setattr__(self, "word_count", word_count(self.text))
        elif self.word_count != word_count(self.text):
            raise ValueError("word_count inconsistent with text")


# -- audio ingress/egress -----------------------------------------------------

def decode_wav(data: bytes) -> AudioBuffer:
    """RIFF PCM s16le in; canonical 16 kHz mono out.

    Other sample rates are nearest-neighbor resampled, stereo is downmixed by
    per-pair average (floor). Non-16-bit encodings are rejected.
    """
    try:
        with wave.open(io.BytesIO(data), "rb") as wf:
            n_channels = wf.getnchannels()
            samp_width = wf.getsampwidth()
            rate = wf.getframerate()
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except (wave.Error, EOFError) as exc:
        raise AudioDecode("not a PCM WAV file: %s" % exc) from None
    if samp_width != 2:
        raise AudioDecode("only 16-bit PCM supported, got %d-byte samples" % samp_width)
    if n_channels < 1:
        raise AudioDecode("no channels")
    samples = np.frombuffer(raw, dtype="<i2")
    if n_channels > 1:
        usable = (len(samples) // n_channels) * n_channels
        frames = samples[:usable].reshape(-1, n_channels).astype(np.int32)
        samples = (frames.sum(axis=1) // n_channels).astype(np.int16)
    if rate != CANONICAL_RATE_HZ and len(samples) > 0:
        n_out = (len(samples) * CANONICAL_RATE_HZ) // rate
        idx = (np.arange(n_out, dtype=np.int64) * rate) // CANONICAL_RATE_HZ
        samples = samples[idx]
    return AudioBuffer(samples=np.asarray(samples, dtype=np.int16))


def encode_wav(audio: AudioBuffer) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(audio.sample_rate_hz)
        wf.writeframes(audio.samples.astype("<i2").tobytes())
    return buf.getvalue()


# -- image ingress/egress -----------------------------------------------------

def decode_png(data: bytes, min_side: int = MIN_IMAGE_SIDE) -> ImageBuffer:
    """PNG in, RGB24 out; alpha composited over white."""
    try:
        img = Image.open(io.BytesIO(data))
        if img.format != "PNG":
            raise ImageDecode("expected PNG, got %s" % (img.format or "unknown"))
        img.load()
    except ImageDecode:
        raise
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecode("undecodable image: %s" % exc) from None
    if img.width < min_side or img.height < min_side:
        raise ImageDecode("image %dx%d below minimum %dx%d"
                          % (img.width, img.height, min_side, min_side))
    if img.mode in ("RGBA", "LA", "PA") or (img.mode == "P" and "transparency" in img.info):
        rgba = img.convert("RGBA")
        base = Image.new("RGBA", rgba.size, (255, 255, 255, 255))
        img = Image.alpha_composite(base, rgba).convert("RGB")
    else:
        img = img.convert("RGB")
    return ImageBuffer(array=np.asarray(img, dtype=np.uint8))


def encode_png(image: ImageBuffer, compress_level: int = 6) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(image.array, "RGB").save(buf, "PNG", compress_level=compress_level)
    return buf.getvalue()
