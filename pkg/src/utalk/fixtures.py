"""Deterministic built-in assets: a procedural portrait avatar and a
fixed-duration benchmark tone clip.

Everything here is integer arithmetic (no RNG, no float texture), so the
same bytes come out on every run and every machine.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .core import CANONICAL_RATE_HZ, AudioBuffer, ImageBuffer, encode_png
from .stages import audio_digest, register_fixture, _stub_tone_sequence

#: Benchmark clip length: exactly 7.00 s at the canonical rate.
CLIP_SAMPLES = 112_000

#: What the stub recognizer hears in the benchmark clip.
CLIP_TRANSCRIPT = "hello there how are you today"

_CLIP_PHRASE = "benchmark fixture tone sequence "


def _hash_noise(height: int, width: int, amplitude: int) -> np.ndarray:
    """Integer coordinate hash in [-amplitude, amplitude], bit-exact."""
    ys = np.arange(height, dtype=np.int64)[:, None] * 19349663
    xs = np.arange(width, dtype=np.int64)[None, :] * 73856093
    h = (ys ^ xs) * 83492791
    return ((h >> 13) % (2 * amplitude + 1)) - amplitude


def _ellipse(height: int, width: int, cx: float, cy: float,
             rx: float, ry: float) -> np.ndarray:
    xs = (np.arange(width, dtype=np.float64) + 0.5 - cx) / rx
    ys = (np.arange(height, dtype=np.float64) + 0.5 - cy) / ry
    return xs[None, :] ** 2 + ys[:, None] ** 2 <= 1.0


def _paint(img: np.ndarray, mask: np.ndarray, color) -> None:
    img[mask] = color


@lru_cache(maxsize=8)
def fixture_avatar(width: int = 768, height: int = 1024) -> ImageBuffer:
    """Procedural portrait: shaded background, head, eyes, torso, plus an
    integer noise grain so template correlation has a unique peak."""
    img = np.zeros((height, width, 3), dtype=np.int64)

    # background gradient
    t = np.linspace(0.0, 1.0, height)[:, None]
    img[:, :, 0] = (38 - 20 * t).astype(np.int64)
    img[:, :, 1] = (42 - 22 * t).astype(np.int64)
    img[:, :, 2] = (60 - 30 * t).astype(np.int64)

    cx, cy = width * 0.5, height * 0.42
    head_rx, head_ry = width * 0.30, height * 0.29

    # torso / shoulders
    _paint(img, _ellipse(height, width, cx, height * 1.05,
                         width * 0.46, height * 0.34), (70, 80, 105))

    # head with simple radial shading
    head = _ellipse(height, width, cx, cy, head_rx, head_ry)
    xs = (np.arange(width, dtype=np.float64) + 0.5 - cx) / head_rx
    ys = (np.arange(height, dtype=np.float64) + 0.5 - cy) / head_ry
    r2 = np.clip(xs[None, :] ** 2 + ys[:, None] ** 2, 0.0, 1.0)
    shade = (24 * r2).astype(np.int64)
    for ch, base in enumerate((198, 160, 132)):
        plane = img[:, :, ch]
        plane[head] = base - shade[head]

    # hair cap across the top of the head
    hair = head & (np.arange(height)[:, None] < cy - head_ry * 0.35)
    _paint(img, hair, (60, 42, 30))

    # eyes, pupils, brows
    eye_y = cy - head_ry * 0.12
    for ex in (cx - width * 0.12, cx + width * 0.12):
        _paint(img, _ellipse(height, width, ex, eye_y,
                             width * 0.050, height * 0.020), (235, 230, 225))
        _paint(img, _ellipse(height, width, ex, eye_y,
                             width * 0.016, height * 0.012), (28, 24, 24))
        _paint(img, _ellipse(height, width, ex, eye_y - height * 0.045,
                             width * 0.055, height * 0.008), (70, 50, 35))

    # nose hint
    _paint(img, _ellipse(height, width, cx, cy + head_ry * 0.22,
                         width * 0.018, height * 0.045), (176, 138, 112))

    img += _hash_noise(height, width, 5)[:, :, None]
    return ImageBuffer(np.clip(img, 0, 255).astype(np.uint8))


@lru_cache(maxsize=1)
def fixture_avatar_png() -> bytes:
    return encode_png(fixture_avatar())


@lru_cache(maxsize=1)
def fixture_clip() -> AudioBuffer:
    """Tone sequence padded with trailing silence to exactly 7.00 s."""
    text = (_CLIP_PHRASE * 4)[:116]  # 116 cells x 960 samples = 111,360
    tones = _stub_tone_sequence(text).samples
    samples = np.zeros(CLIP_SAMPLES, dtype=np.int16)
    samples[:len(tones)] = tones
    return AudioBuffer(samples=samples, sample_rate_hz=CANONICAL_RATE_HZ)


def register_builtin_fixtures() -> None:
    """Teach the stub recognizer the built-in clip."""
    register_fixture(audio_digest(fixture_clip()), CLIP_TRANSCRIPT)


register_builtin_fixtures()
