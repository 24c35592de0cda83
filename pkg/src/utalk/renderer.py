"""Procedural talking-head renderer.

Audio drives a per-frame mouth-openness envelope; each frame re-renders
the avatar's face crop at the configured resolution, re-locates the face
by template correlation, composites the crop back (optionally alpha-
blended through a blurred edge mask), and appends the frame to a UVID
container. Every pixel operation is integer or index arithmetic, so
output is bit-exact for a given (avatar, face_box, audio, config).
"""
from __future__ import annotations

import os
import shutil
import tempfile
import threading
from contextlib import contextmanager
from dataclasses import dataclass

import cv2
import numpy as np

from .core import AudioBuffer, FaceBox, FrameRate, ImageBuffer, encode_png, frame_count
from .errors import ConfigError, EmptyAudio, NoFace
from .profiler import ProfilerRegistry
from .progress import ProgressDisplay
from .uvid import StreamingWriter, VideoHeader, frame_at, write_buffered

RESIZE_FULL512 = "full512"
RESIZE_FAST256 = "fast256"
DETECT_HEAVY = "heavy"
DETECT_LIGHT = "light"
WRITER_BUFFERED = "buffered"
WRITER_STREAMING = "streaming"

_RESIZE_DIMS = {RESIZE_FULL512: 512, RESIZE_FAST256: 256}

#: Placements searched around the previous hit in tracking mode.
TRACK_RADIUS_PX = 8

#: Matches below this normalized correlation mean "no face here".
CORRELATION_FLOOR = 0.5

#: Mouth ellipse fill (deliberately dark against skin tones).
MOUTH_COLOR = (16, 8, 8)

#: The edge mask transition extends this far beyond the face box
#: (two passes of a radius-2 blur).
BLUR_MARGIN = 4

#: Binomial approximation of a 5x5 sigma=1.0 Gaussian; separable weights
#: summing to 16 per axis (256 for the full kernel).
_BLUR_TAPS = (1, 4, 6, 4, 1)

#: Environment override for where persisted intermediate frames go.
SCRATCH_DIR_ENV = "UTALK_SCRATCH_DIR"


@dataclass(frozen=True)
class RenderConfig:
    """Render toggles. Defaults are the fully optimized profile."""

    fps: int = 20
    progress_callbacks: bool = False
    resize_policy: str = RESIZE_FAST256
    detector: str = DETECT_LIGHT
    edge_blur: bool = False
    persist_intermediates: bool = False
    writer: str = WRITER_STREAMING

    def __post_init__(self):
        FrameRate(self.fps)
        if self.resize_policy not in _RESIZE_DIMS:
            raise ConfigError("unknown resize_policy %r" % self.resize_policy)
        if self.detector not in (DETECT_HEAVY, DETECT_LIGHT):
            raise ConfigError("unknown detector %r" % self.detector)
        if self.writer not in (WRITER_BUFFERED, WRITER_STREAMING):
            raise ConfigError("unknown writer %r" % self.writer)


@dataclass(frozen=True)
class EnvelopeSeries:
    """Mouth openness per output frame, each value in [0, 1]."""

    openness: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.openness, dtype=np.float64)
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "openness", arr)

    def __len__(self) -> int:
        return len(self.openness)


@dataclass(frozen=True)
class VideoFile:
    """A complete UVID byte stream plus typed accessors."""

    data: bytes

    @property
    def header(self) -> VideoHeader:
        from .uvid import parse_header
        return parse_header(self.data)

    def frame(self, index: int) -> np.ndarray:
        return frame_at(self.data, self.header, index)

    @property
    def audio(self) -> AudioBuffer:
        header = self.header
        start = len(self.data) - 2 * header.audio_sample_count
        samples = np.frombuffer(self.data[start:], dtype="<i2")
        return AudioBuffer(samples=samples, sample_rate_hz=header.audio_sample_rate)


# -- envelope -----------------------------------------------------------------

def compute_envelope(audio: AudioBuffer, fps: int) -> EnvelopeSeries:
    """Window the samples per frame, take RMS, normalize by the peak.

    Windows are floor(rate / fps) samples; the last may be short. A
    silent clip (peak 0) yields an all-zero envelope.
    """
    FrameRate(fps)
    if len(audio) == 0:
        raise EmptyAudio("cannot build an envelope from an empty buffer")
    frames = frame_count(audio.duration_s, fps)
    window = audio.sample_rate_hz // fps
    x = audio.samples.astype(np.float64)
    rms = np.zeros(frames, dtype=np.float64)
    for i in range(frames):
        seg = x[i * window:(i + 1) * window]
        if len(seg):
            rms[i] = np.sqrt(np.mean(seg * seg))
    peak = rms.max()
    return EnvelopeSeries(rms / peak if peak > 0.0 else rms)


# -- face location -------------------------------------------------------------

def _luma(rgb: np.ndarray) -> np.ndarray:
    """Integer Rec.601 luma, then float32 for the correlation kernel."""
    a = rgb.astype(np.int32)
    y = (77 * a[:, :, 0] + 150 * a[:, :, 1] + 29 * a[:, :, 2] + 128) >> 8
    return y.astype(np.float32)


def _select_peak(corr: np.ndarray):
    """Argmax with non-finite cells clamped to -1; exact ties resolve to
    the smallest (y, x) in scan order."""
    corr = np.where(np.isfinite(corr), corr, -1.0)
    flat = int(np.argmax(corr))
    y, x = divmod(flat, corr.shape[1])
    return y, x, float(corr[y, x])


def _match(frame_luma: np.ndarray, template_luma: np.ndarray):
    res = cv2.matchTemplate(np.ascontiguousarray(frame_luma),
                            template_luma, cv2.TM_CCOEFF_NORMED)
    return _select_peak(res)


def _locate(frame_luma: np.ndarray, template_luma: np.ndarray,
            mode: str, prev) -> FaceBox:
    th, tw = template_luma.shape
    fh, fw = frame_luma.shape
    if th > fh or tw > fw:
        raise ValueError("template %dx%d larger than frame %dx%d"
                         % (tw, th, fw, fh))
    if mode == DETECT_LIGHT and prev is not None:
        x0 = min(max(prev.x - TRACK_RADIUS_PX, 0), fw - tw)
        y0 = min(max(prev.y - TRACK_RADIUS_PX, 0), fh - th)
        x1 = max(min(prev.x + TRACK_RADIUS_PX, fw - tw), x0)
        y1 = max(min(prev.y + TRACK_RADIUS_PX, fh - th), y0)
        window = frame_luma[y0:y1 + th, x0:x1 + tw]
        py, px, best = _match(window, template_luma)
        y, x = y0 + py, x0 + px
    else:
        y, x, best = _match(frame_luma, template_luma)
    if best < CORRELATION_FLOOR:
        raise NoFace("best correlation %.3f below %.2f"
                     % (best, CORRELATION_FLOOR))
    return FaceBox(x, y, tw, th)


def detect_face(frame: ImageBuffer, template: ImageBuffer, mode: str,
                prev: FaceBox | None = None) -> FaceBox:
    """Locate the template in the frame by normalized cross-correlation
    on integer luma. Heavy mode searches every placement; light mode
    searches within TRACK_RADIUS_PX of the previous hit (falling back to
    the full search when there is none)."""
    if mode not in (DETECT_HEAVY, DETECT_LIGHT):
        raise ConfigError("unknown detector %r" % mode)
    return _locate(_luma(frame.array), _luma(template.array), mode, prev)


# -- face crop rendering ---------------------------------------------------------

def _nn_resize(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor gather with floor index mapping (bit-exact)."""
    h, w = arr.shape[:2]
    rows = (np.arange(out_h, dtype=np.int64) * h) // out_h
    cols = (np.arange(out_w, dtype=np.int64) * w) // out_w
    return arr[rows[:, None], cols[None, :]]


def _fill_mouth(img: np.ndarray, openness: float) -> None:
    """Rasterize the mouth ellipse (pixel-center inclusion test).

    Center (0.5 W, 0.72 H); axis diameters 0.30 W wide and
    (0.02 + 0.16 x openness) H tall.
    """
    h, w = img.shape[:2]
    cx, cy = 0.5 * w, 0.72 * h
    half_w = 0.30 * w / 2.0
    half_h = (0.02 * h + openness * 0.16 * h) / 2.0
    xs = (np.arange(w, dtype=np.float64) + 0.5 - cx) / half_w
    ys = (np.arange(h, dtype=np.float64) + 0.5 - cy) / half_h
    inside = xs[None, :] ** 2 + ys[:, None] ** 2 <= 1.0
    img[inside] = MOUTH_COLOR


def render_face_crop(avatar_face: ImageBuffer, openness: float,
                     policy: str) -> ImageBuffer:
    """Scale the face to the policy resolution and draw the mouth."""
    if not 0.0 <= openness <= 1.0:
        raise ValueError("openness %r outside [0, 1]" % openness)
    try:
        size = _RESIZE_DIMS[policy]
    except KeyError:
        raise ConfigError("unknown resize_policy %r" % policy) from None
    out = _nn_resize(avatar_face.array, size, size)
    _fill_mouth(out, float(openness))
    return ImageBuffer(out)


# -- compositing ------------------------------------------------------------------

def _blur_pass(mask: np.ndarray) -> np.ndarray:
    """One 5x5 Gaussian pass over an int32 mask: exact separable integer
    convolution (valid region only, shrinks 2 px per side), one rounding
    division by 256 at the end."""
    k = _BLUR_TAPS
    h, w = mask.shape
    tmp = (k[0] * mask[0:h - 4] + k[1] * mask[1:h - 3] + k[2] * mask[2:h - 2]
           + k[3] * mask[3:h - 1] + k[4] * mask[4:h])
    w2 = w - 4
    acc = (k[0] * tmp[:, 0:w2] + k[1] * tmp[:, 1:w2 + 1] + k[2] * tmp[:, 2:w2 + 2]
           + k[3] * tmp[:, 3:w2 + 3] + k[4] * tmp[:, 4:w2 + 4])
    return (acc + 128) >> 8


def _edge_mask(box: FaceBox, profiler: ProfilerRegistry) -> np.ndarray:
    """Blurred paste mask over the box grown by BLUR_MARGIN px: 256 deep
    inside the box, 0 outside the margin, smooth in between."""
    pad = 2 * BLUR_MARGIN
    mask = np.zeros((box.h + 2 * pad, box.w + 2 * pad), dtype=np.int32)
    mask[pad:pad + box.h, pad:pad + box.w] = 256
    with profiler.span("gaussian_blur"):
        mask = _blur_pass(mask)
    with profiler.span("gaussian_blur"):
        mask = _blur_pass(mask)
    return mask  # (box.h + 2*BLUR_MARGIN, box.w + 2*BLUR_MARGIN)


def _composite_into(canvas: np.ndarray, crop: np.ndarray, box: FaceBox,
                    edge_blur: bool, profiler: ProfilerRegistry) -> None:
    """Paste crop (any square resolution) over box in canvas, in place."""
    resized = _nn_resize(crop, box.h, box.w)
    if not edge_blur:
        canvas[box.y:box.y + box.h, box.x:box.x + box.w] = resized
        return
    mask = _edge_mask(box, profiler)
    padded = np.pad(resized, ((BLUR_MARGIN, BLUR_MARGIN),
                              (BLUR_MARGIN, BLUR_MARGIN), (0, 0)), mode="edge")
    fh, fw = canvas.shape[:2]
    gx0, gy0 = box.x - BLUR_MARGIN, box.y - BLUR_MARGIN
    x0, y0 = max(gx0, 0), max(gy0, 0)
    x1 = min(box.x + box.w + BLUR_MARGIN, fw)
    y1 = min(box.y + box.h + BLUR_MARGIN, fh)
    m = mask[y0 - gy0:y1 - gy0, x0 - gx0:x1 - gx0][:, :, None]
    c = padded[y0 - gy0:y1 - gy0, x0 - gx0:x1 - gx0].astype(np.int32)
    f = canvas[y0:y1, x0:x1].astype(np.int32)
    canvas[y0:y1, x0:x1] = ((m * c + (256 - m) * f + 128) >> 8).astype(np.uint8)


def composite_face(frame: ImageBuffer, crop: ImageBuffer, box: FaceBox,
                   edge_blur: bool, profiler: ProfilerRegistry | None = None) -> ImageBuffer:
    """Return a new frame with the crop pasted over the box; edge_blur
    feathers the paste edge through a twice-blurred binary mask."""
    box.check_inside(frame.width, frame.height)
    profiler = profiler if profiler is not None else ProfilerRegistry()
    canvas = frame.array.copy()
    _composite_into(canvas, crop.array, box, edge_blur, profiler)
    return ImageBuffer(canvas)


# -- video assembly ----------------------------------------------------------------

class _SinkArena:
    """Opt-in reusable backing store for streaming sinks.

    A full-size clip needs a buffer of hundreds of megabytes; allocating
    and faulting those pages on every render makes back-to-back timings
    noisy. Inside a reuse_sink_arena() region one buffer is recycled
    instead. One render at a time may hold it — concurrent renders fall
    back to private allocations — and leaving the region frees it.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._buf: bytearray | None = None
        self._held = False
        self._depth = 0

    def enable(self) -> None:
        with self._lock:
            self._depth += 1
            if self._buf is None:
                self._buf = bytearray()

    def disable(self) -> None:
        with self._lock:
            self._depth -= 1
            if self._depth <= 0:
                self._depth = 0
                self._buf = None
                self._held = False

    def acquire(self, size: int):
        with self._lock:
            if self._depth == 0 or self._held or self._buf is None:
                return None
            if len(self._buf) < size:
                self._buf = bytearray(size)
            self._held = True
            return memoryview(self._buf)[:size]

    def release(self) -> None:
        with self._lock:
            self._held = False


_ARENA = _SinkArena()


@contextmanager
def reuse_sink_arena():
    """Recycle one streaming-sink buffer across the renders inside this
    region; used by the benchmark harness to keep run-to-run allocation
    behavior identical."""
    _ARENA.enable()
    try:
        yield
    finally:
        _ARENA.disable()


class _PreallocSink:
    """Fixed-size in-memory sink: the streaming writer lands each frame
    directly in its final position, no growth copies, no final join."""

    def __init__(self, size: int):
        self._size = size
        view = _ARENA.acquire(size)
        self._from_arena = view is not None
        self._view = view if view is not None else memoryview(bytearray(size))
        self._pos = 0

    def write(self, data) -> None:
        view = memoryview(data)
        if view.ndim != 1 or view.format != "B":
            view = view.cast("B")
        n = view.nbytes
        self._view[self._pos:self._pos + n] = view
        self._pos += n

    def close(self) -> None:
        if self._from_arena:
            self._from_arena = False
            self._view = memoryview(b"")
            _ARENA.release()

    def take(self) -> bytes:
        if self._pos != self._size:
            raise ValueError("sink holds %d of %d expected bytes"
                             % (self._pos, self._size))
        data = bytes(self._view)
        self.close()
        return data


def _grown_region(box: FaceBox, margin: int, fw: int, fh: int):
    return (max(box.x - margin, 0), max(box.y - margin, 0),
            min(box.x + box.w + margin, fw), min(box.y + box.h + margin, fh))


def render_video(avatar: ImageBuffer, face_box: FaceBox, audio: AudioBuffer,
                 cfg: RenderConfig, profiler: ProfilerRegistry | None = None,
                 progress=None) -> VideoFile:
    """Render the full clip.

    Per frame: envelope value -> face crop render -> face re-location ->
    composite -> container append. The progress callback (or the default
    live display) fires once per frame iff cfg.progress_callbacks; with
    persist_intermediates every frame is also written as PNG to a scratch
    directory that is removed once the container is finalized.
    """
    profiler = profiler if profiler is not None else ProfilerRegistry()
    face_box.check_inside(avatar.width, avatar.height)
    if len(audio) == 0:
        raise EmptyAudio("cannot render from an empty audio buffer")

    with profiler.span("render_video"):
        with profiler.span("compute_envelope"):
            envelope = compute_envelope(audio, cfg.fps)
        frames = len(envelope)
        header = VideoHeader(width=avatar.width, height=avatar.height,
                             fps=cfg.fps, frame_count=frames,
                             audio_sample_rate=audio.sample_rate_hz,
                             audio_sample_count=len(audio))

        base = avatar.array
        face = ImageBuffer(base[face_box.y:face_box.y + face_box.h,
                                face_box.x:face_box.x + face_box.w])
        base_luma = _luma(base)
        face_luma = _luma(face.array)
        canvas = base.copy()

        sink = None
        if cfg.writer == WRITER_BUFFERED:
            pending = []
            writer = None
        else:
            sink = _PreallocSink(header.total_size)
            writer = StreamingWriter(sink, header)

        callback = progress
        if cfg.progress_callbacks and callback is None:
            callback = ProgressDisplay()

        scratch = None
        if cfg.persist_intermediates:
            scratch = tempfile.mkdtemp(prefix="utalk-frames-",
                                       dir=os.environ.get(SCRATCH_DIR_ENV) or None)
        try:
            prev: FaceBox | None = None
            dirty = None
            for i in range(frames):
                with profiler.span("render_face_crop"):
                    crop = render_face_crop(face, float(envelope.openness[i]),
                                            cfg.resize_policy)
                with profiler.span("detect_face"):
                    box = _locate(base_luma, face_luma, cfg.detector, prev)
                prev = box
                if dirty is not None:
                    x0, y0, x1, y1 = dirty
                    canvas[y0:y1, x0:x1] = base[y0:y1, x0:x1]
                with profiler.span("composite_face"):
                    _composite_into(canvas, crop.array, box, cfg.edge_blur,
                                    profiler)
                dirty = _grown_region(box, BLUR_MARGIN if cfg.edge_blur else 0,
                                      avatar.width, avatar.height)
                if scratch is not None:
                    with profiler.span("persist_frame"):
                        png = encode_png(ImageBuffer(canvas.copy()),
                                         compress_level=0)
                        with open(os.path.join(scratch, "frame_%06d.png" % i),
                                  "wb") as fh:
                            fh.write(png)
                with profiler.span("write_frame"):
                    if writer is None:
                        pending.append(canvas.tobytes())
                    else:
                        writer.add_frame(canvas)
                if cfg.progress_callbacks and callback is not None:
                    view = canvas[box.y:box.y + box.h, box.x:box.x + box.w]
                    callback(i, frames, view)
            with profiler.span("finalize_container"):
                if writer is None:
                    data = write_buffered(pending, audio, header)
                else:
                    writer.finish(audio)
                    data = sink.take()
        finally:
            if sink is not None:
                sink.close()
            if scratch is not None:
                shutil.rmtree(scratch, ignore_errors=True)
    return VideoFile(data=data)
