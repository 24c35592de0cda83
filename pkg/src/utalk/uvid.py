"""UVID container: bit-exact uncompressed video interchange.

Layout (little-endian): magic "UVID" | version u16 = 1 | width u32 |
height u32 | fps u16 | frame_count u32 | audio_sample_rate u32 |
audio_sample_count u64 | frames (frame_count x width x height x 3, RGB24
row-major) | audio (audio_sample_count x s16le). No compression, no
back-patching: the header is complete before the first frame is written.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .core import AudioBuffer
from .errors import FormatError, WriteFailure

MAGIC = b"UVID"
VERSION = 1
_HEADER = struct.Struct("<4sHIIHIIQ")
HEADER_SIZE = _HEADER.size  # 32


@dataclass(frozen=True)
class VideoHeader:
    width: int
    height: int
    fps: int
    frame_count: int
    audio_sample_rate: int
    audio_sample_count: int

    @property
    def frame_size(self) -> int:
        return self.width * self.height * 3

    @property
    def total_size(self) -> int:
        return HEADER_SIZE + self.frame_count * self.frame_size + 2 * self.audio_sample_count

    def pack(self) -> bytes:
        return _HEADER.pack(MAGIC, VERSION, self.width, self.height, self.fps,
                            self.frame_count, self.audio_sample_rate,
                            self.audio_sample_count)


def parse_header(data: bytes) -> VideoHeader:
    if len(data) < HEADER_SIZE:
        raise FormatError("short header: %d bytes" % len(data))
    magic, version, width, height, fps, frames, rate, samples = \
        _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError("bad magic %r" % magic)
    if version != VERSION:
        raise FormatError("unsupported version %d" % version)
    return VideoHeader(width, height, fps, frames, rate, samples)


def write_buffered(frames: list, audio: AudioBuffer, header: VideoHeader) -> bytes:
    """All frames held in memory, one serialization at the end."""
    _check_frames(frames, header)
    _check_audio(audio, header)
    parts = [header.pack()]
    parts.extend(bytes(f) for f in frames)
    parts.append(audio.samples.astype("<i2").tobytes())
    return b"".join(parts)


class StreamingWriter:
    """Incremental writer: header up front, each frame as produced, audio
    last. Produces the identical byte stream as write_buffered."""

    def __init__(self, sink, header: VideoHeader):
        self._sink = sink
        self._header = header
        self._frames_written = 0
        self._finished = False
        self._write(header.pack())

    def _write(self, data) -> None:
        try:
            self._sink.write(data)
        except OSError as exc:
            raise WriteFailure("sink write failed: %s" % exc) from None

    def add_frame(self, frame) -> None:
        if self._finished:
            raise ValueError("writer already finished")
        if self._frames_written >= self._header.frame_count:
            raise ValueError("more frames than header frame_count")
        size = memoryview(frame).nbytes
        if size != self._header.frame_size:
            raise ValueError("frame is %d bytes, header needs %d"
                             % (size, self._header.frame_size))
        self._write(frame)
        self._frames_written += 1

    def finish(self, audio: AudioBuffer) -> None:
        if self._finished:
            raise ValueError("writer already finished")
        if self._frames_written != self._header.frame_count:
            raise ValueError("wrote %d frames, header promised %d"
                             % (self._frames_written, self._header.frame_count))
        _check_audio(audio, self._header)
        self._write(audio.samples.astype("<i2").tobytes())
        self._finished = True


def _check_frames(frames, header: VideoHeader) -> None:
    if len(frames) != header.frame_count:
        raise ValueError("got %d frames, header promised %d"
                         % (len(frames), header.frame_count))
    for f in frames:
        size = memoryview(f).nbytes
        if size != header.frame_size:
            raise ValueError("frame is %d bytes, header needs %d"
                             % (size, header.frame_size))


def _check_audio(audio: AudioBuffer, header: VideoHeader) -> None:
    if len(audio) != header.audio_sample_count:
        raise ValueError("audio has %d samples, header promised %d"
                         % (len(audio), header.audio_sample_count))
    if audio.sample_rate_hz != header.audio_sample_rate:
        raise ValueError("audio rate %d, header promised %d"
                         % (audio.sample_rate_hz, header.audio_sample_rate))


# -- reading -------------------------------------------------------------------

def read_video(data: bytes):
    """Whole-file parse: (header, frame bytes region, audio samples)."""
    header = parse_header(data)
    if len(data) != header.total_size:
        raise FormatError("file is %d bytes, header implies %d"
                          % (len(data), header.total_size))
    frames_end = HEADER_SIZE + header.frame_count * header.frame_size
    audio = np.frombuffer(data[frames_end:], dtype="<i2")
    return header, data[HEADER_SIZE:frames_end], audio


def frame_at(data: bytes, header: VideoHeader, index: int) -> np.ndarray:
    """Frame pixels as (h, w, 3) uint8, zero-copy when possible."""
    if not (0 <= index < header.frame_count):
        raise IndexError("frame %d outside 0..%d" % (index, header.frame_count - 1))
    start = HEADER_SIZE + index * header.frame_size
    raw = data[start:start + header.frame_size]
    if len(raw) != header.frame_size:
        raise FormatError("truncated frame payload")
    return np.frombuffer(raw, dtype=np.uint8).reshape(header.height, header.width, 3)


def read_header_file(path) -> VideoHeader:
    with open(path, "rb") as fh:
        return parse_header(fh.read(HEADER_SIZE))


def read_frame_file(path, index: int) -> np.ndarray:
    """One frame from disk by seeking, without loading the whole file."""
    with open(path, "rb") as fh:
        header = parse_header(fh.read(HEADER_SIZE))
        if not (0 <= index < header.frame_count):
            raise IndexError("frame %d outside 0..%d"
                             % (index, header.frame_count - 1))
        fh.seek(HEADER_SIZE + index * header.frame_size)
        raw = fh.read(header.frame_size)
    if len(raw) != header.frame_size:
        raise FormatError("truncated frame payload")
    return np.frombuffer(raw, dtype=np.uint8).reshape(header.height, header.width, 3)


def read_audio_file(path) -> np.ndarray:
    """The embedded audio track from disk, as int16 samples."""
    with open(path, "rb") as fh:
        header = parse_header(fh.read(HEADER_SIZE))
        fh.seek(HEADER_SIZE + header.frame_count * header.frame_size)
        raw = fh.read(2 * header.audio_sample_count)
    if len(raw) != 2 * header.audio_sample_count:
        raise FormatError("truncated audio payload")
    return np.frombuffer(raw, dtype="<i2")
