"""Container format: header layout, writers, readers, corruption handling."""
import io
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utalk import (AudioBuffer, FormatError, StreamingWriter, VideoHeader,
                   WriteFailure, parse_header, read_video, write_buffered)
from utalk.uvid import (HEADER_SIZE, frame_at, read_audio_file, read_frame_file,
                        read_header_file)


def make_header(width=8, height=6, fps=25, frames=3, audio_n=100):
    return VideoHeader(width=width, height=height, fps=fps, frame_count=frames,
                       audio_sample_rate=16000, audio_sample_count=audio_n)


def make_frames(header, seed=0):
    rng = np.random.default_rng(seed)
    return [rng.integers(0, 256, size=(header.height, header.width, 3),
                         dtype=np.uint8) for _ in range(header.frame_count)]


def make_audio(header, seed=1):
    rng = np.random.default_rng(seed)
    samples = rng.integers(-32768, 32768, size=header.audio_sample_count,
                           dtype=np.int16)
    return AudioBuffer(samples, header.audio_sample_rate)


# -- header ------------------------------------------------------------------

def test_header_is_32_bytes_little_endian():
    header = make_header()
    packed = header.pack()
    assert len(packed) == HEADER_SIZE == 32
    magic, version, width, height, fps, frames, rate, samples = struct.unpack(
        "<4sHIIHIIQ", packed)
    assert magic == b"UVID"
    assert version == 1
    assert (width, height, fps, frames, rate, samples) == (8, 6, 25, 3, 16000, 100)


def test_header_round_trip():
    header = make_header(width=1920, height=1080, fps=60, frames=12345,
                         audio_n=2**33)
    assert parse_header(header.pack()) == header


def test_header_sizes():
    header = make_header()
    assert header.frame_size == 8 * 6 * 3
    assert header.total_size == 32 + 3 * 144 + 100 * 2


def test_parse_rejects_corruption():
    header = make_header()
    with pytest.raises(FormatError):
        parse_header(header.pack()[:31])
    with pytest.raises(FormatError):
        parse_header(b"VOID" + header.pack()[4:])
    bad_version = b"UVID" + struct.pack("<H", 2) + header.pack()[6:]
    with pytest.raises(FormatError):
        parse_header(bad_version)


# -- writers -----------------------------------------------------------------

def test_buffered_layout():
    header = make_header(frames=2, audio_n=4)
    frames = make_frames(header)
    audio = make_audio(header)
    data = write_buffered(frames, audio, header)
    assert len(data) == header.total_size
    assert data[:32] == header.pack()
    assert data[32:32 + 144] == frames[0].tobytes()
    assert data[32 + 144:32 + 288] == frames[1].tobytes()
    assert data[32 + 288:] == audio.samples.astype("<i2").tobytes()


def test_streaming_matches_buffered():
    header = make_header(frames=5, audio_n=321)
    frames = make_frames(header, seed=3)
    audio = make_audio(header, seed=4)
    sink = io.BytesIO()
    writer = StreamingWriter(sink, header)
    for frame in frames:
        writer.add_frame(frame)
    writer.finish(audio)
    assert sink.getvalue() == write_buffered(frames, audio, header)


@settings(max_examples=20, deadline=None)
@given(frames_n=st.integers(min_value=1, max_value=6),
       width=st.integers(min_value=1, max_value=12),
       height=st.integers(min_value=1, max_value=12),
       audio_n=st.integers(min_value=0, max_value=500),
       seed=st.integers(min_value=0, max_value=2**31))
def test_writer_equivalence_property(frames_n, width, height, audio_n, seed):
    header = VideoHeader(width=width, height=height, fps=30,
                         frame_count=frames_n, audio_sample_rate=16000,
                         audio_sample_count=audio_n)
    frames = make_frames(header, seed=seed)
    audio = make_audio(header, seed=seed + 1)
    sink = io.BytesIO()
    writer = StreamingWriter(sink, header)
    for frame in frames:
        writer.add_frame(frame)
    writer.finish(audio)
    assert sink.getvalue() == write_buffered(frames, audio, header)


def test_writers_validate_counts_and_sizes():
    header = make_header(frames=2, audio_n=4)
    frames = make_frames(header)
    audio = make_audio(header)
    with pytest.raises(ValueError):
        write_buffered(frames[:1], audio, header)
    with pytest.raises(ValueError):
        write_buffered(frames, AudioBuffer(audio.samples[:2], 16000), header)
    with pytest.raises(ValueError):
        write_buffered(frames, AudioBuffer(audio.samples, 48000), header)
    bad = [np.zeros((3, 3, 3), dtype=np.uint8)] + frames[1:]
    with pytest.raises(ValueError):
        write_buffered(bad, audio, header)

    writer = StreamingWriter(io.BytesIO(), header)
    with pytest.raises(ValueError):
        writer.add_frame(np.zeros((3, 3, 3), dtype=np.uint8))
    writer.add_frame(frames[0])
    with pytest.raises(ValueError):
        writer.finish(audio)  # one frame still missing
    writer.add_frame(frames[1])
    with pytest.raises(ValueError):
        writer.add_frame(frames[1])  # one too many


def test_streaming_wraps_sink_errors():
    class Broken:
        def write(self, data):
            raise OSError("disk full")

    header = make_header(frames=1, audio_n=0)
    with pytest.raises(WriteFailure):
        StreamingWriter(Broken(), header)


def test_streaming_accepts_bytes_frames():
    header = make_header(frames=1, audio_n=0)
    frame = make_frames(header)[0]
    sink = io.BytesIO()
    writer = StreamingWriter(sink, header)
    writer.add_frame(frame.tobytes())
    writer.finish(AudioBuffer(np.zeros(0, dtype=np.int16), 16000))
    assert sink.getvalue() == write_buffered([frame], AudioBuffer(np.zeros(0, dtype=np.int16), 16000),
                                             header)


# -- readers -----------------------------------------------------------------

def test_read_video_and_frame_at():
    header = make_header(frames=3, audio_n=7)
    frames = make_frames(header, seed=9)
    audio = make_audio(header, seed=10)
    data = write_buffered(frames, audio, header)
    got_header, _, got_audio = read_video(data)
    assert got_header == header
    assert np.array_equal(got_audio, audio.samples)
    for i, frame in enumerate(frames):
        assert np.array_equal(frame_at(data, got_header, i), frame)
    with pytest.raises(IndexError):
        frame_at(data, got_header, 3)
    with pytest.raises(IndexError):
        frame_at(data, got_header, -1)


def test_read_video_rejects_truncation():
    header = make_header(frames=2, audio_n=4)
    data = write_buffered(make_frames(header), make_audio(header), header)
    with pytest.raises(FormatError):
        read_video(data[:-1])


def test_file_readers(tmp_path):
    header = make_header(frames=2, audio_n=5)
    frames = make_frames(header, seed=20)
    audio = make_audio(header, seed=21)
    path = tmp_path / "clip.uvid"
    path.write_bytes(write_buffered(frames, audio, header))
    assert read_header_file(path) == header
    assert np.array_equal(read_frame_file(path, 1), frames[1])
    assert np.array_equal(read_audio_file(path), audio.samples)
    with pytest.raises(IndexError):
        read_frame_file(path, 2)
