"""Primitive types, codecs, and the frame-count rule."""
import io
import math
import wave

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utalk import (AudioBuffer, BoxOutOfBounds, ConfigError, FaceBox, FrameRate,
                   ImageBuffer, ImageDecode, AudioDecode, Transcript, decode_png,
                   decode_wav, encode_png, encode_wav, frame_count, word_count)
from utalk.core import CANONICAL_RATE_HZ, MIN_IMAGE_SIDE


# -- frame counting ----------------------------------------------------------

def test_frame_count_checkpoints():
    assert frame_count(7.0, 25) == 175
    assert frame_count(0.06 * 19, 25) == 28  # product lands at 28.4999...96
    assert frame_count(0.0, 25) == 0
    assert frame_count(1e-9, 16) == 1  # any positive duration yields a frame


def test_frame_count_rounds_half_up():
    assert frame_count(0.02, 25) == 1      # exactly 0.5 frames
    assert frame_count(0.0599, 25) == 1    # 1.4975
    assert frame_count(0.061, 25) == 2     # 1.525


def test_frame_count_rejects_negative_duration():
    with pytest.raises(ValueError):
        frame_count(-0.1, 25)


@given(duration=st.floats(min_value=0.0, max_value=3600.0),
       fps=st.integers(min_value=1, max_value=120))
def test_frame_count_matches_float64_half_up(duration, fps):
    expected = math.floor(duration * fps + 0.5)
    if duration > 0:
        expected = max(expected, 1)
    assert frame_count(duration, fps) == expected


# -- word counting -----------------------------------------------------------

@pytest.mark.parametrize("text,count", [
    ("hello there", 2),
    ("  spaced   out  ", 2),
    ("one", 1),
    ("", 0),
    ("   ", 0),
    ("tabs\tand\nnewlines too", 4),
    ("héllo wörld", 2),
])
def test_word_count(text, count):
    assert word_count(text) == count


# -- audio buffer ------------------------------------------------------------

def test_audio_buffer_duration():
    buf = AudioBuffer(np.zeros(16000, dtype=np.int16), 16000)
    assert buf.duration_s == 1.0
    assert len(buf) == 16000


def test_audio_buffer_rejects_bad_shapes():
    with pytest.raises(ValueError):
        AudioBuffer(np.zeros((10, 2), dtype=np.int16), 16000)
    with pytest.raises(ValueError):
        AudioBuffer(np.zeros(10, dtype=np.int16), 0)


def test_canonical_rate():
    assert CANONICAL_RATE_HZ == 16000


# -- image buffer ------------------------------------------------------------

def test_image_buffer_accessors():
    arr = np.zeros((32, 48, 3), dtype=np.uint8)
    img = ImageBuffer(arr)
    assert (img.width, img.height) == (48, 32)
    assert img.pixels == arr.tobytes()


def test_image_buffer_rejects_bad_input():
    with pytest.raises(ValueError):
        ImageBuffer(np.zeros((32, 48), dtype=np.uint8))
    with pytest.raises(ValueError):
        ImageBuffer(np.zeros((32, 48, 3), dtype=np.float32))
    with pytest.raises(ValueError):
        ImageBuffer(np.zeros((MIN_IMAGE_SIDE - 1, 48, 3), dtype=np.uint8))


# -- face box ----------------------------------------------------------------

def test_face_box_inside_check():
    FaceBox(0, 0, 10, 10).check_inside(10, 10)
    with pytest.raises(BoxOutOfBounds):
        FaceBox(1, 0, 10, 10).check_inside(10, 10)
    with pytest.raises(BoxOutOfBounds):
        FaceBox(-1, 0, 5, 5).check_inside(10, 10)
    with pytest.raises(ValueError):
        FaceBox(0, 0, 0, 5)


# -- frame rate --------------------------------------------------------------

def test_frame_rate_bounds():
    assert FrameRate(16).fps == 16
    assert FrameRate(60).fps == 60
    for bad in (15, 61, 0, -5):
        with pytest.raises(ConfigError):
            FrameRate(bad)


def test_frame_rate_requires_integer():
    with pytest.raises(ConfigError):
        FrameRate(25.0)
    with pytest.raises(ConfigError):
        FrameRate(True)
    with pytest.raises(ConfigError):
        FrameRate("25")


# -- transcript --------------------------------------------------------------

def test_transcript_consistency():
    Transcript("hello there", 2)
    with pytest.raises(ValueError):
        Transcript("hello there", 3)


# -- WAV codec ---------------------------------------------------------------

def test_wav_round_trip_exact():
    samples = (np.sin(np.linspace(0, 20, 500)) * 12000).astype(np.int16)
    buf = AudioBuffer(samples, 16000)
    out = decode_wav(encode_wav(buf))
    assert out.sample_rate_hz == 16000
    assert np.array_equal(out.samples, samples)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(min_value=-32768, max_value=32767),
                min_size=1, max_size=400))
def test_wav_round_trip_property(values):
    samples = np.array(values, dtype=np.int16)
    out = decode_wav(encode_wav(AudioBuffer(samples, 16000)))
    assert out.sample_rate_hz == 16000
    assert np.array_equal(out.samples, samples)


def test_wav_resamples_to_canonical_rate():
    samples = np.arange(100, dtype=np.int16)
    decoded = decode_wav(encode_wav(AudioBuffer(samples, 8000)))
    assert decoded.sample_rate_hz == 16000
    n_out = (100 * 16000) // 8000
    idx = (np.arange(n_out, dtype=np.int64) * 8000) // 16000
    assert np.array_equal(decoded.samples, samples[idx])


def test_wav_stereo_downmix():
    raw = io.BytesIO()
    with wave.open(raw, "wb") as wav:
        wav.setnchannels(2)
        wav.setsampwidth(2)
        wav.setframerate(16000)
        wav.writeframes(np.array([100, 200, 300, 400], dtype=np.int16).tobytes())
    decoded = decode_wav(raw.getvalue())
    assert np.array_equal(decoded.samples, np.array([150, 350], dtype=np.int16))


def test_wav_rejects_garbage_and_8bit():
    with pytest.raises(AudioDecode):
        decode_wav(b"not a wav file at all")
    raw = io.BytesIO()
    with wave.open(raw, "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(1)
        wav.setframerate(16000)
        wav.writeframes(b"\x00\x01\x02\x03")
    with pytest.raises(AudioDecode):
        decode_wav(raw.getvalue())


# -- PNG codec ---------------------------------------------------------------

def test_png_round_trip_exact():
    rng = np.random.default_rng(7)
    arr = rng.integers(0, 256, size=(40, 64, 3), dtype=np.uint8)
    out = decode_png(encode_png(ImageBuffer(arr)))
    assert np.array_equal(out.array, arr)


def test_png_rejects_non_png():
    from PIL import Image
    raw = io.BytesIO()
    Image.new("RGB", (64, 64), (10, 20, 30)).save(raw, "JPEG")
    with pytest.raises(ImageDecode):
        decode_png(raw.getvalue())
    with pytest.raises(ImageDecode):
        decode_png(b"gibberish")


def test_png_enforces_min_side():
    arr = np.zeros((16, 16, 3), dtype=np.uint8)
    data = encode_png(ImageBuffer(arr))
    decode_png(data)  # fine at the default minimum
    with pytest.raises(ImageDecode):
        decode_png(data, min_side=64)
