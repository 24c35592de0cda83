"""Speech and language stage adapters.

Each stage (speech recognition, chat completion, speech synthesis) is an
adapter that runs either a deterministic local stub or an HTTP client
against a remote service. Stubs are pure functions of their inputs so the
whole pipeline is reproducible offline; the HTTP shims speak one small
JSON/WAV shape per stage and surface any transport problem as
UpstreamError.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import httpx
import numpy as np

from .core import CANONICAL_RATE_HZ, AudioBuffer, Transcript, decode_wav, encode_wav
from .errors import (ConfigError, EmptyAudio, EmptyText, SilentInput,
                     UnknownFixture, UpstreamError)

#: System preamble prepended to every prompt so replies stay short.
BREVITY_PREAMBLE = "Answer concisely in at most three sentences."

#: Stored exchanges available to prompt assembly; older ones are evicted.
CONTEXT_DEPTH = 2

#: Stub synthesis emits one 60 ms cell per Unicode scalar.
CELL_SECONDS = 0.06
CELL_SAMPLES = int(CELL_SECONDS * CANONICAL_RATE_HZ)  # 960

_HTTP_TIMEOUT_S = 30.0


@dataclass(frozen=True)
class StageAdapter:
    """One pipeline stage: which backend to call and how."""

    backend: str  # "stub" | "http"
    endpoint_url: str = ""
    credential: str = ""
    model_label: str = ""

    def __post_init__(self):
        if self.backend not in ("stub", "http"):
            raise ConfigError("unknown backend %r" % self.backend)
        if self.backend == "http" and not self.endpoint_url:
            raise ConfigError("http backend requires an endpoint_url")

    def _headers(self) -> dict:
        if self.credential:
            return {"Authorization": "Bearer %s" % self.credential}
        return {}


@dataclass(frozen=True)
class Exchange:
    question: str
    answer: str

    def __post_init__(self):
        if not self.question:
            raise ValueError("exchange question must be non-empty")
        if not self.answer:
            raise ValueError("exchange answer must be non-empty")


@dataclass(frozen=True)
class PromptMessage:
    role: str  # "system" | "user" | "assistant"
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError("unknown role %r" % self.role)
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class ConversationContext:
    """Sliding window over the most recent exchanges, capacity CONTEXT_DEPTH.

    Immutable: push_exchange returns a new context, so a failed pipeline
    run never leaves a half-committed exchange behind.
    """

    exchanges: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.exchanges) > CONTEXT_DEPTH:
            raise ValueError("context holds at most %d exchanges" % CONTEXT_DEPTH)

    def __len__(self) -> int:
        return len(self.exchanges)


def push_exchange(context: ConversationContext, question: str, answer: str) -> ConversationContext:
    new = context.exchanges + (Exchange(question, answer),)
    return ConversationContext(new[-CONTEXT_DEPTH:])


def build_prompt(context: ConversationContext, question: str) -> list:
    """System preamble, then stored exchanges in order, then the question.

    Message count is always 2 + 2 x len(context).
    """
    if not question:
        raise ValueError("question must be non-empty")
    messages = [PromptMessage("system", BREVITY_PREAMBLE)]
    for exchange in context.exchanges:
        messages.append(PromptMessage("user", exchange.question))
        messages.append(PromptMessage("assistant", exchange.answer))
    messages.append(PromptMessage("user", question))
    return messages


def validate_transcript(text: str) -> Transcript:
    """Admit a transcription only if it carries at least two words."""
    transcript = Transcript(text=text)
    if transcript.word_count < 2:
        raise SilentInput("transcription %r has %d word(s); need at least 2"
                          % (text, transcript.word_count))
    return transcript


# -- speech recognition ----------------------------------------------------------

_FIXTURES: dict = {}


def audio_digest(audio: AudioBuffer) -> str:
    return hashlib.sha256(audio.samples.astype("<i2").tobytes()).hexdigest()


def register_fixture(digest: str, text: str) -> None:
    """Teach the stub recognizer one clip: content digest -> transcription."""
    _FIXTURES[digest] = text


def transcribe(adapter: StageAdapter, audio: AudioBuffer) -> str:
    if len(audio) == 0:
        raise EmptyAudio("cannot transcribe an empty buffer")
    if adapter.backend == "stub":
        digest = audio_digest(audio)
        try:
            return _FIXTURES[digest]
        except KeyError:
            raise UnknownFixture("no transcription registered for digest %s…"
                                 % digest[:12]) from None
    wav = encode_wav(audio)
    payload = _post_bytes(adapter, "/transcribe", wav,
                          content_type="audio/wav")
    body = _expect_json(payload, "text")
    return body["text"]


# -- chat completion --------------------------------------------------------------

def complete(adapter: StageAdapter, messages: list) -> str:
    if not messages:
        raise ValueError("message list must be non-empty")
    if messages[-1].role != "user":
        raise ValueError("last message must come from the user")
    if adapter.backend == "stub":
        words = messages[-1].content.split()
        return "Answer: " + " ".join(reversed(words))
    body = _post_json(adapter, "/complete", {
        "messages": [{"role": m.role, "content": m.content} for m in messages],
    })
    payload = _expect_json(body, "text")
    return payload["text"]


# -- speech synthesis --------------------------------------------------------------

def synthesize(adapter: StageAdapter, text: str) -> AudioBuffer:
    if not text:
        raise EmptyText("cannot synthesize empty text")
    if adapter.backend == "stub":
        return _stub_tone_sequence(text)
    wav = _post_json_raw(adapter, "/synthesize", {"text": text})
    return decode_wav(wav)


def _stub_tone_sequence(text: str) -> AudioBuffer:
    """One 60 ms cell per scalar: silence for whitespace, else a sine whose
    frequency encodes the codepoint (200 Hz + 10 Hz steps over a 64-slot
    wheel), amplitude 0.4 full-scale, phase restarting at 0 each cell."""
    cells = np.zeros((len(text), CELL_SAMPLES), dtype=np.int16)
    t = np.arange(CELL_SAMPLES, dtype=np.float64) / CANONICAL_RATE_HZ
    for i, ch in enumerate(text):
        if ch.isspace():
            continue
        freq = 200.0 + (ord(ch) % 64) * 10.0
        wave = 0.4 * 32767.0 * np.sin(2.0 * math.pi * freq * t)
        cells[i] = np.round(wave).astype(np.int16)
    return AudioBuffer(samples=cells.reshape(-1), sample_rate_hz=CANONICAL_RATE_HZ)


# -- HTTP plumbing -----------------------------------------------------------------

def _post_bytes(adapter: StageAdapter, path: str, body: bytes, content_type: str):
    return _request(adapter, path, content=body,
                    headers={"Content-Type": content_type, **adapter._headers()})


def _post_json(adapter: StageAdapter, path: str, payload: dict):
    return _request(adapter, path, json=payload, headers=adapter._headers())


def _post_json_raw(adapter: StageAdapter, path: str, payload: dict) -> bytes:
    response = _request(adapter, path, json=payload, headers=adapter._headers(),
                        raw=True)
    return response


def _request(adapter: StageAdapter, path: str, raw: bool = False, **kwargs):
    url = adapter.endpoint_url.rstrip("/") + path
    try:
        response = httpx.post(url, timeout=_HTTP_TIMEOUT_S, **kwargs)
    except httpx.HTTPError as exc:
        raise UpstreamError("request to %s failed: %s" % (url, exc)) from None
    if response.status_code < 200 or response.status_code >= 300:
        raise UpstreamError("service at %s answered HTTP %d"
                            % (url, response.status_code))
    return response.content if raw else response


def _expect_json(response, key: str) -> dict:
    try:
        body = response.json()
    except ValueError:
        raise UpstreamError("service returned non-JSON payload") from None
    if not isinstance(body, dict) or key not in body:
        raise UpstreamError("service reply missing %r field" % key)
    return body
