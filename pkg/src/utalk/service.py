"""HTTP surface: sessions, generation, video retrieval, metrics.

Request handling is fully concurrent across sessions; each session
accepts one in-flight generation at a time (a second request gets 409).
Generation work runs in the worker threadpool so the event loop stays
responsive. Every failure is a JSON envelope {"error": code,
"message": text} with a status from the code map below.
"""
from __future__ import annotations

import os
import tempfile
import threading
import uuid

import numpy as np
from fastapi import FastAPI, Request, Response, UploadFile, File
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse
from starlette.concurrency import run_in_threadpool

from . import orchestrator
from .config import AppConfig
from .core import AudioBuffer, FrameRate, ImageBuffer, decode_wav, encode_png, encode_wav
from .errors import UTalkError
from .profiler import report_json
from .renderer import VideoFile
from .uvid import VideoHeader, read_audio_file, read_frame_file, read_header_file

MAX_UPLOAD_BYTES = 10 * 1024 * 1024

_STATUS_BY_CODE = {
    "config_error": 400,
    "image_decode": 400,
    "audio_decode": 400,
    "format_error": 400,
    "too_few_samples": 400,
    "non_positive_baseline": 400,
    "box_out_of_bounds": 400,
    "silent_input": 422,
    "empty_text": 422,
    "empty_audio": 422,
    "no_face": 422,
    "unknown_fixture": 422,
    "busy": 409,
    "upstream_error": 502,
    "write_failure": 500,
    "error": 500,
}


def _envelope(code: str, message: str, status: int) -> JSONResponse:
    return JSONResponse({"error": code, "message": message}, status_code=status)


class VideoStore:
    """Disk-backed store of finished videos; writes are atomic."""

    def __init__(self, root: str):
        os.makedirs(root, exist_ok=True)
        self._root = root
        self._lock = threading.Lock()
        self._entries: dict[str, tuple[str, VideoHeader]] = {}

    def put(self, video: VideoFile) -> str:
        video_id = uuid.uuid4().hex
        final = os.path.join(self._root, video_id + ".uvid")
        fd, tmp = tempfile.mkstemp(dir=self._root, suffix=".part")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(video.data)
            os.replace(tmp, final)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        with self._lock:
            self._entries[video_id] = (final, video.header)
        return video_id

    def lookup(self, video_id: str):
        with self._lock:
            return self._entries.get(video_id)


def _header_json(header: VideoHeader) -> dict:
    return {
        "width": header.width,
        "height": header.height,
        "fps": header.fps,
        "frame_count": header.frame_count,
        "audio_sample_rate": header.audio_sample_rate,
        "audio_sample_count": header.audio_sample_count,
        "duration_s": (header.audio_sample_count / header.audio_sample_rate
                       if header.audio_sample_rate else 0.0),
    }


def create_app(config: AppConfig | None = None) -> FastAPI:
    config = config if config is not None else AppConfig()
    app = FastAPI(title="utalk")
    app.state.config = config
    app.state.store = VideoStore(config.video_store_dir)
    app.state.sessions = {}
    app.state.sessions_lock = threading.Lock()

    app.add_middleware(CORSMiddleware, allow_origins=list(config.cors_origins),
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(UTalkError)
    async def _utalk_error(_request, exc: UTalkError):
        return _envelope(exc.code, exc.message, _STATUS_BY_CODE.get(exc.code, 500))

    def _engine():
        return orchestrator.initialize(config)

    def _session_or_none(session_id: str):
        with app.state.sessions_lock:
            return app.state.sessions.get(session_id)

    async def _read_capped(upload: UploadFile):
        data = await upload.read()
        if len(data) > MAX_UPLOAD_BYTES:
            return None
        return data

    @app.post("/sessions")
    async def create_session(image: UploadFile = File(...)):
        data = await _read_capped(image)
        if data is None:
            return _envelope("payload_too_large",
                            "upload exceeds %d bytes" % MAX_UPLOAD_BYTES, 413)
        engine = await run_in_threadpool(_engine)
        session = await run_in_threadpool(orchestrator.create_session, engine, data)
        with app.state.sessions_lock:
            app.state.sessions[session.session_id] = session
        box = session.face_box
        return {"session_id": session.session_id,
                "face_box": {"x": box.x, "y": box.y, "w": box.w, "h": box.h}}

    async def _parse_generation_body(request: Request):
        """Returns (text, audio) from a JSON {"text"} or multipart WAV body."""
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("application/json"):
            try:
                body = await request.json()
            except ValueError:
                return _envelope("format_error", "body is not valid JSON", 400)
            text = body.get("text") if isinstance(body, dict) else None
            if not isinstance(text, str):
                return _envelope("format_error",
                                "JSON body must carry a string 'text' field", 400)
            return text, None
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("audio")
            if upload is None or isinstance(upload, str):
                return _envelope("format_error",
                                "multipart body must carry an 'audio' file", 400)
            data = await _read_capped(upload)
            if data is None:
                return _envelope("payload_too_large",
                                "upload exceeds %d bytes" % MAX_UPLOAD_BYTES, 413)
            audio = decode_wav(data)
            return None, audio
        return _envelope("format_error",
                        "send application/json or multipart/form-data", 400)

    async def _generate(session_id: str, request: Request, fps: int | None,
                        operation):
        session = _session_or_none(session_id)
        if session is None:
            return _envelope("unknown_session",
                            "no session %r" % session_id, 404)
        if fps is not None:
            FrameRate(fps)  # raises ConfigError -> 400 before any work
        parsed = await _parse_generation_body(request)
        if isinstance(parsed, JSONResponse):
            return parsed
        text, audio = parsed
        if not session.lock.acquire(blocking=False):
            return _envelope("busy",
                            "session %s already has a request in flight"
                            % session_id, 409)
        try:
            engine = await run_in_threadpool(_engine)
            result = await run_in_threadpool(
                lambda: operation(engine, session, text=text, audio=audio, fps=fps))
        finally:
            session.lock.release()
        video_id = app.state.store.put(result.video)
        return {
            "video_id": video_id,
            "transcript": result.transcript,
            "answer": result.answer,
            "timings_s": result.timings_s,
            "header": _header_json(result.video.header),
        }

    @app.post("/sessions/{session_id}/chat")
    async def post_chat(session_id: str, request: Request, fps: int | None = None):
        return await _generate(session_id, request, fps, orchestrator.chat)

    @app.post("/sessions/{session_id}/content")
    async def post_content(session_id: str, request: Request, fps: int | None = None):
        return await _generate(session_id, request, fps, orchestrator.content)

    def _lookup_or_response(video_id: str):
        entry = app.state.store.lookup(video_id)
        if entry is None:
            return _envelope("unknown_video", "no video %r" % video_id, 404)
        return entry

    @app.get("/videos/{video_id}")
    def get_video(video_id: str):
        entry = _lookup_or_response(video_id)
        if isinstance(entry, JSONResponse):
            return entry
        path, _header = entry
        return FileResponse(path, media_type="application/octet-stream",
                            filename=video_id + ".uvid")

    @app.get("/videos/{video_id}/manifest")
    def get_manifest(video_id: str):
        entry = _lookup_or_response(video_id)
        if isinstance(entry, JSONResponse):
            return entry
        _path, header = entry
        base = "/videos/%s" % video_id
        manifest = _header_json(header)
        manifest["video_id"] = video_id
        manifest["frames"] = ["%s/frames/%d" % (base, i)
                              for i in range(header.frame_count)]
        manifest["audio_url"] = base + "/audio"
        return manifest

    def _frame_png(path: str, index: int):
        try:
            frame = read_frame_file(path, index)
        except IndexError:
            return None
        return encode_png(ImageBuffer(frame))

    @app.get("/videos/{video_id}/preview")
    def get_preview(video_id: str):
        entry = _lookup_or_response(video_id)
        if isinstance(entry, JSONResponse):
            return entry
        path, _header = entry
        png = _frame_png(path, 0)
        if png is None:
            return _envelope("format_error", "video has no frames", 404)
        return Response(content=png, media_type="image/png")

    @app.get("/videos/{video_id}/frames/{index}")
    def get_frame(video_id: str, index: int):
        entry = _lookup_or_response(video_id)
        if isinstance(entry, JSONResponse):
            return entry
        path, _header = entry
        png = _frame_png(path, index)
        if png is None:
            return _envelope("unknown_frame",
                            "frame %d out of range" % index, 404)
        return Response(content=png, media_type="image/png")

    @app.get("/videos/{video_id}/audio")
    def get_audio(video_id: str):
        entry = _lookup_or_response(video_id)
        if isinstance(entry, JSONResponse):
            return entry
        path, header = entry
        samples = read_audio_file(path)
        wav = encode_wav(AudioBuffer(samples=np.asarray(samples),
                                     sample_rate_hz=header.audio_sample_rate))
        return Response(content=wav, media_type="audio/wav")

    @app.get("/metrics")
    def get_metrics():
        engine = orchestrator.current_engine()
        if engine is None:
            return {"total_s": 0.0, "entries": []}
        return report_json(engine.profiler)

    @app.get("/healthz")
    def get_healthz():
        engine = orchestrator.current_engine()
        return {"status": "ok",
                "initialized": engine is not None,
                "init_count": engine.init_count if engine is not None else 0}

    return app
