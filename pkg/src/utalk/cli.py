"""Operator entry points: serve, generate, bench, inspect.

Exit codes are a stable scripting contract: 0 success, 2 configuration
or file-format problem, 3 input validation failure, 4 upstream service
failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .bench import (ablation_report_json, ablation_report_text, fps_sweep,
                    presets, run_ablation, sweep_report_json, sweep_report_text)
from .config import AppConfig, load_config
from .core import ImageBuffer, decode_wav, encode_png
from .errors import (CONFIG_ERRORS, VALIDATION_ERRORS, ConfigError, UpstreamError,
                     UTalkError)
from .orchestrator import content, create_session, initialize
from .uvid import read_frame_file, read_header_file


def _load(args) -> AppConfig:
    return load_config(args.config)  # path may be None: defaults + env


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _load(args)
    if args.listen:
        config = replace(config, listen_addr=args.listen)
    host, _, port_text = config.listen_addr.rpartition(":")
    if not host or not port_text.isdigit():
        raise ConfigError("listen address %r is not host:port" % config.listen_addr)
    engine = initialize(config)
    print("engine initialized (init_count=%d); listening on %s"
          % (engine.init_count, config.listen_addr))
    uvicorn.run(create_app(config), host=host, port=int(port_text),
                log_level="warning")
    return 0


def _read_file(path: str, what: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError("cannot read %s %s: %s" % (what, path, exc)) from None


def _cmd_generate(args) -> int:
    if (args.text is None) == (args.audio is None):
        raise ConfigError("provide exactly one of --text or --audio")
    config = _load(args)
    if args.preset:
        table = presets()
        if args.preset not in table:
            raise ConfigError("unknown preset %r (choose from %s)"
                              % (args.preset, ", ".join(sorted(table))))
        config = replace(config, render=table[args.preset])
    fps = args.fps
    if fps is None and args.preset:
        fps = config.render.fps

    engine = initialize(config)
    session = create_session(engine, _read_file(args.image, "image"))
    audio = decode_wav(_read_file(args.audio, "audio")) if args.audio else None
    result = content(engine, session, text=args.text, audio=audio, fps=fps)

    with open(args.out, "wb") as fh:
        fh.write(result.video.data)
    header = result.video.header
    print("wrote %s: %d frames at %d fps, %dx%d, %.2f s audio"
          % (args.out, header.frame_count, header.fps, header.width,
             header.height,
             header.audio_sample_count / header.audio_sample_rate))
    return 0


def _write_reports(out_dir: str, stem: str, text: str, payload: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, stem + ".txt"), "w") as fh:
        fh.write(text + "\n")
    with open(os.path.join(out_dir, stem + ".json"), "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _cmd_bench(args) -> int:
    config = _load(args)
    engine = initialize(config)
    if args.bench_kind == "ablation":
        rows = run_ablation(engine, repetitions=args.runs)
        text = ablation_report_text(rows)
        _write_reports(args.out_dir, "bench_ablation", text,
                       ablation_report_json(rows))
    else:
        if args.from_fps > args.to_fps:
            raise ConfigError("--from %d exceeds --to %d"
                              % (args.from_fps, args.to_fps))
        rows = fps_sweep(engine, range(args.from_fps, args.to_fps + 1),
                         repetitions=args.runs)
        text = sweep_report_text(rows)
        _write_reports(args.out_dir, "bench_fps", text, sweep_report_json(rows))
    print(text)
    return 0


def _cmd_inspect(args) -> int:
    header = read_header_file(args.video)
    print("width: %d" % header.width)
    print("height: %d" % header.height)
    print("fps: %d" % header.fps)
    print("frame_count: %d" % header.frame_count)
    print("audio_sample_rate: %d" % header.audio_sample_rate)
    print("audio_sample_count: %d" % header.audio_sample_count)
    if args.dump_frames:
        os.makedirs(args.dump_frames, exist_ok=True)
        for i in range(header.frame_count):
            png = encode_png(ImageBuffer(read_frame_file(args.video, i)))
            with open(os.path.join(args.dump_frames, "frame_%06d.png" % i),
                      "wb") as fh:
                fh.write(png)
        print("dumped %d frames to %s" % (header.frame_count, args.dump_frames))
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="utalk",
                                     description="talking-avatar pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config")
    serve.add_argument("--listen", help="host:port (overrides config)")
    serve.set_defaults(func=_cmd_serve)

    generate = sub.add_parser("generate", help="render one video")
    generate.add_argument("--image", required=True, help="avatar PNG path")
    generate.add_argument("--text", help="text to speak")
    generate.add_argument("--audio", help="WAV path to render directly")
    generate.add_argument("--fps", type=int)
    generate.add_argument("--out", default="out.uvid")
    generate.add_argument("--preset", help="render preset (baseline..mod4)")
    generate.add_argument("--config")
    generate.set_defaults(func=_cmd_generate)

    bench = sub.add_parser("bench", help="run benchmarks")
    bench_sub = bench.add_subparsers(dest="bench_kind", required=True)
    ablation = bench_sub.add_parser("ablation", help="preset ladder timings")
    ablation.add_argument("--runs", type=int, default=5)
    ablation.add_argument("--out-dir", default=".")
    ablation.add_argument("--config")
    ablation.set_defaults(func=_cmd_bench)
    sweep = bench_sub.add_parser("fps", help="per-fps timings")
    sweep.add_argument("--from", dest="from_fps", type=int, default=16)
    sweep.add_argument("--to", dest="to_fps", type=int, default=25)
    sweep.add_argument("--runs", type=int, default=5)
    sweep.add_argument("--out-dir", default=".")
    sweep.add_argument("--config")
    sweep.set_defaults(func=_cmd_bench)

    inspect = sub.add_parser("inspect", help="print a video header")
    inspect.add_argument("--video", required=True)
    inspect.add_argument("--dump-frames", help="export every frame as PNG")
    inspect.set_defaults(func=_cmd_inspect)

    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except CONFIG_ERRORS as exc:
        print("error (%s): %s" % (exc.code, exc.message), file=sys.stderr)
        return 2
    except VALIDATION_ERRORS as exc:
        print("error (%s): %s" % (exc.code, exc.message), file=sys.stderr)
        return 3
    except UpstreamError as exc:
        print("error (%s): %s" % (exc.code, exc.message), file=sys.stderr)
        return 4
    except UTalkError as exc:
        print("error (%s): %s" % (exc.code, exc.message), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
