"""Command-line pipeline: extract, clone, edit, splice, resynth, eval, serve.

Outputs always go to paths given by flags; stdout carries exactly one line
of machine-readable summary JSON per invocation. Exit codes are a stable
contract: 0 success, 2 IO/parse, 3 phone sequence mismatch, 4 invalid
edit/indices, 5 resynthesis contract violation, 1 unexpected.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, fields
from datetime import datetime, timezone

from . import errors as err
from .alignment import load_alignment
from .analysis import MelSpec, PitchSpec, track_pitch
from .audio_io import FrameSpec, load_wav, save_wav
from .metrics import compare_pitch_curves, evaluate_pair
from .prosody import (
    EditScript,
    ProsodyTrack,
    SpliceRegion,
    apply_edits,
    average_per_phone,
    clone_prosody,
    splice,
)
from .resynth import resynthesize_track

log = logging.getLogger("prosodykit")

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_IO = 2
EXIT_SEQUENCE = 3
EXIT_EDIT = 4
EXIT_RESYNTH = 5

_IO_ERRORS = (
    OSError,
    json.JSONDecodeError,
    err.AlignmentParseError,
    err.OverlapError,
    err.CorruptHeaderError,
    err.UnsupportedEncodingError,
    err.CoverageError,
    err.BufferTooShortError,
    KeyError,
)
_EDIT_ERRORS = (
    err.InvalidValueError,
    err.IndexOutOfRangeError,
    err.AllUnvoicedError,
    err.AlreadyNormalizedError,
    err.NotNormalizedError,
    err.NonpositiveMeanError,
    err.EmptyInputError,
)
_RESYNTH_ERRORS = (
    err.NormalizedTrackError,
    err.PlanMismatchError,
    err.HopMismatchError,
    err.SampleRateMismatchError,
    err.InvalidSpecError,
)


@dataclass
class AnalysisConfig:
    """Analysis defaults; overridable via --config file then flags."""

    hop_ms: float = 10.0
    frame_length_ms: float = 25.0
    f0_floor: float = 60.0
    f0_ceil: float = 400.0
    voicing_threshold: float = 0.15
    n_mels: int = 80
    fmin: float = 0.0
    log_floor: float = 1e-10

    def pitch_spec(self) -> PitchSpec:
        return PitchSpec(f0_floor=self.f0_floor, f0_ceil=self.f0_ceil,
                         voicing_threshold=self.voicing_threshold,
                         hop_ms=self.hop_ms)

    def frame_spec(self) -> FrameSpec:
        return FrameSpec(frame_length_ms=self.frame_length_ms,
                         hop_ms=self.hop_ms)

    def mel_spec(self) -> MelSpec:
        return MelSpec(n_mels=self.n_mels, fmin=self.fmin,
                       log_floor=self.log_floor)


def _load_config_file(path) -> dict:
    """TOML-like key = value lines; '#' starts a comment."""
    values = {}
    field_types = {f.name: f.type for f in fields(AnalysisConfig)}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise err.AlignmentParseError(
                    f"expected 'key = value', got {line!r}", line=lineno)
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in field_types:
                raise err.InvalidValueError(f"unknown config key {key!r}")
            caster = int if key == "n_mels" else float
            values[key] = caster(value)
    return values


def _resolve_config(args) -> AnalysisConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(_load_config_file(args.config))
    for name in ("hop_ms", "frame_length_ms", "f0_floor", "f0_ceil",
                 "voicing_threshold", "n_mels"):
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    return AnalysisConfig(**values)


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def _read_prosody(path) -> tuple[ProsodyTrack, list]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return ProsodyTrack.from_json_dict(payload), list(payload.get("provenance", []))


def _write_prosody(path, track: ProsodyTrack, provenance: list) -> None:
    payload = track.to_json_dict()
    payload["provenance"] = provenance
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _summary(**kw) -> int:
    print(json.dumps(kw))
    return EXIT_OK


def cmd_extract(args) -> int:
    cfg = _resolve_config(args)
    audio = load_wav(args.audio)
    align = load_alignment(args.align)
    track = track_pitch(audio, cfg.pitch_spec())
    prosody = average_per_phone(track, align)
    provenance = [{
        "op": "extract",
        "params": {"audio": str(args.audio), "align": str(args.align)},
        "timestamp": _now_iso(),
    }]
    _write_prosody(args.out, prosody, provenance)
    return _summary(command="extract", out=str(args.out), phones=len(prosody))


def cmd_clone(args) -> int:
    cfg = _resolve_config(args)
    reference, _ = _read_prosody(args.ref_prosody)
    audio = load_wav(args.target_audio)
    align = load_alignment(args.target_align)
    target_base = average_per_phone(track_pitch(audio, cfg.pitch_spec()), align)
    cloned = clone_prosody(reference, target_base)
    provenance = [{
        "op": "clone",
        "params": {"ref_prosody": str(args.ref_prosody),
                   "target_audio": str(args.target_audio)},
        "timestamp": _now_iso(),
    }]
    _write_prosody(args.out, cloned, provenance)
    return _summary(command="clone", out=str(args.out), phones=len(cloned))


def cmd_edit(args) -> int:
    prosody, provenance = _read_prosody(args.prosody)
    with open(args.script, "r", encoding="utf-8") as fh:
        script = EditScript.from_json_dict(json.load(fh))
    edited = apply_edits(prosody, script)
    provenance.append({
        "op": "edit",
        "params": {"script": str(args.script), "n_ops": len(script.ops)},
        "timestamp": _now_iso(),
    })
    _write_prosody(args.out, edited, provenance)
    return _summary(command="edit", out=str(args.out), ops=len(script.ops))


def cmd_splice(args) -> int:
    context, provenance = _read_prosody(args.context)
    donor, _ = _read_prosody(args.donor)
    region = SpliceRegion(start_phone=args.start_phone,
                          end_phone=args.end_phone)
    spliced = splice(context, donor, region)
    provenance.append({
        "op": "splice",
        "params": {"donor": str(args.donor),
                   "start_phone": args.start_phone,
                   "end_phone": args.end_phone},
        "timestamp": _now_iso(),
    })
    _write_prosody(args.out, spliced, provenance)
    return _summary(command="splice", out=str(args.out),
                    region=[args.start_phone, args.end_phone])


def cmd_resynth(args) -> int:
    cfg = _resolve_config(args)
    audio = load_wav(args.base_audio)
    align = load_alignment(args.base_align)
    prosody, _ = _read_prosody(args.prosody)
    out_audio, _ = resynthesize_track(audio, align, prosody,
                                      pitch_spec=cfg.pitch_spec())
    save_wav(out_audio, args.out)
    return _summary(command="resynth", out=str(args.out),
                    duration_s=round(out_audio.duration_s, 6),
                    clipped=out_audio.clipped_count)


def cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    rows = []
    with open(args.manifest, "r", newline="", encoding="utf-8") as fh:
        for record in csv.reader(fh):
            if not record or record == ["ref_path", "test_path"]:
                continue
            if len(record) < 2:
                raise err.AlignmentParseError(
                    f"manifest row needs ref,test: {record!r}")
            rows.append((record[0].strip(), record[1].strip()))
    results = []
    failures = 0
    for ref_path, test_path in rows:
        entry = {"ref": ref_path, "test": test_path, "msd": "", "ffe": "",
                 "voicing_errors": "", "f0_errors": "", "frames": "",
                 "error": ""}
        try:
            ref = load_wav(ref_path)
            test = load_wav(test_path)
            report = evaluate_pair(ref, test, mel=cfg.mel_spec(),
                                   frames=cfg.frame_spec(),
                                   pitch=cfg.pitch_spec())
            entry.update(
                msd=f"{report.msd:.6f}",
                ffe=f"{report.ffe:.6f}",
                voicing_errors=report.n_voicing_errors,
                f0_errors=report.n_f0_deviation_errors,
                frames=min(report.n_frames_ref, report.n_frames_test),
            )
        except Exception as exc:  # row-level isolation by design
            log.warning("eval row failed: %s vs %s: %s",
                        ref_path, test_path, exc)
            entry["error"] = f"{type(exc).__name__}: {exc}"
            failures += 1
        results.append(entry)
    columns = ["ref", "test", "msd", "ffe", "voicing_errors", "f0_errors",
               "frames", "error"]
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(results)
    if rows and failures == len(rows):
        print(json.dumps({"command": "eval", "out": str(args.out),
                          "rows": len(rows), "failed": failures}))
        return EXIT_IO
    return _summary(command="eval", out=str(args.out), rows=len(rows),
                    failed=failures)


def cmd_curves(args) -> int:
    cfg = _resolve_config(args)
    signals = [(path, load_wav(path)) for path in args.audio]
    compare_pitch_curves(signals, pitch=cfg.pitch_spec(), out=args.out,
                         svg_out=args.svg)
    return _summary(command="curves", out=str(args.out),
                    signals=len(signals))


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=args.data_dir,
                     max_upload_bytes=args.max_upload * 1024 * 1024,
                     allow_origin=args.allow_origin,
                     ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def _add_analysis_flags(parser) -> None:
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--hop-ms", dest="hop_ms", type=float)
    parser.add_argument("--frame-length-ms", dest="frame_length_ms",
                        type=float)
    parser.add_argument("--f0-floor", dest="f0_floor", type=float)
    parser.add_argument("--f0-ceil", dest="f0_ceil", type=float)
    parser.add_argument("--voicing-threshold", dest="voicing_threshold",
                        type=float)
    parser.add_argument("--n-mels", dest="n_mels", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prosodykit",
        description="Phone-level prosody extraction, cloning, editing, "
                    "resynthesis and evaluation for recited speech.")
    parser.add_argument("--log-level", default="warn",
                        choices=["error", "warn", "info", "debug"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="audio + alignment -> prosody JSON")
    p.add_argument("--audio", required=True)
    p.add_argument("--align", required=True)
    p.add_argument("--out", required=True)
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("clone", help="overwrite target prosody with a reference's")
    p.add_argument("--ref-prosody", required=True)
    p.add_argument("--target-audio", required=True)
    p.add_argument("--target-align", required=True)
    p.add_argument("--out", required=True)
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_clone)

    p = sub.add_parser("edit", help="apply an edit script to prosody JSON")
    p.add_argument("--prosody", required=True)
    p.add_argument("--script", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("splice", help="transplant a phone region between tracks")
    p.add_argument("--context", required=True)
    p.add_argument("--donor", required=True)
    p.add_argument("--start-phone", type=int, required=True)
    p.add_argument("--end-phone", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_splice)

    p = sub.add_parser("resynth", help="realize a prosody track audibly")
    p.add_argument("--base-audio", required=True)
    p.add_argument("--base-align", required=True)
    p.add_argument("--prosody", required=True)
    p.add_argument("--out", required=True)
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_resynth)

    p = sub.add_parser("eval", help="batch MSD/FFE over a manifest CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("curves", help="export pitch curves as CSV/SVG")
    p.add_argument("audio", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--svg")
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("serve", help="run the session HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7878)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--allow-origin", default=None)
    p.add_argument("--max-upload", type=int, default=64,
                   help="payload limit in MiB")
    p.add_argument("--ui-dir", default=None,
                   help="serve a built editor bundle at / (e.g. frontend/dist)")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = {"error": logging.ERROR, "warn": logging.WARNING,
             "info": logging.INFO, "debug": logging.DEBUG}[args.log_level]
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except err.PhoneSequenceMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEQUENCE
    except _RESYNTH_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RESYNTH
    except _EDIT_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_EDIT
    except _IO_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # pragma: no cover - last resort
        print(f"unexpected error: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
