"""Command-line entry point.

Verbs: synth, enroll, verify, evaluate, tune, analyze (complexity|entropy),
serve, export, import, dump-modwt. Every verb accepts --config pointing at a
TOML file that overrides the pipeline defaults.

Exit codes: 0 success, 1 verify rejection, 2 validation error, 3 internal.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_VALIDATION = 2
EXIT_INTERNAL = 3


def _add_config(parser):
    parser.add_argument("--config", type=Path, default=None,
                        help="TOML file overriding pipeline defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hapticpass",
        description="Haptic password authentication toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--users", type=int, default=10)
    p.add_argument("--preset", default="signature-like",
                   choices=("signature-like", "pattern-like", "mixed"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--day1", type=int, default=20)
    p.add_argument("--day2", type=int, default=10)
    _add_config(p)

    p = sub.add_parser("enroll", help="stage enrollment traces for a user")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--user", required=True)
    p.add_argument("--task", default="signature-static")
    p.add_argument("traces", nargs="+", type=Path)
    _add_config(p)

    p = sub.add_parser("verify", help="verify one trace against a user")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--user", required=True)
    p.add_argument("--method", default="euclidean",
                   choices=("euclidean", "hamming"))
    p.add_argument("--adapt", action="store_true")
    p.add_argument("trace", type=Path)
    _add_config(p)

    p = sub.add_parser("evaluate", help="run the two-day protocol on a cohort")
    p.add_argument("--cohort", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None,
                   help="prefix for report files (.md/.json/DET CSVs)")
    p.add_argument("--method", default="both",
                   choices=("euclidean", "hamming", "both"))
    p.add_argument("--adaptivity", default="both",
                   choices=("on", "off", "both"))
    p.add_argument("--task", default=None,
                   help="restrict to one task label in mixed cohorts")
    p.add_argument("--fmr", type=float, default=None)
    _add_config(p)

    p = sub.add_parser("tune", help="leave-one-out parameter tuning")
    p.add_argument("--cohort", type=Path, required=True)
    p.add_argument("--method", required=True, choices=("euclidean", "hamming"))
    p.add_argument("--wavelets", nargs="*", default=None)
    p.add_argument("--out", type=Path, default=None)
    _add_config(p)

    p = sub.add_parser("analyze", help="complexity and entropy analysis")
    asub = p.add_subparsers(dest="analysis", required=True)
    pc = asub.add_parser("complexity")
    pc.add_argument("--cohort", type=Path, required=True)
    pc.add_argument("--format", default="markdown", choices=("markdown", "json"))
    _add_config(pc)
    pe = asub.add_parser("entropy")
    pe.add_argument("--cohort", type=Path, required=True)
    pe.add_argument("--wavelet", default=None)
    _add_config(pe)

    p = sub.add_parser("serve", help="run the local HTTP service")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    _add_config(p)

    p = sub.add_parser("export", help="export a user record as JSON")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--user", required=True)
    p.add_argument("--out", type=Path, default=None)
    _add_config(p)

    p = sub.add_parser("import", help="import a user record from JSON")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--overwrite", action="store_true")
    p.add_argument("record", type=Path)
    _add_config(p)

    p = sub.add_parser("dump-modwt", help="dump a channel's pyramid as CSV")
    p.add_argument("--wavelet", default="c12")
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--channel", default="f")
    p.add_argument("trace", type=Path)
    _add_config(p)

    return parser


def _load_cfg(args):
    from .config import load_config

    return load_config(getattr(args, "config", None))


def _cmd_synth(args) -> int:
    from .synth import generate_cohort

    manifest = generate_cohort(
        args.out, n_users=args.users, preset=args.preset, seed=args.seed,
        n_day1=args.day1, n_day2=args.day2,
    )
    print(f"wrote cohort of {manifest['n_users']} users to {args.out}")
    return EXIT_OK


def _cmd_enroll(args) -> int:
    from .service import AuthService
    from .store import UserStore

    service = AuthService(UserStore(args.store), _load_cfg(args))
    if not service.store.exists(args.user):
        service.create_user(args.user, args.task)
    status = service.status(args.user)
    for path in args.traces:
        status = service.enroll(args.user, path.read_bytes())
        print(f"{path}: staged {status['staged']}/{status['needed']} "
              f"({status['status']})")
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .service import AuthService
    from .store import UserStore

    service = AuthService(UserStore(args.store), _load_cfg(args))
    result = service.verify(
        args.user, args.trace.read_bytes(), args.method, args.adapt
    )
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK if result["accepted"] else EXIT_REJECTED


def _cmd_evaluate(args) -> int:
    from .evaluation import det_csv, report_json, report_markdown, run_protocol

    cfg = _load_cfg(args)
    if args.fmr is not None:
        cfg = cfg.replace(fmr_target=args.fmr)
    methods = ("euclidean", "hamming") if args.method == "both" else (args.method,)
    adaptivity = {"on": (True,), "off": (False,), "both": (False, True)}[args.adaptivity]
    report = run_protocol(args.cohort, cfg, methods, adaptivity, task=args.task)
    md = report_markdown(report)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        Path(str(args.out) + ".md").write_text(md)
        Path(str(args.out) + ".json").write_text(report_json(report))
        for label, curve in report["_det_curves"].items():
            Path(str(args.out) + f".det_{label}.csv").write_text(det_csv(curve))
        print(f"wrote {args.out}.md / .json / DET CSVs")
    else:
        print(md)
    return EXIT_OK


def _load_enrollments(cohort: Path, cfg):
    from .trace import compute_state, load_trace

    manifest = json.loads((cohort / "cohort.json").read_text())
    enrollments = {}
    for entry in sorted(manifest["users"], key=lambda u: u["user_id"]):
        uid = entry["user_id"]
        files = sorted((cohort / uid / "day1" / "genuine").glob("*.json"))
        traces = [load_trace(p) for p in files[: cfg.enroll_count]]
        enrollments[uid] = [compute_state(t) for t in traces]
    return enrollments


def _cmd_tune(args) -> int:
    from .evaluation import TuningGrid, loo_tune
    from .wavelet import WAVELETS

    cfg = _load_cfg(args)
    wavelets = tuple(args.wavelets) if args.wavelets else WAVELETS
    grid = TuningGrid(method=args.method, wavelets=wavelets,
                      fmr_target=cfg.fmr_target)
    result = loo_tune(_load_enrollments(args.cohort, cfg), grid, cfg)
    doc = {
        "method": result.method,
        "wavelet": result.wavelet,
        "param": result.param,
        "accuracy": result.accuracy,
        "cells": list(result.cells),
    }
    text = json.dumps(doc, sort_keys=True, indent=2)
    if args.out:
        args.out.write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text)
    return EXIT_OK


def _cmd_analyze(args) -> int:
    from .analysis import (cohort_complexity, complexity_report_json,
                           complexity_report_markdown, entropy_report_json,
                           password_entropy)
    from .features import extract_features
    from .trace import compute_state, load_trace

    cfg = _load_cfg(args)
    cohort = args.cohort
    manifest = json.loads((cohort / "cohort.json").read_text())
    if args.analysis == "complexity":
        training = {}
        for entry in sorted(manifest["users"], key=lambda u: u["user_id"]):
            uid = entry["user_id"]
            files = sorted((cohort / uid / "day1" / "genuine").glob("*.json"))
            training[uid] = [load_trace(p) for p in files[: cfg.enroll_count]]
        scores = cohort_complexity(training)
        if args.format == "json":
            print(complexity_report_json(scores))
        else:
            print(complexity_report_markdown(scores))
        return EXIT_OK
    wavelet = args.wavelet or cfg.wavelet_signature
    vectors = {}
    for entry in sorted(manifest["users"], key=lambda u: u["user_id"]):
        uid = entry["user_id"]
        files = sorted((cohort / uid / "day1" / "genuine").glob("*.json"))
        import numpy as np

        vectors[uid] = np.vstack(
            [
                extract_features(compute_state(load_trace(p)), wavelet, cfg.levels).values
                for p in files[: cfg.enroll_count]
            ]
        )
    print(entropy_report_json(password_entropy(vectors)))
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.store, _load_cfg(args))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def _cmd_export(args) -> int:
    from .store import UserStore

    doc = UserStore(args.store).export_user(args.user)
    text = json.dumps(doc, sort_keys=True)
    if args.out:
        args.out.write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text)
    return EXIT_OK


def _cmd_import(args) -> int:
    from .store import UserStore

    doc = json.loads(args.record.read_text())
    rec = UserStore(args.store).import_user(doc, overwrite=args.overwrite)
    print(f"imported user {rec.user_id} ({rec.status})")
    return EXIT_OK


def _cmd_dump_modwt(args) -> int:
    from .trace import compute_state, load_trace
    from .wavelet import modwt, pyramid_rows

    state = compute_state(load_trace(args.trace))
    pyramid = modwt(state.channel(args.channel), args.wavelet, args.levels)
    print("band,index,value")
    for band, index, value in pyramid_rows(pyramid):
        print(f"{band},{index},{value!r}")
    return EXIT_OK


_COMMANDS = {
    "synth": _cmd_synth,
    "enroll": _cmd_enroll,
    "verify": _cmd_verify,
    "evaluate": _cmd_evaluate,
    "tune": _cmd_tune,
    "analyze": _cmd_analyze,
    "serve": _cmd_serve,
    "export": _cmd_export,
    "import": _cmd_import,
    "dump-modwt": _cmd_dump_modwt,
}


def main(argv=None) -> int:
    from .store import StoreError
    from .trace import TraceError

    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (TraceError, StoreError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
