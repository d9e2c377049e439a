#!/usr/bin/env python3
"""Leave-one-out tuning sweep over the wavelet grid on a synthetic cohort.

Reproduces the tuning methodology (enrollment data only, accuracy at the
FMR target as the objective) and prints the winning cell per method.

Usage: python scripts/tune_wavelets.py [--seed 0] [--users 6] [--method both]
"""
import argparse
import json
import sys
import tempfile
from pathlib import Path

from hapticpass.config import load_config
from hapticpass.evaluation import TuningGrid, loo_tune
from hapticpass.synth import generate_cohort
from hapticpass.trace import compute_state, load_trace


def enrollments_from(cohort: Path, n_enroll: int):
    manifest = json.loads((cohort / "cohort.json").read_text())
    out = {}
    for entry in sorted(manifest["users"], key=lambda u: u["user_id"]):
        uid = entry["user_id"]
        files = sorted((cohort / uid / "day1" / "genuine").glob("*.json"))
        out[uid] = [compute_state(load_trace(p)) for p in files[:n_enroll]]
    return out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--users", type=int, default=6)
    parser.add_argument("--method", default="both",
                        choices=("euclidean", "hamming", "both"))
    parser.add_argument("--tf-step", type=float, default=0.05,
                        help="coarser T_f grid for quick sweeps (tuning "
                             "default in the pipeline is 0.01)")
    parser.add_argument("--config", type=Path, default=None)
    args = parser.parse_args()

    cfg = load_config(args.config)
    with tempfile.TemporaryDirectory() as td:
        cohort = Path(td) / "cohort"
        print(f"generating {args.users}-user tuning cohort (seed {args.seed})")
        generate_cohort(cohort, n_users=args.users, seed=args.seed,
                        n_day1=cfg.enroll_count, n_day2=1)
        enrollments = enrollments_from(cohort, cfg.enroll_count)
        methods = (("euclidean", "hamming") if args.method == "both"
                   else (args.method,))
        for method in methods:
            if method == "euclidean":
                grid = TuningGrid(method=method, fmr_target=cfg.fmr_target)
            else:
                n = int(round(5.0 / args.tf_step)) + 1
                tf_values = tuple(round(i * args.tf_step, 4) for i in range(n))
                grid = TuningGrid(method=method, tf_values=tf_values,
                                  fmr_target=cfg.fmr_target)
            result = loo_tune(enrollments, grid, cfg)
            print(f"{method}: wavelet={result.wavelet} param={result.param} "
                  f"accuracy@{cfg.fmr_target:.3%}FMR={result.accuracy:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
