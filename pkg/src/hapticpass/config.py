"""Pipeline configuration with tuned defaults and TOML overrides."""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class PipelineConfig:
    """All tunable parameters of the authentication pipeline.

    Defaults are the tuned operating points for signature-style input;
    any field can be overridden from a TOML config file.
    """

    # feature extraction
    levels: int = 5
    wavelet_signature: str = "c12"      # Euclidean matcher, signature tasks
    wavelet_pattern: str = "db4"        # Euclidean matcher, pattern tasks
    wavelet_hamming: str = "c12"        # Hamming matcher, all tasks

    # trace validation
    min_samples: int = 8
    enroll_count: int = 10

    # numeric guards
    eps_sigma: float = 1e-6             # std floor before any normalization
    weight_floor: float = 0.0           # post-optimization weight floor

    # Euclidean matcher
    summin_k: int = 3
    euclidean_drift_factor: float = 3.0  # x enrollment mean intra-template distance

    # Hamming matcher
    feature_threshold: float = 1.59     # per-feature deviation threshold T_f
    adapt_rate: float = 0.1             # mean-shift rate eta in [0, 1]
    hamming_drift_threshold: float = 2.0  # RMS sigma-normalized center drift

    # weight optimizer
    optimizer_tol: float = 1e-8
    optimizer_max_iter: int = 5000

    # evaluation
    fmr_target: float = 0.001
    per_user_averaging: bool = False    # pool scores across users by default

    # adaptive-update variants
    refresh_stats_on_update: bool = False  # keep mu/sigma/weights frozen after replace

    def wavelet_for_task(self, task: str) -> str:
        """Euclidean-matcher wavelet for a task label."""
        if task.startswith("pattern"):
            return self.wavelet_pattern
        return self.wavelet_signature

    def replace(self, **kwargs) -> "PipelineConfig":
        return dataclasses.replace(self, **kwargs)


def load_config(path: str | Path | None = None, **overrides) -> PipelineConfig:
    """Build a config from defaults, an optional TOML file, then overrides."""
    values: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        known = {f.name for f in dataclasses.fields(PipelineConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(data)
    values.update(overrides)
    return PipelineConfig(**values)
