import json

import numpy as np
import pytest

from hapticpass import synth
from hapticpass.trace import parse_trace, truncate_trailing


def make_trace_doc(samples, task="signature-static", rate=60.0):
    return {"sample_rate_hz": rate, "task": task, "samples": samples}


def simple_samples(n=16, dx=1.0, dy=0.0, f=0.5, contact=None):
    return [
        {
            "t": i / 60.0,
            "x": 10.0 + dx * i,
            "y": 20.0 + dy * i,
            "f": f,
            "contact": True if contact is None else contact[i],
        }
        for i in range(n)
    ]


def parsed(samples, **kw):
    return truncate_trailing(parse_trace(make_trace_doc(samples, **kw)))


@pytest.fixture(scope="session")
def signature_cohort(tmp_path_factory):
    """Seeded default cohort: 10 users, 20 day-1 / 10 day-2 / 20 forgeries."""
    root = tmp_path_factory.mktemp("cohort_sig")
    synth.generate_cohort(root, n_users=10, preset="signature-like", seed=0)
    return root


@pytest.fixture(scope="session")
def mixed_cohort(tmp_path_factory):
    root = tmp_path_factory.mktemp("cohort_mixed")
    synth.generate_cohort(root, n_users=10, preset="mixed", seed=0)
    return root


@pytest.fixture(scope="session")
def small_cohort(tmp_path_factory):
    """4 users, enough for fast service/CLI round-trips."""
    root = tmp_path_factory.mktemp("cohort_small")
    synth.generate_cohort(
        root, n_users=4, preset="signature-like", seed=11,
        n_day1=12, n_day2=3, n_forgers=2, forgeries_per_forger=2,
    )
    return root


@pytest.fixture(scope="session")
def protocol_report(signature_cohort):
    from hapticpass.config import PipelineConfig
    from hapticpass.evaluation import run_protocol

    return run_protocol(signature_cohort, PipelineConfig())


@pytest.fixture(scope="session")
def enrolled_vectors():
    """Ten realistic enrollment feature matrices keyed by user id."""
    from hapticpass.features import extract_features
    from hapticpass.trace import compute_state

    out = {}
    for uid_idx in range(3):
        profile = synth.gen_user(100 + uid_idx, "signature-like")
        docs = synth.gen_genuine(profile, 10, session=1)
        rows = []
        for doc in docs:
            tr = truncate_trailing(parse_trace(json.dumps(doc)))
            rows.append(extract_features(compute_state(tr), "c12").values)
        out[f"user{uid_idx}"] = np.vstack(rows)
    return out
