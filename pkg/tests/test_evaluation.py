import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hapticpass.config import PipelineConfig
from hapticpass.evaluation import (DetCurve, ScoreSet, TuningGrid,
                                   accuracy_at_fmr, calibrate_count_threshold,
                                   calibrate_threshold, det_curve, eer,
                                   loo_tune, report_json, report_markdown,
                                   run_protocol)


def brute_force_rates(genuine, imposter, threshold):
    fmr = sum(1 for s in imposter if s < threshold) / len(imposter)
    fnmr = sum(1 for s in genuine if s >= threshold) / len(genuine)
    return fmr, fnmr


class TestDetCurve:
    def test_perfect_separation_has_zero_zero_point(self):
        c = det_curve(ScoreSet(genuine=np.zeros(5), imposter=np.ones(5)))
        assert any(f == 0.0 and n == 0.0 for f, n in zip(c.fmr, c.fnmr))

    def test_identical_lists_eer_half(self):
        scores = np.arange(10.0)
        c = det_curve(ScoreSet(genuine=scores, imposter=scores.copy()))
        assert eer(c) == pytest.approx(0.5)

    def test_matches_brute_force_counting(self):
        rng = np.random.default_rng(0)
        gen = rng.normal(0, 1, 40)
        imp = rng.normal(2, 1, 60)
        c = det_curve(ScoreSet(genuine=gen, imposter=imp))
        for t, f, n in zip(c.thresholds, c.fmr, c.fnmr):
            bf, bn = brute_force_rates(gen, imp, t)
            assert f == pytest.approx(bf, abs=1e-12)
            assert n == pytest.approx(bn, abs=1e-12)

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(1)
        c = det_curve(
            ScoreSet(genuine=rng.normal(0, 1, 30), imposter=rng.normal(1, 1, 30))
        )
        assert np.all(np.diff(c.fmr) >= 0)
        assert np.all(np.diff(c.fnmr) <= 0)

    def test_empty_scores_rejected(self):
        with pytest.raises(ValueError):
            ScoreSet(genuine=np.array([]), imposter=np.ones(3))


class TestEer:
    def test_perfect_separation(self):
        c = det_curve(ScoreSet(genuine=np.zeros(9), imposter=np.ones(9)))
        assert eer(c) == 0.0

    def test_gaussian_matches_empirical_crossing(self):
        rng = np.random.default_rng(2)
        gen = rng.normal(0, 1, 100_000)
        imp = rng.normal(2, 1, 100_000)
        value = eer(det_curve(ScoreSet(genuine=gen, imposter=imp)))
        # brute-force sweep on the same sample
        best = 1.0
        for t in np.linspace(-1, 3, 2001):
            f, n = brute_force_rates(gen, imp, t)
            best = min(best, max(f, n)) if abs(f - n) < 0.005 else best
        assert value == pytest.approx(best, abs=0.01)
        # analytic crossing for these Gaussians is Phi(-1) = 0.1587
        assert value == pytest.approx(0.1587, abs=0.01)


class TestAccuracyAtFmr:
    def test_perfect(self):
        c = det_curve(ScoreSet(genuine=np.zeros(9), imposter=np.ones(9)))
        assert accuracy_at_fmr(c, 0.001) == 1.0

    def test_adversarial_zero(self):
        c = det_curve(ScoreSet(genuine=np.ones(20), imposter=np.zeros(2000)))
        assert accuracy_at_fmr(c, 0.001) == 0.0

    def test_matches_oracle(self):
        rng = np.random.default_rng(3)
        gen = rng.normal(0, 1, 50)
        imp = rng.normal(3, 1, 500)
        c = det_curve(ScoreSet(genuine=gen, imposter=imp))
        target = 0.01
        best = 0.0
        for t in np.unique(np.concatenate([gen, imp, [np.inf]])):
            f, n = brute_force_rates(gen, imp, t)
            if f <= target:
                best = max(best, 1.0 - n)
        assert accuracy_at_fmr(c, target) == pytest.approx(best, abs=1e-12)


class TestCalibration:
    def test_threshold_keeps_fmr_within_target(self):
        rng = np.random.default_rng(4)
        imp = rng.uniform(1, 5, size=500)
        t = calibrate_threshold(np.array([0.1]), imp, fmr_target=0.01)
        assert np.mean(imp < t) <= 0.01

    def test_no_imposters_fallback(self):
        t = calibrate_threshold(np.array([0.2, 0.4]), None)
        assert t > 0.4

    def test_count_threshold_integer(self):
        t = calibrate_count_threshold(np.array([3, 5]), np.array([40, 50, 60]),
                                      fmr_target=0.001)
        assert isinstance(t, int)
        assert t == 40  # strict d < T keeps all three imposters rejected


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1),
       st.integers(2, 60), st.integers(2, 60))
def test_det_curve_properties(seed, n_gen, n_imp):
    rng = np.random.default_rng(seed)
    gen = rng.normal(0, 1, n_gen)
    imp = rng.normal(rng.uniform(0, 3), 1, n_imp)
    c = det_curve(ScoreSet(genuine=gen, imposter=imp))
    assert np.all((c.fmr >= 0) & (c.fmr <= 1))
    assert np.all((c.fnmr >= 0) & (c.fnmr <= 1))
    assert np.all(np.diff(c.fmr) >= 0)
    assert np.all(np.diff(c.fnmr) <= 0)
    e = eer(c)
    assert 0.0 <= e <= 1.0


class TestLooTune:
    def test_single_cell_returned(self):
        from hapticpass.trace import StateMatrix

        rng = np.random.default_rng(5)
        enrollments = {
            f"u{i}": [
                StateMatrix(channels=rng.normal(size=(8, 32)) + 3 * i)
                for _ in range(4)
            ]
            for i in range(2)
        }
        grid = TuningGrid(method="euclidean", wavelets=("haar",), ks=(3,))
        res = loo_tune(enrollments, grid)
        assert res.wavelet == "haar"
        assert res.param == 3
        assert len(res.cells) == 1

    def test_separating_wavelet_wins(self):
        from hapticpass.trace import StateMatrix

        # two users whose channels differ in fine-scale texture that any
        # real wavelet separates; a degenerate grid cell must not win
        rng = np.random.default_rng(6)
        enrollments = {}
        for i in range(3):
            states = []
            for _ in range(5):
                base = rng.normal(size=(8, 64)) * 0.05
                base += np.sin(np.arange(64) * (0.3 + 0.8 * i))[None, :] * (1 + i)
                states.append(StateMatrix(channels=base))
            enrollments[f"u{i}"] = states
        grid = TuningGrid(method="euclidean", wavelets=("haar", "db8"), ks=(2, 3))
        res = loo_tune(enrollments, grid)
        assert res.accuracy == max(c["accuracy"] for c in res.cells)

    def test_degenerate_grid_rejected(self):
        with pytest.raises(ValueError):
            TuningGrid(method="euclidean", wavelets=())

    def test_hamming_grid_runs(self):
        from hapticpass.trace import StateMatrix

        rng = np.random.default_rng(7)
        enrollments = {
            f"u{i}": [
                StateMatrix(channels=rng.normal(size=(8, 48)) + 2.0 * i)
                for _ in range(4)
            ]
            for i in range(2)
        }
        grid = TuningGrid(
            method="hamming", wavelets=("haar",), tf_values=(0.5, 1.59, 3.0)
        )
        res = loo_tune(enrollments, grid)
        assert res.param in (0.5, 1.59, 3.0)
        assert len(res.cells) == 3


class TestProtocol:
    def test_report_rows_complete(self, protocol_report):
        rows = protocol_report["rows"]
        keys = {(r["method"], r["day"], r["adaptive"]) for r in rows}
        assert keys == {
            (m, d, a)
            for m in ("euclidean", "hamming")
            for d in (1, 2)
            for a in (False, True)
        }

    def test_same_day_eer_reasonable(self, protocol_report):
        for r in protocol_report["rows"]:
            if r["day"] == 1:
                assert r["eer"] <= 0.10

    def test_adaptive_beats_static_on_drifted_day(self, protocol_report):
        rows = {(r["method"], r["day"], r["adaptive"]): r for r in protocol_report["rows"]}
        for method in ("euclidean", "hamming"):
            static = rows[(method, 2, False)]["eer"]
            adaptive = rows[(method, 2, True)]["eer"]
            assert adaptive < static, method

    def test_reference_fixture_present(self, protocol_report):
        ref = protocol_report["reference"]
        assert "not reproducible" in ref["note"]
        row = ref["euclidean"][0]
        assert row == {
            "task": "signature-static", "day": 1, "eer_pct": 2.07,
            "acc_pct": 84.83, "eer_adaptive_pct": 1.38, "acc_adaptive_pct": 94.14,
        }

    def test_markdown_and_json_render(self, protocol_report):
        md = report_markdown(protocol_report)
        assert "1.38%" in md and "94.14%" in md
        assert "not reproducible" in md
        doc = json.loads(report_json(protocol_report))
        assert "rows" in doc and "_det_curves" not in doc

    def test_per_user_averaging_flag(self, signature_cohort):
        cfg = PipelineConfig(per_user_averaging=True)
        report = run_protocol(
            signature_cohort, cfg, methods=("hamming",), adaptivity=(False,)
        )
        for r in report["rows"]:
            assert r["scoring"] == "per-user-mean"
            assert 0.0 <= r["eer"] <= 1.0

    def test_static_run_does_not_mutate_templates(self, signature_cohort):
        from hapticpass import evaluation

        cfg = PipelineConfig()
        users = evaluation.load_cohort(signature_cohort, ("c12",), cfg)
        templates = evaluation._enroll_all(users, "euclidean", "c12", cfg)
        hashes_before = {u: t.to_json() for u, t in templates.items()}
        for u in users:
            evaluation._score_sequence(
                templates[u.user_id], u.day1_feats["c12"], "c12", "euclidean", False
            )
            evaluation._score_batch(
                templates[u.user_id], u.forgery_feats["c12"], "c12", "euclidean"
            )
        assert {u: t.to_json() for u, t in templates.items()} == hashes_before
