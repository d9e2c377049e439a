import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import parsed
from hapticpass.analysis import (ComplexityScore, cohort_complexity,
                                 complexity, complexity_histogram,
                                 count_accel_zero_crossings,
                                 count_intersections, count_strokes,
                                 curved_portion, forging_difficulty,
                                 password_entropy, user_mean_counts)
from hapticpass.config import PipelineConfig
from hapticpass.features import FEATURE_LENGTH, FeatureVector
from hapticpass.hamming import enroll
from hapticpass.trace import StateMatrix, compute_state


def trace_from_points(points, contact=None, two_strokes_at=None):
    samples = []
    for i, (x, y) in enumerate(points):
        c = True if contact is None else contact[i]
        samples.append({"t": i / 60.0, "x": float(x), "y": float(y),
                        "f": 0.5 if c else 0.0, "contact": c})
    return parsed(samples)


def state_with_channel(name, values):
    from hapticpass.trace import CHANNELS

    channels = np.zeros((8, len(values)))
    channels[CHANNELS.index(name)] = values
    return StateMatrix(channels=channels)


class TestStrokeCount:
    def test_single_contact(self):
        t = trace_from_points([(i, 0) for i in range(10)])
        assert count_strokes(t) == 1

    def test_contact_gap_contact(self):
        contact = [True] * 5 + [False] * 3 + [True] * 5
        t = trace_from_points([(i, 0) for i in range(13)], contact=contact)
        assert count_strokes(t) == 2

    def test_three_annotated_strokes(self):
        contact = [True] * 4 + [False] * 2 + [True] * 4 + [False] * 2 + [True] * 4
        t = trace_from_points([(i, i % 3) for i in range(16)], contact=contact)
        assert count_strokes(t) == 3


class TestIntersections:
    def test_straight_line(self):
        t = trace_from_points([(i, 0) for i in range(12)])
        assert count_intersections(t) == 0

    def test_figure_eight_bowtie(self):
        # 4-point bowtie plus padding: exactly one transverse crossing
        pts = [(0, 0), (2, 2), (2, 0), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6)]
        t = trace_from_points(pts)
        assert count_intersections(t) == 1

    def test_x_drawn_as_two_strokes(self):
        # crossing lands in segment interiors (not on any shared sample point)
        contact = [True] * 5 + [False] * 2 + [True] * 5
        pts = (
            [(i, i) for i in range(5)]
            + [(4, 4), (4, 0)]
            + [(i, 3.5 - i) for i in range(5)]
        )
        t = trace_from_points(pts, contact=contact)
        assert count_intersections(t) == 1

    def test_shared_endpoint_pairs_never_count(self):
        # an X whose strokes meet exactly at a shared sample point is a
        # touch, not a transverse crossing
        contact = [True] * 5 + [False] * 2 + [True] * 5
        pts = (
            [(i, i) for i in range(5)]
            + [(4, 4), (4, 0)]
            + [(i, 4 - i) for i in range(5)]
        )
        t = trace_from_points(pts, contact=contact)
        assert count_intersections(t) == 0

    def test_corner_is_not_a_crossing(self):
        t = trace_from_points([(0, 0), (1, 0), (1, 1), (0, 1), (0, 2), (0, 3),
                               (0, 4), (0, 5)])
        assert count_intersections(t) == 0

    def test_reversal_invariant(self):
        rng = np.random.default_rng(0)
        pts = [(float(rng.uniform(0, 10)), float(rng.uniform(0, 10)))
               for _ in range(14)]
        fwd = trace_from_points(pts)
        rev = trace_from_points(pts[::-1])
        assert count_intersections(fwd) == count_intersections(rev)


class TestAccelCrossings:
    def test_monotone_speed(self):
        s = state_with_channel("a", np.ones(10))
        assert count_accel_zero_crossings(s) == 0

    def test_count_definition(self):
        s = state_with_channel("a", np.array([0.0, 1.0, -1.0, 1.0]))
        assert count_accel_zero_crossings(s) == 2

    def test_zeros_attach_to_preceding_sign(self):
        s = state_with_channel("a", np.array([0.0, 1.0, 0.0, 1.0, 0.0, -1.0]))
        assert count_accel_zero_crossings(s) == 1

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=60)
        s = state_with_channel("a", a)
        signs = [x for x in np.sign(a) if x != 0]
        expected = sum(1 for p, q in zip(signs, signs[1:]) if p != q)
        assert count_accel_zero_crossings(s) == expected


class TestCurvedPortion:
    def test_straight_line(self):
        t = trace_from_points([(i, 0) for i in range(12)])
        assert curved_portion(compute_state(t)) == 0

    def test_band_membership(self):
        # pi/3 and pi/10 lie outside [pi/6, pi/4]; pi/5.5 and pi/5 inside
        assert curved_portion(state_with_channel("omega", np.full(10, np.pi / 3))) == 0
        assert curved_portion(state_with_channel("omega", np.full(10, np.pi / 10))) == 0
        assert curved_portion(state_with_channel("omega", np.full(10, np.pi / 5.5))) == 10
        assert curved_portion(state_with_channel("omega", np.full(10, np.pi / 5))) == 10

    def test_band_is_closed(self):
        edges = state_with_channel(
            "omega", np.array([np.pi / 6, np.pi / 4, -np.pi / 6, -np.pi / 4])
        )
        assert curved_portion(edges) == 4


class TestComplexity:
    def test_user_attaining_all_maxima(self):
        score = complexity("u", (3, 4, 5, 6), (3, 4, 5, 6))
        assert score.delta == pytest.approx(4.0)

    def test_single_term_user(self):
        score = complexity("u", (2, 0, 0, 0), (4, 10, 10, 10))
        assert score.delta == pytest.approx(0.5)

    def test_zero_cohort_maximum_term_is_zero(self):
        score = complexity("u", (1, 0, 2, 0), (2, 0, 4, 0))
        assert score.delta == pytest.approx(1.0)

    def test_two_user_cohort_hand_computed(self):
        line = [trace_from_points([(i, 0) for i in range(12)])] * 2
        contact = [True] * 5 + [False] * 2 + [True] * 5
        pts = (
            [(i, i) for i in range(5)] + [(4, 4), (4, 0)]
            + [(i, 4 - i) for i in range(5)]
        )
        crossy = [trace_from_points(pts, contact=contact)] * 2
        scores = cohort_complexity({"a": line, "b": crossy})
        by_id = {s.user_id: s for s in scores}
        # user b attains all nonzero maxima; user a scores on strokes only
        assert by_id["b"].delta >= 1.0
        assert by_id["a"].strokes == 1.0
        assert by_id["a"].intersections == 0.0

    def test_delta_invariant_under_count_rescaling(self):
        means = {"a": (1.0, 2.0, 3.0, 4.0), "b": (2.0, 1.0, 6.0, 2.0)}
        maxima = (2.0, 2.0, 6.0, 4.0)
        scaled_maxima = tuple(3.0 * m for m in maxima)
        for uid, m in means.items():
            d0 = complexity(uid, m, maxima).delta
            d1 = complexity(uid, tuple(3.0 * x for x in m), scaled_maxima).delta
            assert d0 == pytest.approx(d1)

    def test_histogram_buckets(self):
        scores = [
            ComplexityScore("a", 0, 0, 0, 0, (1, 1, 1, 1), 0.2),
            ComplexityScore("b", 0, 0, 0, 0, (1, 1, 1, 1), 0.7),
            ComplexityScore("c", 0, 0, 0, 0, (1, 1, 1, 1), 2.9),
        ]
        hist = complexity_histogram(scores)
        assert hist == {"[0,0.5)": 1, "[0.5,1)": 1, "[1,1.5)": 0, "[1.5,inf)": 1}


class TestForgingDifficulty:
    def _template(self, rng):
        base = rng.normal(size=FEATURE_LENGTH)
        vecs = [
            FeatureVector(values=base + 0.3 * rng.normal(size=FEATURE_LENGTH),
                          wavelet="c12")
            for _ in range(6)
        ]
        return enroll("u", vecs, PipelineConfig(), distance_threshold=90)

    def test_forgery_at_center_scores_zero(self):
        rng = np.random.default_rng(2)
        tpl = self._template(rng)
        probe = FeatureVector(values=tpl.mu.copy(), wavelet="c12")
        assert forging_difficulty(tpl, [probe]) == 0

    def test_known_deviation_count(self):
        rng = np.random.default_rng(3)
        tpl = self._template(rng)
        forgeries = []
        for m in (12, 30, 21):
            v = tpl.mu.copy()
            v[:m] += (tpl.feature_threshold + 1.0) * tpl.sigma[:m]
            forgeries.append(FeatureVector(values=v, wavelet="c12"))
        assert forging_difficulty(tpl, forgeries) == 12

    def test_monotone_in_pool(self):
        rng = np.random.default_rng(4)
        tpl = self._template(rng)
        pool = [
            FeatureVector(values=rng.normal(size=FEATURE_LENGTH), wavelet="c12")
            for _ in range(8)
        ]
        vals = [forging_difficulty(tpl, pool[: k + 1]) for k in range(8)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_empty_pool_rejected(self):
        rng = np.random.default_rng(5)
        with pytest.raises(ValueError, match="empty"):
            forging_difficulty(self._template(rng), [])


class TestEntropy:
    def _cohort_with_feature0(self, user_values, fill=5.0):
        """Cohort whose position/force features are constant except index 0."""
        cohort = {}
        for uid, vals in user_values.items():
            rows = []
            for v in vals:
                row = np.full(FEATURE_LENGTH, fill)
                row[0] = v
                rows.append(row)
            cohort[uid] = np.vstack(rows)
        return cohort

    def test_symbol_arithmetic_30_sigma(self):
        # R = 30, per-user std 1 -> S = 10 -> log2(10) bits
        cohort = self._cohort_with_feature0({"a": [0.0, 2.0], "b": [28.0, 30.0]})
        report = password_entropy(cohort)
        assert report.bits == pytest.approx(np.log2(10.0), abs=1e-9)

    def test_constant_feature_contributes_zero(self):
        cohort = self._cohort_with_feature0({"a": [0.0, 1.0], "b": [0.5, 1.5]})
        report = password_entropy(cohort)
        # every other position/force feature is constant: range 0, symbols 0
        constant = [i for i, idx in enumerate(report.selected_indices) if idx != 0]
        assert np.all(report.symbol_sizes[constant] == 0.0)

    def test_correlated_features_dropped(self):
        rng = np.random.default_rng(6)
        cohort = {}
        for uid in ("a", "b"):
            rows = []
            for _ in range(6):
                row = np.zeros(FEATURE_LENGTH)
                shared = rng.normal()
                row[:69] = shared  # perfectly correlated position/force block
                rows.append(row)
            cohort[uid] = np.vstack(rows)
        report = password_entropy(cohort)
        assert len(report.selected_indices) == 0
        assert report.bits == 0.0

    def test_only_position_force_channels_enter(self):
        rng = np.random.default_rng(7)
        cohort = {}
        for uid in ("a", "b"):
            rows = []
            for _ in range(4):
                row = np.zeros(FEATURE_LENGTH)
                row[69:] = rng.normal(size=FEATURE_LENGTH - 69) * 100
                rows.append(row)
            cohort[uid] = np.vstack(rows)
        # derived-channel variation alone leaves the candidate block constant
        with pytest.raises(ValueError, match="degenerate"):
            password_entropy(cohort)

    def test_entropy_nonnegative_property(self):
        rng = np.random.default_rng(8)
        cohort = {
            uid: rng.normal(size=(5, FEATURE_LENGTH)) * rng.uniform(0.5, 2.0)
            for uid in ("a", "b", "c")
        }
        report = password_entropy(cohort)
        assert report.bits >= 0.0
        assert np.all(report.symbol_sizes >= 0.0)

    def test_needs_two_users(self):
        with pytest.raises(ValueError):
            password_entropy({"a": np.zeros((3, FEATURE_LENGTH))})


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_intersections_nonnegative_and_reversal_invariant(seed):
    rng = np.random.default_rng(seed)
    pts = [(float(x), float(y)) for x, y in rng.integers(0, 8, size=(12, 2))]
    # drop consecutive duplicates so timestamps stay strictly increasing paths
    fwd = trace_from_points(pts)
    rev = trace_from_points(pts[::-1])
    n_fwd = count_intersections(fwd)
    assert n_fwd >= 0
    assert n_fwd == count_intersections(rev)
