import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from fairchain.core import InputError, ScoredDataset, UtilityFn, compose, rank
from fairchain.datagen import epsilon_example, motivating_example, pairwise_example
from fairchain.metrics import (
    UndefinedAccuracyError,
    UndefinedGapError,
    exposure,
    exposure_gap,
    gap_curve,
    pairwise_accuracy,
    pairwise_gap,
    random_order_reference,
    score_exposure_gap,
)

FLAT = UtilityFn("power", 0.0)


def dataset(scores, groups, labels=None):
    return ScoredDataset(ids=list(range(len(groups))), groups=groups,
                         scores=np.asarray(scores, dtype=float).reshape(len(groups), -1),
                         labels=labels, group_order=("A", "B"))


class TestExposure:
    def test_motivating_composite_top2(self):
        ds = motivating_example()
        r = rank(compose(ds))
        assert exposure(r, ds, "white", FLAT, top_n=2) == 2.0
        assert exposure(r, ds, "non-white", FLAT, top_n=2) == 0.0

    def test_single_group_gets_everything(self):
        ds = ScoredDataset(ids=[1, 2, 3], groups=["A"] * 3, scores=[[3.0], [1.0], [2.0]])
        u = UtilityFn("power", 0.65)
        assert exposure(rank(ds.scores[:, 0]), ds, "A", u) == pytest.approx(sum(u.value(r) for r in (1, 2, 3)))

    def test_six_items_frozen(self):
        s = [0.9, 0.1, 0.5, 0.7, 0.3, 0.2]
        ds = dataset(s, list("ABABAB"))
        r = rank(s)
        # frozen from the enumeration oracle
        assert exposure(r, ds, "A") == 1.8957597663781423
        assert exposure(r, ds, "B") == 1.3006071485696327
        assert exposure_gap(r, ds).abs_gap == 0.18619658932936795

    def test_unknown_group(self):
        ds = dataset([1.0, 2.0], ["A", "B"])
        with pytest.raises(InputError):
            exposure(rank([1.0, 2.0]), ds, "C")

    def test_top_n_too_large(self):
        ds = dataset([1.0, 2.0], ["A", "B"])
        with pytest.raises(InputError):
            exposure(rank([1.0, 2.0]), ds, "A", top_n=3)


class TestExposureGap:
    def test_epsilon_composed_top2(self):
        ds = epsilon_example(1.0, 0.1)
        rep = score_exposure_gap(compose(ds), ds, FLAT, top_n=2)
        assert rep.abs_gap == 1.0
        assert rep.exposure_share_b == 1.0

    def test_alternating_is_zero(self):
        n = 10
        ds = dataset(np.arange(n, 0, -1), ["A", "B"] * (n // 2))
        assert score_exposure_gap(ds.scores[:, 0], ds, FLAT).abs_gap == 0.0

    def test_random_matches_oracle(self):
        rng = np.random.default_rng(11)
        s = rng.normal(size=10)
        g = list("AABBBABABA")
        ds = dataset(s, g)
        assert score_exposure_gap(s, ds).abs_gap == oracles.exposure_gap(s.tolist(), g, "A", "B")

    def test_undefined_when_no_exposure(self):
        ds = dataset([1.0, 2.0], ["A", "B"])
        with pytest.raises(UndefinedGapError):
            exposure_gap(rank([1.0, 2.0]), ds, _Zero())

    def test_report_fields(self):
        ds = dataset([4.0, 3.0, 2.0, 1.0, 0.0], list("AABBA"))
        rep = score_exposure_gap(ds.scores[:, 0], ds)
        assert rep.exposure_share_a + rep.exposure_share_b == 1.0
        assert rep.abs_gap == abs(rep.signed_gap)
        assert rep.proportional_gap == pytest.approx(0.2)

    def test_tied_block_split_at_cutoff(self):
        ds = dataset([1.0, 1.0, 1.0, 1.0], list("AABB"))
        assert score_exposure_gap(ds.scores[:, 0], ds, FLAT, top_n=1).abs_gap == 0.0

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(0.01, 100), min_size=2, max_size=40), st.floats(0.01, 1000))
    def test_scale_invariance(self, values, c):
        groups = (["A", "B"] * len(values))[: len(values)]
        ds = dataset(values, groups)
        s = np.array(values)
        if len(set(s.tolist())) != len(set((s * c).tolist())):
            return
        a = score_exposure_gap(s, ds)
        b = score_exposure_gap(s * c, ds)
        assert a == b or (a.abs_gap == b.abs_gap and a.signed_gap == b.signed_gap)
        assert 0.0 <= a.abs_gap <= 1.0


class _Zero(UtilityFn):
    def __init__(self):
        object.__setattr__(self, "kind", "power")
        object.__setattr__(self, "w", 0.0)

    def __call__(self, ranks):
        return np.zeros(np.shape(ranks))


class TestPairwise:
    def test_counter_example_table(self):
        ds = pairwise_example()
        f = compose(ds)
        assert pairwise_accuracy(f, ds, "A>B") == 0.0
        assert pairwise_accuracy(f, ds, "B>A") == 0.5
        rep = pairwise_gap(f, ds)
        assert rep.gap == 0.5
        assert rep.pair_counts == (4, 4)

    def test_perfect_separation(self):
        labels = [1, 1, 0, 0, 1, 0]
        ds = dataset([9, 8, 1, 2, 7, 0], list("ABABBA"), labels)
        rep = pairwise_gap(ds.scores[:, 0], ds)
        assert rep.acc_a_over_b == 1.0 and rep.acc_b_over_a == 1.0 and rep.gap == 0.0

    def test_random_matches_pair_enumeration(self):
        rng = np.random.default_rng(5)
        s = rng.integers(0, 6, size=20).astype(float)
        g = ["A"] * 10 + ["B"] * 10
        y = rng.integers(0, 2, size=20)
        y[[0, 1, 10, 11]] = [1, 0, 1, 0]
        ds = dataset(s, g, y)
        ab = oracles.pairwise_accuracy(s, g, y, "A", "B")
        ba = oracles.pairwise_accuracy(s, g, y, "B", "A")
        assert pairwise_accuracy(s, ds, "A>B") == ab
        assert pairwise_gap(s, ds).gap == abs(ab - ba)

    def test_mirrored_groups_zero_gap(self):
        s = [3.0, 1.0, 2.0, 0.5] * 2
        ds = dataset(s, ["A"] * 4 + ["B"] * 4, [1, 0, 1, 0] * 2)
        assert pairwise_gap(s, ds).gap == 0.0

    def test_ties_incorrect_unless_half_credit(self):
        ds = dataset([1.0, 1.0], ["A", "B"], [1, 0])
        assert pairwise_accuracy([1.0, 1.0], ds, "A>B") == 0.0
        assert pairwise_accuracy([1.0, 1.0], ds, "A>B", tie_credit=0.5) == 0.5

    def test_empty_quadrant_named(self):
        ds = dataset([1.0, 2.0, 3.0], ["A", "B", "B"], [1, 0, 1])
        with pytest.raises(UndefinedAccuracyError) as err:
            pairwise_accuracy(ds.scores[:, 0], ds, "B>A")
        assert err.value.quadrant == "A0"


class TestCurves:
    def test_full_length_matches_gap(self):
        rng = np.random.default_rng(1)
        s = rng.normal(size=12)
        ds = dataset(s, ["A", "B"] * 6)
        curve = gap_curve(s, ds, positions=[12])
        assert curve.gaps[0] == score_exposure_gap(s, ds).abs_gap

    def test_prefix_oracle(self):
        s = [0.3, 0.9, 0.1, 0.8, 0.5, 0.4, 0.7, 0.2]
        g = list("ABBAABAB")
        ds = dataset(s, g)
        curve = gap_curve(s, ds, positions=range(1, 9))
        for t, gap in zip(curve.positions, curve.gaps):
            assert gap == oracles.exposure_gap(s, g, "A", "B", top_n=t)

    def test_positions_validated(self):
        ds = dataset([1.0, 2.0], ["A", "B"])
        with pytest.raises(InputError):
            gap_curve([1.0, 2.0], ds, positions=[0])
        with pytest.raises(InputError):
            gap_curve([1.0, 2.0], ds, positions=[2, 1])

    def test_random_reference_converges_for_equal_groups(self):
        n = 1000
        ds = dataset(np.zeros(n), ["A", "B"] * (n // 2))
        ref = random_order_reference(ds, UtilityFn("power", 0.65), [n], n_runs=1000, seed=1)
        assert ref.gaps[0] < 0.05

    def test_random_reference_deterministic(self):
        ds = dataset(np.zeros(20), ["A"] * 12 + ["B"] * 8)
        a = random_order_reference(ds, positions=[5, 10, 20], n_runs=1, seed=3)
        b = random_order_reference(ds, positions=[5, 10, 20], n_runs=1, seed=3)
        assert a == b

    def test_random_reference_against_independent_monte_carlo(self):
        ds = dataset(np.zeros(1000), ["A"] * 690 + ["B"] * 310)
        ref = random_order_reference(ds, positions=[100], n_runs=100, seed=0)
        # independent estimate: plain shuffles of the group labels, different seed
        rng = np.random.default_rng(12345)
        u = np.arange(1, 101) ** -0.65
        gaps = []
        for _ in range(2000):
            top = rng.permutation(np.array([1] * 690 + [0] * 310))[:100]
            ea, eb = u[top == 1].sum(), u[top == 0].sum()
            gaps.append(abs(ea - eb) / (ea + eb))
        se = np.sqrt(ref.std[0] ** 2 / 100 + np.var(gaps, ddof=1) / len(gaps))
        assert abs(ref.gaps[0] - np.mean(gaps)) < 3 * se
