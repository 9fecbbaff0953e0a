"""Exposure gap and pairwise ranking gap between two groups."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (
    InputError,
    Ranking,
    ScoredDataset,
    UndefinedAccuracyError,
    UndefinedGapError,
    UtilityFn,
    rank,
)

DEFAULT_UTILITY = UtilityFn("power", 0.65)


@dataclass(frozen=True)
class ExposureReport:
    group_a: str
    group_b: str
    exposure_a: float
    exposure_b: float
    exposure_share_a: float
    exposure_share_b: float
    signed_gap: float
    abs_gap: float
    utility: UtilityFn
    top_n: int | None
    # gap expected if exposure were proportional to group size
    proportional_gap: float


@dataclass(frozen=True)
class PairwiseReport:
    group_a: str
    group_b: str
    acc_a_over_b: float
    acc_b_over_a: float
    gap: float
    pair_counts: tuple[int, int]


@dataclass(frozen=True)
class PairTable:
    """Pair-level score differences (positive item minus negative item).

    ``a_over_b[i, j]`` is the delta for the i-th positive of group A against
    the j-th negative of group B; ``b_over_a`` likewise with roles swapped.
    Produced by delta matching, which has no per-item realization.
    """

    a_over_b: np.ndarray
    b_over_a: np.ndarray


@dataclass(frozen=True)
class GapCurve:
    positions: tuple[int, ...]
    gaps: tuple[float, ...]
    reference: tuple[float, ...] | None = None
    std: tuple[float, ...] | None = None

    def rows(self):
        for i, t in enumerate(self.positions):
            yield t, self.gaps[i], (None if self.reference is None else self.reference[i])


def _check_top_n(top_n, n):
    if top_n is None:
        return None
    if top_n < 1:
        raise InputError(f"top_n must be >= 1, got {top_n}")
    if top_n > n:
        raise InputError(f"top_n={top_n} exceeds item count {n}")
    return int(top_n)


def exposure(
    ranking: Ranking,
    dataset: ScoredDataset,
    group: str,
    utility: UtilityFn = DEFAULT_UTILITY,
    top_n: int | None = None,
) -> float:
    """Sum of position utility received by ``group`` within the top ``top_n``."""
    mask = dataset.mask(group)
    top_n = _check_top_n(top_n, len(ranking))
    return _group_exposure(ranking, mask, utility, top_n)


def _group_exposure(ranking, mask, utility, top_n):
    idx = np.flatnonzero(mask)
    u = utility(ranking.effective_rank[idx])
    if top_n is None or top_n >= len(ranking):
        # correctly rounded sum: independent of item order
        return math.fsum(u.tolist())
    w = ranking.prefix_weight(top_n)[idx]
    cut = ranking.boundary_block(top_n)
    if cut is None or not mask[cut[0]].any():
        return math.fsum(u[w == 1.0].tolist())
    # a share of a cut block: sum exactly, round once
    share = Fraction(cut[1], cut[2])
    total = sum((Fraction(ui) if wi == 1.0 else Fraction(ui) * share
                 for ui, wi in zip(u.tolist(), w.tolist()) if wi > 0), Fraction(0))
    return float(total)


def exposure_gap(
    ranking: Ranking,
    dataset: ScoredDataset,
    utility: UtilityFn = DEFAULT_UTILITY,
    top_n: int | None = None,
) -> ExposureReport:
    a, b = dataset.require_two_groups()
    top_n = _check_top_n(top_n, len(ranking))
    ea = _group_exposure(ranking, dataset.mask(a), utility, top_n)
    eb = _group_exposure(ranking, dataset.mask(b), utility, top_n)
    total = ea + eb
    if total == 0:
        raise UndefinedGapError("both groups have zero exposure in the evaluated prefix")
    share_a = ea / total
    na = int(dataset.mask(a).sum())
    nb = len(dataset) - na
    return ExposureReport(
        group_a=a,
        group_b=b,
        exposure_a=ea,
        exposure_b=eb,
        exposure_share_a=share_a,
        exposure_share_b=1.0 - share_a,
        signed_gap=(ea - eb) / total,
        abs_gap=abs(ea - eb) / total,
        utility=utility,
        top_n=top_n,
        proportional_gap=abs(na - nb) / (na + nb),
    )


def score_exposure_gap(
    scores,
    dataset: ScoredDataset,
    utility: UtilityFn = DEFAULT_UTILITY,
    top_n: int | None = None,
    tie_policy: str = "rank-share",
    seed: int | None = None,
) -> ExposureReport:
    """Rank ``scores`` and report the exposure gap of that ranking."""
    return exposure_gap(rank(scores, tie_policy, seed), dataset, utility, top_n)


def _direction_groups(dataset, direction):
    a, b = dataset.require_two_groups()
    if direction in ("A>B", "a>b", a):
        return a, b
    if direction in ("B>A", "b>a", b):
        return b, a
    raise InputError(f"unknown direction {direction!r}; use 'A>B' or 'B>A'")


def _count_wins(pos: np.ndarray, neg: np.ndarray, tie_credit: float) -> tuple[float, int]:
    neg_sorted = np.sort(neg)
    below = np.searchsorted(neg_sorted, pos, side="left")
    wins = int(below.sum())
    if tie_credit:
        ties = int((np.searchsorted(neg_sorted, pos, side="right") - below).sum())
        return wins + tie_credit * ties, pos.size * neg.size
    return wins, pos.size * neg.size


def pairwise_accuracy(
    scores,
    dataset: ScoredDataset,
    direction: str = "A>B",
    tie_credit: float = 0.0,
) -> float:
    """Fraction of (positive from one group, negative from the other) pairs
    where the positive scores strictly higher.

    ``direction`` ``"A>B"`` takes positives from group A; ``tie_credit`` is
    the credit a tied pair earns (0 by default). ``scores`` may also be a
    :class:`PairTable` of pair-level deltas.
    """
    hi, lo = _direction_groups(dataset, direction)
    if not dataset.has_labels:
        raise InputError("pairwise accuracy needs labels")
    names = {dataset.group_a: "A", dataset.group_b: "B"}
    pos_mask = dataset.quadrant(hi, 1)
    neg_mask = dataset.quadrant(lo, 0)
    for m, q in ((pos_mask, f"{names[hi]}1"), (neg_mask, f"{names[lo]}0")):
        if not m.any():
            raise UndefinedAccuracyError(q)
    if isinstance(scores, PairTable):
        deltas = scores.a_over_b if hi == dataset.group_a else scores.b_over_a
        wins = int((deltas > 0).sum())
        if tie_credit:
            wins = wins + tie_credit * int((deltas == 0).sum())
        return wins / deltas.size
    s = np.asarray(scores, dtype=np.float64)
    if s.shape != (len(dataset),):
        raise InputError(f"expected {len(dataset)} scores, got {s.shape}")
    if np.isnan(s).any():
        raise InputError("NaN score")
    wins, total = _count_wins(s[pos_mask], s[neg_mask], tie_credit)
    return wins / total


def pairwise_gap(scores, dataset: ScoredDataset, tie_credit: float = 0.0) -> PairwiseReport:
    a, b = dataset.require_two_groups()
    ab = pairwise_accuracy(scores, dataset, "A>B", tie_credit)
    ba = pairwise_accuracy(scores, dataset, "B>A", tie_credit)
    counts = (
        int(dataset.quadrant(a, 1).sum() * dataset.quadrant(b, 0).sum()),
        int(dataset.quadrant(b, 1).sum() * dataset.quadrant(a, 0).sum()),
    )
    return PairwiseReport(a, b, ab, ba, abs(ab - ba), counts)


def _check_positions(positions: Sequence[int], n: int) -> tuple[int, ...]:
    pos = tuple(int(t) for t in positions)
    if not pos:
        raise InputError("no positions given")
    for t in pos:
        if not 1 <= t <= n:
            raise InputError(f"position {t} outside [1, {n}]")
    if any(b <= a for a, b in zip(pos, pos[1:])):
        raise InputError("positions must be strictly increasing")
    return pos


def gap_curve(
    scores,
    dataset: ScoredDataset,
    utility: UtilityFn = DEFAULT_UTILITY,
    positions: Sequence[int] = (),
    tie_policy: str = "rank-share",
    seed: int | None = None,
) -> GapCurve:
    """Absolute exposure gap of every top-``t`` prefix."""
    pos = _check_positions(positions or range(1, len(dataset) + 1), len(dataset))
    r = rank(scores, tie_policy, seed)
    gaps = tuple(exposure_gap(r, dataset, utility, t).abs_gap for t in pos)
    return GapCurve(pos, gaps)


def _run_gaps(dataset, utility, pos, seed, run):
    rng = np.random.default_rng([seed, run])
    n = len(dataset)
    order = rng.permutation(n)
    ranks = np.empty(n)
    ranks[order] = np.arange(1, n + 1, dtype=np.float64)
    u = utility(ranks)[order]
    in_a = dataset.mask(dataset.group_a)[order]
    ua = np.where(in_a, u, 0.0)
    ub = np.where(in_a, 0.0, u)
    out = []
    for t in pos:
        ea, eb = math.fsum(ua[:t]), math.fsum(ub[:t])
        out.append(abs(ea - eb) / (ea + eb))
    return out


def random_order_reference(
    dataset: ScoredDataset,
    utility: UtilityFn = DEFAULT_UTILITY,
    positions: Sequence[int] = (),
    n_runs: int = 100,
    seed: int = 0,
) -> GapCurve:
    """Mean absolute exposure gap per prefix over uniformly random orderings.

    Run ``i`` draws its permutation from ``default_rng([seed, i])`` so runs are
    independent of evaluation order.
    """
    if n_runs < 1:
        raise InputError("n_runs must be >= 1")
    dataset.require_two_groups()
    pos = _check_positions(positions or range(1, len(dataset) + 1), len(dataset))
    runs = np.array([_run_gaps(dataset, utility, pos, seed, i) for i in range(n_runs)])
    mean = runs.mean(axis=0)
    std = runs.std(axis=0, ddof=1) if n_runs > 1 else np.zeros(len(pos))
    return GapCurve(pos, tuple(mean.tolist()), std=tuple(std.tolist()))
