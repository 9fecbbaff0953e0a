"""Per-component score transforms that simulate a component made fair.

None of these retrain anything: they rewrite the scores of one component
directly over the audited dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DegenerateDistributionError,
    Fix,
    FixConfig,
    InputError,
    ModeError,
    ScoredDataset,
)
from .metrics import PairTable


@dataclass(frozen=True, eq=False)
class FixedComponent:
    component: int
    method: str
    scores: np.ndarray | None = None
    pairs: PairTable | None = None

    @property
    def per_item(self) -> bool:
        return self.scores is not None


@dataclass(frozen=True, eq=False)
class DeltaSet:
    direction: str
    values: np.ndarray  # ascending


def _ranked_order(values: np.ndarray, tie_order: str, rng) -> np.ndarray:
    """Indices of ``values`` from highest to lowest.

    Ties keep input order, or a seeded shuffle with ``tie_order="random"``.
    """
    if tie_order == "random":
        return np.lexsort((rng.random(values.size), -values))
    return np.argsort(-values, kind="stable")


def match_to_reference(values, reference, tie_order="input", rng=None) -> np.ndarray:
    """Quantile-map ``values`` onto the empirical distribution of ``reference``.

    Equal sizes: the item ranked j-th in ``values`` takes the j-th ranked
    reference score, so the two multisets coincide exactly. Different sizes:
    the item at ascending position j (1-based) of m takes the reference
    quantile at level j / (m + 1), linearly interpolated between reference
    order statistics and clamped at the extremes.
    """
    values = np.asarray(values, dtype=np.float64)
    ref = np.sort(np.asarray(reference, dtype=np.float64))[::-1]
    if values.size == 0 or ref.size == 0:
        raise InputError("cannot match an empty group")
    if tie_order == "random" and rng is None:
        rng = np.random.default_rng()
    order = _ranked_order(values, tie_order, rng)
    m, n = values.size, ref.size
    if m == n:
        mapped = ref
    else:
        asc_level = (m - np.arange(m)) / (m + 1)  # descending position p -> level
        ref_asc = ref[::-1]
        if n == 1:
            mapped = np.full(m, ref_asc[0])
        else:
            mapped = np.interp(asc_level * (n - 1), np.arange(n), ref_asc)
    out = np.empty(m)
    out[order] = mapped
    return out


def _reference(dataset: ScoredDataset, reference_group: str | None) -> tuple[str, str]:
    a, b = dataset.require_two_groups()
    ref = reference_group or a
    dataset.mask(ref)
    return ref, (b if ref == a else a)


def _rng(seed):
    return np.random.default_rng(seed)


def marginal_match(
    dataset: ScoredDataset,
    k: int,
    reference_group: str | None = None,
    tie_order: str = "input",
    seed: int | None = None,
) -> FixedComponent:
    """Replace the non-reference group's scores with reference-group quantiles."""
    ref, other = _reference(dataset, reference_group)
    f = dataset.component(k)
    ref_mask, other_mask = dataset.mask(ref), dataset.mask(other)
    out = f.copy()
    out[other_mask] = match_to_reference(f[other_mask], f[ref_mask], tie_order, _rng(seed))
    return FixedComponent(k, "marginal-match", out)


def conditional_match(
    dataset: ScoredDataset,
    k: int,
    reference_group: str | None = None,
    tie_order: str = "input",
    seed: int | None = None,
) -> FixedComponent:
    """Marginal matching done separately among label-0 and label-1 items."""
    if not dataset.has_labels:
        raise InputError("conditional matching needs labels")
    ref, other = _reference(dataset, reference_group)
    names = {dataset.group_a: "A", dataset.group_b: "B"}
    for g in (ref, other):
        for y in (0, 1):
            if not dataset.quadrant(g, y).any():
                raise InputError(f"quadrant {names[g]}{y} is empty")
    f = dataset.component(k)
    out = f.copy()
    rng = _rng(seed)
    for y in (0, 1):
        rm, om = dataset.quadrant(ref, y), dataset.quadrant(other, y)
        out[om] = match_to_reference(f[om], f[rm], tie_order, rng)
    return FixedComponent(k, "conditional-match", out)


def delta_set(scores, dataset: ScoredDataset, direction: str = "A>B") -> DeltaSet:
    """Sorted cross-group deltas, positive minus negative, for one direction."""
    pos, neg = _quadrants(dataset, direction)
    f = np.asarray(scores, dtype=np.float64)
    d = (f[pos][:, None] - f[neg][None, :]).ravel()
    return DeltaSet(direction, np.sort(d))


def _quadrants(dataset, direction):
    a, b = dataset.require_two_groups()
    if direction == "A>B":
        return dataset.quadrant(a, 1), dataset.quadrant(b, 0)
    if direction == "B>A":
        return dataset.quadrant(b, 1), dataset.quadrant(a, 0)
    raise InputError(f"unknown direction {direction!r}")


def delta_match(dataset: ScoredDataset, k: int) -> FixedComponent:
    """Pair-level fix making the B>A delta multiset equal the A>B one.

    The A>B pairs keep their deltas. The B>A pair whose delta is r-th smallest
    gets the r-th smallest A>B delta, i.e. the B positive is rescored as the
    A negative's score plus that delta, separately for every pair. Deltas are
    stored directly rather than as rescored pairs to avoid rounding.
    """
    if not dataset.has_labels:
        raise InputError("delta matching needs labels")
    a, b = dataset.require_two_groups()
    sizes = {q: int(dataset.quadrant(g, y).sum())
             for q, g, y in (("A0", a, 0), ("A1", a, 1), ("B0", b, 0), ("B1", b, 1))}
    if len(set(sizes.values())) != 1 or sizes["A0"] == 0:
        raise ModeError(
            f"delta matching needs equal non-empty quadrants, got {sizes}; "
            "use conditional-match for unequal quadrant sizes"
        )
    f = dataset.component(k)
    a1, b0 = f[dataset.quadrant(a, 1)], f[dataset.quadrant(b, 0)]
    b1, a0 = f[dataset.quadrant(b, 1)], f[dataset.quadrant(a, 0)]
    kept = a1[:, None] - b0[None, :]
    c = np.sort(kept, axis=None, kind="stable")
    old = (b1[:, None] - a0[None, :]).ravel()
    order = np.argsort(old, kind="stable")
    new = np.empty_like(old)
    new[order] = c
    new = new.reshape(b1.size, a0.size)
    return FixedComponent(k, "delta-match", pairs=PairTable(kept, new))


def normalize(dataset: ScoredDataset, k: int) -> FixedComponent:
    """Per-group standardization with the population standard deviation."""
    f = dataset.component(k)
    out = f.copy()
    for g in dataset.group_order:
        m = dataset.mask(g)
        x = f[m]
        if x.size < 2:
            raise DegenerateDistributionError(f"group {g!r} needs at least 2 items to normalize")
        sd = x.std()
        if sd == 0:
            raise DegenerateDistributionError(f"group {g!r} has zero spread in component {k}")
        out[m] = (x - x.mean()) / sd
    return FixedComponent(k, "normalize", out)


def constant_p(dataset: ScoredDataset, k: int, p: float) -> FixedComponent:
    if not dataset.has_labels:
        raise InputError("constant-p needs labels")
    if not 0.0 < p < 1.0:
        raise InputError(f"p must be in (0, 1), got {p}")
    dataset.component(k)
    out = np.where(dataset.labels == 1, p, 1.0 - p).astype(np.float64)
    return FixedComponent(k, "constant-p", out)


def positivity_shift(scores: np.ndarray) -> np.ndarray:
    """Add ``1 + |min|`` so every score is at least 1."""
    s = np.asarray(scores, dtype=np.float64)
    return s + (1.0 + abs(float(s.min())))


def apply_fix(dataset: ScoredDataset, k: int, fix: Fix | str, config: FixConfig | None = None) -> FixedComponent:
    """Dispatch one component's fix according to ``config``."""
    if isinstance(fix, str):
        fix = Fix(fix)
    config = config or FixConfig()
    ref = config.reference_group
    method = fix.method
    if method == "none":
        fc = FixedComponent(k, "none", dataset.component(k).copy())
    elif method == "marginal-match":
        fc = marginal_match(dataset, k, ref, config.tie_order, config.seed)
    elif method == "conditional-match":
        fc = conditional_match(dataset, k, ref, config.tie_order, config.seed)
    elif method == "delta-match":
        return delta_match(dataset, k)
    elif method == "normalize":
        fc = normalize(dataset, k)
    elif method == "constant-p":
        fc = constant_p(dataset, k, fix.p)
    else:  # pragma: no cover - Fix validates the method
        raise InputError(f"unknown fix {method!r}")
    if config.positivity_shift and method != "none":
        fc = FixedComponent(k, method, positivity_shift(fc.scores))
    return fc
