"""Headroom analysis: how fair would the composed system be with some
components fixed?

Fairness improvement is reported as ``baseline gap - improved gap``, so a
positive value means the fix helps and sorting descending puts the most
useful components first.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import (
    FixConfig,
    InputError,
    ScoredDataset,
    UnsupportedFixError,
    UtilityFn,
    compose,
)
from .fixes import FixedComponent, apply_fix
from .metrics import DEFAULT_UTILITY, pairwise_gap, score_exposure_gap


@dataclass(frozen=True)
class CounterfactualSpec:
    """Target metric plus the fix to simulate on each component."""

    fixes: FixConfig
    metric: str = "exposure"
    utility: UtilityFn = DEFAULT_UTILITY
    top_n: int | None = None
    tie_policy: str = "rank-share"
    seed: int | None = None

    def __post_init__(self):
        if self.metric not in ("exposure", "pairwise"):
            raise InputError(f"unknown metric {self.metric!r}")

    def gap(self, scores, dataset: ScoredDataset) -> float:
        if self.metric == "pairwise":
            return pairwise_gap(scores, dataset).gap
        return score_exposure_gap(scores, dataset, self.utility, self.top_n,
                                  self.tie_policy, self.seed).abs_gap


@dataclass(frozen=True)
class HeadroomRow:
    subset: tuple[int, ...]
    baseline_gap: float
    improved_gap: float
    fi: float


@dataclass(frozen=True)
class HeadroomTable:
    rows: tuple[HeadroomRow, ...]
    component_names: tuple[str, ...] = field(default=())

    @property
    def baseline_gap(self) -> float:
        return self.rows[0].baseline_gap

    def label(self, subset: Sequence[int]) -> str:
        names = self.component_names
        return "+".join(names[k] if names else str(k) for k in subset)

    def ranking(self) -> list[str]:
        return [self.label(r.subset) for r in self.rows]


def _normalize_subset(subset, k: int) -> tuple[int, ...]:
    if isinstance(subset, (int, np.integer)):
        subset = (int(subset),)
    s = tuple(sorted(set(int(i) for i in subset)))
    for i in s:
        if not 0 <= i < k:
            raise InputError(f"component {i} out of range [0, {k})")
    return s


def _fixed(dataset, k, fixes: FixConfig, cache: dict | None) -> FixedComponent:
    if cache is not None and k in cache:
        return cache[k]
    fix = fixes.get(k)
    if fix.method == "delta-match":
        raise UnsupportedFixError(
            f"delta-match on component {k} is pair-level and cannot be composed; "
            "use conditional-match inside composition"
        )
    fc = apply_fix(dataset, k, fix, fixes)
    if cache is not None:
        cache[k] = fc
    return fc


def improved_system(
    dataset: ScoredDataset,
    subset: Iterable[int] | int,
    fixes: FixConfig,
    _cache: dict | None = None,
) -> np.ndarray:
    """Composite with every component in ``subset`` replaced by its fixed version."""
    s = _normalize_subset(subset, dataset.n_components)
    fixes.validate(dataset)
    overrides = {k: _fixed(dataset, k, fixes, _cache).scores for k in s}
    return compose(dataset, overrides)


def fairness_improvement(dataset: ScoredDataset, kappa, spec: CounterfactualSpec) -> float:
    base = spec.gap(compose(dataset), dataset)
    return base - spec.gap(improved_system(dataset, kappa, spec.fixes), dataset)


def _subsets(kind, k: int) -> list[tuple[int, ...]]:
    if kind == "singletons":
        return [(i,) for i in range(k)]
    if kind == "all":
        if k > 16:
            raise InputError("all-subsets sweep is limited to K <= 16")
        return [c for r in range(1, k + 1) for c in itertools.combinations(range(k), r)]
    out = [_normalize_subset(s, k) for s in kind]
    if any(not s for s in out):
        raise InputError("empty subset in sweep")
    return out


def headroom_sweep(dataset: ScoredDataset, spec: CounterfactualSpec, subsets="singletons") -> HeadroomTable:
    """Improved-system gap for each subset, sorted by FI descending.

    Ties in FI fall back to subset size, then lexicographic component order.
    """
    k = dataset.n_components
    todo = _subsets(subsets, k)
    spec.fixes.validate(dataset)
    baseline = spec.gap(compose(dataset), dataset)
    cache: dict[int, FixedComponent] = {}
    rows = []
    for s in todo:
        improved = spec.gap(improved_system(dataset, s, spec.fixes, cache), dataset)
        rows.append(HeadroomRow(s, baseline, improved, baseline - improved))
    rows.sort(key=lambda r: (-r.fi, len(r.subset), r.subset))
    return HeadroomTable(tuple(rows), dataset.component_names)
