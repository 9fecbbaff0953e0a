"""Shared data model: scored datasets, rankings, utilities and fix configuration.

Everything here is immutable after construction. Arrays handed out by
:class:`ScoredDataset` are read-only views.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

TIE_POLICIES = ("rank-share", "random")
FIX_METHODS = (
    "none",
    "marginal-match",
    "conditional-match",
    "delta-match",
    "normalize",
    "constant-p",
)
LABELED_METHODS = ("conditional-match", "delta-match", "constant-p")


class FairchainError(ValueError):
    """Base class for all input and configuration errors."""


class InputError(FairchainError):
    pass


class StructuralError(FairchainError):
    """Shapes or lengths do not line up."""


class EmptyDatasetError(InputError):
    pass


class UndefinedGapError(FairchainError):
    """Both groups received zero exposure, so the normalized gap is 0/0."""


class UndefinedAccuracyError(FairchainError):
    """A pairwise accuracy has no pairs because a quadrant is empty."""

    def __init__(self, quadrant: str, message: str | None = None):
        self.quadrant = quadrant
        super().__init__(message or f"quadrant {quadrant} is empty; pairwise accuracy undefined")


class DegenerateDistributionError(FairchainError):
    pass


class ModeError(FairchainError):
    pass


class UnsupportedFixError(FairchainError):
    pass


class InvariantError(RuntimeError):
    """An internal consistency check failed (a bug, not bad input)."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScoredDataset:
    """Items with a group tag, an optional binary label and K component scores.

    ``scores`` has shape ``(n, K)``. ``group_order`` fixes which tag plays the
    role of group A (first) and group B (second); it defaults to the sorted
    distinct tags.
    """

    ids: tuple
    groups: np.ndarray
    scores: np.ndarray
    labels: np.ndarray | None = None
    component_names: tuple[str, ...] = ()
    group_order: tuple[str, ...] = ()

    def __post_init__(self):
        ids = tuple(self.ids)
        n = len(ids)
        if n == 0:
            raise EmptyDatasetError("dataset has no items")
        if len(set(ids)) != n:
            seen = set()
            dup = next(i for i in ids if i in seen or seen.add(i))
            raise InputError(f"duplicate item id {dup!r}")
        groups = np.asarray([str(g) for g in self.groups], dtype=object)
        if groups.shape != (n,):
            raise StructuralError(f"expected {n} group tags, got {groups.shape[0]}")
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.ndim == 1:
            scores = scores.reshape(n, 1) if scores.shape[0] == n else scores
        if scores.ndim != 2 or scores.shape[0] != n or scores.shape[1] < 1:
            raise StructuralError(f"scores must have shape (n={n}, K>=1), got {scores.shape}")
        if not np.all(np.isfinite(scores)):
            raise InputError("scores must be finite")
        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels)
            if labels.shape != (n,):
                raise StructuralError(f"expected {n} labels, got shape {labels.shape}")
            if not np.all((labels == 0) | (labels == 1)):
                raise InputError("labels must be 0 or 1")
            labels = labels.astype(np.int8)
        tags = sorted(set(groups.tolist()))
        if len(tags) > 2:
            raise InputError(f"at most two groups are supported, got {tags}")
        order = tuple(self.group_order) or tuple(tags)
        if sorted(order) != tags:
            raise InputError(f"group_order {order} does not match tags {tags}")
        k = scores.shape[1]
        names = tuple(self.component_names) or tuple(f"score_{i}" for i in range(k))
        if len(names) != k:
            raise StructuralError(f"{len(names)} component names for {k} components")

        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "groups", _readonly(groups))
        object.__setattr__(self, "scores", _readonly(scores))
        object.__setattr__(self, "labels", None if labels is None else _readonly(labels))
        object.__setattr__(self, "component_names", names)
        object.__setattr__(self, "group_order", order)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n_components(self) -> int:
        return self.scores.shape[1]

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    @property
    def group_a(self) -> str:
        return self.group_order[0]

    @property
    def group_b(self) -> str:
        if len(self.group_order) < 2:
            raise InputError("dataset has a single group; two are required")
        return self.group_order[1]

    def require_two_groups(self) -> tuple[str, str]:
        return self.group_a, self.group_b

    def mask(self, group: str) -> np.ndarray:
        if group not in self.group_order:
            raise InputError(f"unknown group {group!r}; known: {list(self.group_order)}")
        return self.groups == group

    def quadrant(self, group: str, label: int) -> np.ndarray:
        """Boolean mask of items in ``group`` with the given label."""
        if self.labels is None:
            raise InputError("dataset has no labels")
        return self.mask(group) & (self.labels == label)

    def component(self, k: int) -> np.ndarray:
        if not 0 <= k < self.n_components:
            raise StructuralError(f"component {k} out of range [0, {self.n_components})")
        return self.scores[:, k]

    def subset(self, index: Sequence[int] | np.ndarray) -> "ScoredDataset":
        idx = np.asarray(index, dtype=np.intp)
        return ScoredDataset(
            ids=tuple(self.ids[i] for i in idx),
            groups=self.groups[idx],
            scores=self.scores[idx],
            labels=None if self.labels is None else self.labels[idx],
            component_names=self.component_names,
            group_order=self.group_order,
        )

    def with_scores(self, scores: np.ndarray) -> "ScoredDataset":
        return ScoredDataset(
            ids=self.ids,
            groups=self.groups,
            scores=scores,
            labels=self.labels,
            component_names=self.component_names,
            group_order=self.group_order,
        )

    def with_reference(self, group: str) -> "ScoredDataset":
        """Copy with ``group`` moved to the group-A slot."""
        self.mask(group)
        order = (group,) + tuple(g for g in self.group_order if g != group)
        return ScoredDataset(self.ids, self.groups, self.scores, self.labels,
                             self.component_names, order)


def compose(
    dataset: ScoredDataset,
    overrides: Mapping[int, Sequence[float] | np.ndarray] | None = None,
) -> np.ndarray:
    """Per-item product of component scores, with some components substituted.

    Overrides replace a component's column before multiplication; the quotient
    form ``f * g / f_k`` is never used, so zero scores are safe.
    """
    cols = [dataset.scores[:, k] for k in range(dataset.n_components)]
    for k, values in (overrides or {}).items():
        if not 0 <= k < dataset.n_components:
            raise StructuralError(f"override for unknown component {k}")
        v = np.asarray(values, dtype=np.float64)
        if v.shape != (len(dataset),):
            raise StructuralError(
                f"override for component {k} has {v.size} values, expected {len(dataset)}"
            )
        if not np.all(np.isfinite(v)):
            raise InputError(f"override for component {k} has non-finite values")
        cols[k] = v
    out = cols[0].copy()
    for c in cols[1:]:
        out = out * c
    return out


@dataclass(frozen=True, eq=False)
class Ranking:
    """Items in descending score order.

    ``order[p]`` is the dataset index of the item at position ``p`` (0-based).
    ``effective_rank[i]`` is item ``i``'s 1-based rank; under rank-share, tied
    items carry the mean rank of their block.
    """

    order: np.ndarray
    effective_rank: np.ndarray
    tie_policy: str
    scores: np.ndarray

    def __len__(self) -> int:
        return self.order.shape[0]

    def item_ids(self, dataset: ScoredDataset) -> list:
        return [dataset.ids[i] for i in self.order]

    def prefix_weight(self, top_n: int | None) -> np.ndarray:
        """Fraction of each item that falls inside the first ``top_n`` positions.

        Under rank-share a tied block cut by the boundary is shared evenly.
        """
        n = len(self)
        if top_n is None or top_n >= n:
            return np.ones(n)
        if top_n < 0:
            raise InputError("top_n must be non-negative")
        weight = np.zeros(n)
        pos = np.empty(n, dtype=np.intp)
        pos[self.order] = np.arange(n)
        if self.tie_policy != "rank-share":
            weight[pos < top_n] = 1.0
            return weight
        sorted_scores = self.scores[self.order]
        start = 0
        while start < n and start < top_n:
            end = start + 1
            while end < n and sorted_scores[end] == sorted_scores[start]:
                end += 1
            block = self.order[start:end]
            inside = min(end, top_n) - start
            weight[block] = 1.0 if inside == end - start else inside / (end - start)
            start = end
        return weight

    def boundary_block(self, top_n: int | None) -> tuple[np.ndarray, int, int] | None:
        """The tied block cut by the ``top_n`` boundary, as (items, inside, size).

        None when the boundary falls between blocks or ties are not shared.
        """
        n = len(self)
        if top_n is None or top_n >= n or top_n <= 0 or self.tie_policy != "rank-share":
            return None
        s = self.scores[self.order]
        if s[top_n - 1] != s[top_n]:
            return None
        start = int(np.searchsorted(-s, -s[top_n], side="left"))
        end = int(np.searchsorted(-s, -s[top_n], side="right"))
        return self.order[start:end], top_n - start, end - start


def rank(
    scores: Sequence[float] | np.ndarray,
    tie_policy: str = "rank-share",
    seed: int | None = None,
) -> Ranking:
    """Rank items by descending score.

    ``rank-share`` keeps tied items in input order and gives each the mean
    rank of its block. ``random`` shuffles tied blocks with a seeded RNG and
    gives every item its own position as rank.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    if np.isnan(s).any():
        raise InputError("NaN score")
    if np.isinf(s).any():
        raise InputError("infinite score")
    if tie_policy not in TIE_POLICIES:
        raise InputError(f"unknown tie policy {tie_policy!r}; expected one of {TIE_POLICIES}")
    n = s.shape[0]
    if tie_policy == "rank-share":
        order = np.argsort(-s, kind="stable")
        eff = np.empty(n)
        sorted_s = s[order]
        # block boundaries over the descending sequence
        new_block = np.empty(n, dtype=bool)
        if n:
            new_block[0] = True
            new_block[1:] = sorted_s[1:] != sorted_s[:-1]
        starts = np.flatnonzero(new_block)
        ends = np.append(starts[1:], n)
        for a, b in zip(starts, ends):
            eff[order[a:b]] = (a + 1 + b) / 2.0
    else:
        rng = np.random.default_rng(seed)
        order = np.lexsort((rng.random(n), -s))
        eff = np.empty(n)
        eff[order] = np.arange(1, n + 1, dtype=np.float64)
    return Ranking(order=_readonly(order), effective_rank=_readonly(eff),
                   tie_policy=tie_policy, scores=_readonly(s))


@dataclass(frozen=True)
class UtilityFn:
    """Position utility ``u(rank)``: ``rank**-w`` or ``1 / log2(1 + rank)``."""

    kind: str = "power"
    w: float = 0.65

    def __post_init__(self):
        if self.kind not in ("power", "log"):
            raise InputError(f"unknown utility {self.kind!r}")
        if self.kind == "power" and not (self.w >= 0 and math.isfinite(self.w)):
            raise InputError("utility exponent w must be >= 0")

    def value(self, r: float) -> float:
        if r < 1:
            raise InputError(f"rank must be >= 1, got {r}")
        if self.kind == "power":
            return math.pow(r, -self.w)
        return 1.0 / math.log2(1.0 + r)

    def __call__(self, ranks) -> np.ndarray:
        # scalar math keeps results bit-identical with per-item enumeration
        arr = np.asarray(ranks, dtype=np.float64)
        cache: dict[float, float] = {}
        out = np.empty(arr.shape)
        flat = out.reshape(-1)
        for i, r in enumerate(arr.reshape(-1).tolist()):
            v = cache.get(r)
            if v is None:
                v = cache[r] = self.value(r)
            flat[i] = v
        return out

    def describe(self) -> str:
        return f"power(w={self.w:g})" if self.kind == "power" else "log-discount"


@dataclass(frozen=True)
class Fix:
    method: str = "none"
    p: float | None = None

    def __post_init__(self):
        if self.method not in FIX_METHODS:
            raise InputError(f"unknown fix method {self.method!r}; expected one of {FIX_METHODS}")
        if self.method == "constant-p":
            if self.p is None or not (0.0 < self.p < 1.0):
                raise InputError(f"constant-p needs 0 < p < 1, got {self.p}")

    def __str__(self) -> str:
        return f"{self.method}(p={self.p:g})" if self.method == "constant-p" else self.method


@dataclass(frozen=True)
class FixConfig:
    """Which fix applies to which component.

    Components absent from ``fixes`` are left alone. ``reference_group`` is the
    group whose distribution is kept (defaults to the dataset's group A).
    """

    fixes: Mapping[int, Fix] = field(default_factory=dict)
    reference_group: str | None = None
    positivity_shift: bool = False
    tie_order: str = "input"
    seed: int | None = None

    def __post_init__(self):
        clean = {}
        for k, f in dict(self.fixes).items():
            if not isinstance(f, Fix):
                f = Fix(f)
            clean[int(k)] = f
        object.__setattr__(self, "fixes", dict(sorted(clean.items())))
        if self.tie_order not in ("input", "random"):
            raise InputError(f"unknown tie order {self.tie_order!r}")

    @classmethod
    def uniform(cls, n_components: int, method: str, p: float | None = None, **kw) -> "FixConfig":
        return cls({k: Fix(method, p) for k in range(n_components)}, **kw)

    def get(self, k: int) -> Fix:
        return self.fixes.get(k, Fix("none"))

    def validate(self, dataset: ScoredDataset) -> None:
        for k, f in self.fixes.items():
            dataset.component(k)
            if f.method in LABELED_METHODS and not dataset.has_labels:
                raise InputError(f"fix {f.method} on component {k} requires labels")
        if self.reference_group is not None:
            dataset.mask(self.reference_group)

    def describe(self, names: Sequence[str] | None = None) -> str:
        parts = []
        for k, f in self.fixes.items():
            label = names[k] if names else str(k)
            parts.append(f"{label}={f}")
        return ",".join(parts) or "none"


ItemId = Hashable
