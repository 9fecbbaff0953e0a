"""Seeded synthetic datasets and small hand-built fixtures.

Gaussian draws go through the inverse normal CDF applied to a PCG64 uniform
stream, so a given seed yields the same numbers on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .core import InputError, ScoredDataset

_TWO53 = float(2**53)


def standard_normals(rng: np.random.Generator, size) -> np.ndarray:
    """Standard normal draws by inversion of uniforms strictly inside (0, 1)."""
    u = (rng.integers(0, 2**53, size=size, dtype=np.int64) + 0.5) / _TWO53
    return ndtri(u)


@dataclass(frozen=True)
class GaussianSpec:
    """Per-(group, component) normal parameters for a two-component dataset.

    With ``anti_correlated_mean`` set, group B's component 0 is drawn as
    ``N(anti_correlated_mean, sd_b[0]) - f1``.
    """

    mean_a: tuple[float, float] = (10.0, 5.0)
    sd_a: tuple[float, float] = (0.5, 0.5)
    mean_b: tuple[float, float] = (9.0, 4.0)
    sd_b: tuple[float, float] = (0.5, 0.1)
    anti_correlated_mean: float | None = None
    n: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise InputError("n must be >= 1")
        if min(self.sd_a + self.sd_b) <= 0:
            raise InputError("standard deviations must be positive")

    def generate(self) -> ScoredDataset:
        n = self.n
        # fixed draw order: A f0, A f1, B f1, B f0 noise; shared by both datasets
        z = standard_normals(np.random.Generator(np.random.PCG64(self.seed)), (4, n))
        a0 = self.mean_a[0] + self.sd_a[0] * z[0]
        a1 = self.mean_a[1] + self.sd_a[1] * z[1]
        b1 = self.mean_b[1] + self.sd_b[1] * z[2]
        if self.anti_correlated_mean is None:
            b0 = self.mean_b[0] + self.sd_b[0] * z[3]
        else:
            b0 = (self.anti_correlated_mean + self.sd_b[0] * z[3]) - b1
        ids = [f"a{i}" for i in range(n)] + [f"b{i}" for i in range(n)]
        return ScoredDataset(
            ids=ids,
            groups=["A"] * n + ["B"] * n,
            scores=np.column_stack([np.concatenate([a0, b0]), np.concatenate([a1, b1])]),
            component_names=("f0", "f1"),
            group_order=("A", "B"),
        )


def gen_synthetic_1(n: int = 1000, seed: int = 0) -> ScoredDataset:
    """Independent Gaussian components; group A sits higher on both."""
    return GaussianSpec(n=n, seed=seed).generate()


def gen_synthetic_2(n: int = 1000, seed: int = 0) -> ScoredDataset:
    """As :func:`gen_synthetic_1` but B's f0 is ``N(13, 0.5) - f1``."""
    return GaussianSpec(anti_correlated_mean=13.0, n=n, seed=seed).generate()


def gen_labeled(n: int = 400, k: int = 3, seed: int = 0) -> ScoredDataset:
    """Positive scores with labels for pairwise experiments.

    Each component is log-normal; positives score higher than negatives, and
    group A's positives are separated less well than group B's, so the
    composite has a pairwise gap. ``n`` items per group, half of them positive.
    """
    if n < 2 or k < 1:
        raise InputError("need n >= 2 and k >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    labels = np.tile(np.arange(n) % 2, 2)
    group_b = np.repeat([0, 1], n)
    lift = np.where(group_b == 1, 0.6, 0.3)
    comps = []
    for j in range(k):
        z = standard_normals(rng, 2 * n)
        comps.append(np.exp(0.5 * z + labels * lift * (1 + 0.3 * j)))
    return ScoredDataset(
        ids=[f"x{i}" for i in range(2 * n)],
        groups=np.where(group_b == 1, "B", "A"),
        scores=np.column_stack(comps),
        labels=labels,
        component_names=tuple(f"f{j}" for j in range(k)),
        group_order=("A", "B"),
    )


def motivating_example() -> ScoredDataset:
    """Two book-ranking components, each fair alone, unfair when multiplied."""
    return ScoredDataset(
        ids=["book1", "book2", "book3", "book4"],
        groups=["non-white", "non-white", "white", "white"],
        scores=[[0.1, 0.4], [0.4, 0.1], [0.2, 0.3], [0.3, 0.2]],
        component_names=("pCTR", "pRating"),
        group_order=("white", "non-white"),
    )


def epsilon_example(a: float = 1.0, eps: float = 0.1) -> ScoredDataset:
    """Each component puts one A and one B item in its top two, yet both
    B items outrank both A items in the product."""
    if a <= 0 or eps <= 0:
        raise InputError("a and eps must be positive")
    return ScoredDataset(
        ids=["a1", "a2", "b1", "b2"],
        groups=["A", "A", "B", "B"],
        scores=[
            [a + eps, a + 4 * eps],
            [a + 4 * eps, a + eps],
            [a + 2 * eps, a + 3 * eps],
            [a + 3 * eps, a + 2 * eps],
        ],
        component_names=("f0", "f1"),
        group_order=("A", "B"),
    )


def normalization_failure() -> ScoredDataset:
    return ScoredDataset(
        ids=["a1", "a2", "b1", "b2"],
        groups=["A", "A", "B", "B"],
        scores=[[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]],
        component_names=("f0", "f1"),
        group_order=("A", "B"),
    )


def shifted_normalization() -> ScoredDataset:
    """Normalized scores of :func:`normalization_failure` shifted by +2."""
    return ScoredDataset(
        ids=["a1", "a2", "b1", "b2"],
        groups=["A", "A", "B", "B"],
        scores=[[1.0, 1.0], [3.0, 3.0], [1.0, 3.0], [3.0, 1.0]],
        component_names=("f0", "f1"),
        group_order=("A", "B"),
    )


def pairwise_example() -> ScoredDataset:
    """Two components fair on pairwise accuracy whose product is not."""
    rows = [
        # id, group, label, f0, f1
        ("a1_1", "A", 1, 1.0, 4.0),
        ("a1_2", "A", 1, 4.0, 1.0),
        ("b0_1", "B", 0, 2.0, 3.0),
        ("b0_2", "B", 0, 3.0, 2.0),
        ("b1_1", "B", 1, 1.0, 1.0),
        ("b1_2", "B", 1, 4.0, 4.0),
        ("a0_1", "A", 0, 2.0, 3.0),
        ("a0_2", "A", 0, 3.0, 2.0),
    ]
    return ScoredDataset(
        ids=[r[0] for r in rows],
        groups=[r[1] for r in rows],
        labels=[r[2] for r in rows],
        scores=[[r[3], r[4]] for r in rows],
        component_names=("f0", "f1"),
        group_order=("A", "B"),
    )


FIXTURES = {
    "motivating": motivating_example,
    "epsilon": epsilon_example,
    "normalization-failure": normalization_failure,
    "shifted": shifted_normalization,
    "pairwise": pairwise_example,
}


def fixtures() -> dict[str, ScoredDataset]:
    return {name: make() for name, make in FIXTURES.items()}
