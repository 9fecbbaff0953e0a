"""Fairness auditing for ranking systems whose score is a product of components."""

from .core import (
    Fix,
    FixConfig,
    FairchainError,
    InputError,
    Ranking,
    ScoredDataset,
    UtilityFn,
    compose,
    rank,
)
from .counterfactual import (
    CounterfactualSpec,
    HeadroomTable,
    fairness_improvement,
    headroom_sweep,
    improved_system,
)
from .fixes import (
    FixedComponent,
    apply_fix,
    conditional_match,
    constant_p,
    delta_match,
    marginal_match,
    normalize,
)
from .metrics import (
    ExposureReport,
    GapCurve,
    PairwiseReport,
    exposure,
    exposure_gap,
    gap_curve,
    pairwise_accuracy,
    pairwise_gap,
    random_order_reference,
    score_exposure_gap,
)

__version__ = "0.1.0"
