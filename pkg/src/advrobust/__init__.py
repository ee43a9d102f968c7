"""Optimal adversarially robust binary classifiers.

Adversarial training of a set classifier equals plain risk minimization
regularized by a nonlocal, data-weighted perimeter of the decision
boundary.  That structure makes the optimum exactly computable at desk
scale: a min-weight bipartite vertex cover for empirical point clouds and
an s-t min cut of a submodular coverage energy for gridded measures, each
with independent duality certificates (Koenig matching, optimal transport
against the label-swapped measure) and with canonical minimal and maximal
optimal sets.
"""

from .altmodels import (
    DecisionSolution,
    KernelSpec,
    decision_tv,
    graph_tv,
    smooth_bayes,
    solve_decision_model,
)
from .core import (
    BallStencil,
    EmpiricalDataset,
    GridMeasure,
    InputError,
    InternalError,
    MetricSpec,
    NormalizationWarning,
    ParseError,
    ball_stencil,
    distance,
    load_dataset,
    load_grid,
    neighbor_pairs,
    save_dataset,
    save_grid,
)
from .empirical import (
    ConflictGraph,
    CoverCertificate,
    PathEntry,
    PathReport,
    build_classifier,
    build_conflict_graph,
    optimal_risk,
    ot_dual_value,
    sweep_epsilon,
)
from .functionals import (
    BallUnionClassifier,
    ClassifierMask,
    RiskBreakdown,
    ScalarField,
    adversarial_risk_empirical,
    adversarial_risk_grid,
    coarea_tv,
    empirical_risk_grid,
    morphological_risk,
    pre_perimeter_grid,
    pre_tv_grid,
    risk_breakdown_empirical,
    risk_breakdown_grid,
)
from .graphcut import (
    CutEnergy,
    CutSolution,
    ThresholdGapReport,
    assemble_energy,
    solve_mincut,
    sweep_grid,
    threshold_gap_check,
)
from .morphology import (
    closing,
    dilate,
    dilate_ball_union,
    erode,
    load_mask,
    opening,
    save_mask,
)

__version__ = "0.1.0"
