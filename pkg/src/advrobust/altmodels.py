"""Perturbation models that stay of L1 + nonlocal-TV form.

Three variants: the graph total variation on point clouds (pairwise kernel
penalty), the random-perturbation-with-adversarial-decision model whose
penalty uses one-sided positive parts and still minimizes exactly by
min-cut, and the pure random perturbation, which is no adversary at all --
it only replaces the class densities by their kernel smoothings, so the
optimal set is the smoothed Bayes classifier.

Kernel rows are restricted to the dataset points (a random walk on the
data) and row-normalized; isolated points with an all-zero kernel row are
skipped and reported.  The random-walk weights make epsilon cancel between
the penalty weight and the 1/epsilon normalization, so the solved objective
is exactly empirical risk plus the pairwise one-sided costs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._maxflow import MaxFlow
from .core import (
    EmpiricalDataset,
    GridMeasure,
    InputError,
    MetricSpec,
    distance,
    exact_masses,
    offset_slices,
)
from .functionals import ClassifierMask

__all__ = [
    "KernelSpec",
    "DecisionSolution",
    "graph_tv",
    "decision_weights",
    "decision_tv",
    "solve_decision_model",
    "smooth_bayes",
]

_KINDS = ("indicator-ball", "gaussian")
_GAUSSIAN_CUTOFF = 3.0  # truncation radius in bandwidths for grid smoothing


@dataclass(frozen=True)
class KernelSpec:
    """A nonnegative perturbation kernel: the indicator of the open
    epsilon-ball, or a Gaussian with bandwidth epsilon."""

    kind: str
    epsilon: float
    metric: MetricSpec = MetricSpec(2.0)

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise InputError(f"kernel kind must be one of {_KINDS}, got {self.kind!r}")
        if not (self.epsilon > 0.0):
            raise InputError("kernel epsilon must be positive")

    def weight(self, x: Sequence[float], y: Sequence[float]) -> float:
        d = distance(self.metric, x, y)
        if self.kind == "indicator-ball":
            return 1.0 if d < self.epsilon else 0.0
        return math.exp(-((d / self.epsilon) ** 2))


def graph_tv(
    u: Sequence[float], ds: EmpiricalDataset, kernel: KernelSpec
) -> float:
    """Graph total variation: the unnormalized double sum
    (1/eps) * sum_ij kernel(x_i, x_j) * |u_i - u_j| over all point pairs."""
    if len(u) != ds.n:
        raise InputError(f"field length {len(u)} != dataset size {ds.n}")
    terms = []
    for i in range(ds.n):
        for j in range(ds.n):
            if i == j:
                continue
            w = kernel.weight(ds.points[i], ds.points[j])
            if w != 0.0:
                terms.append(w * abs(u[i] - u[j]))
    return math.fsum(terms) / kernel.epsilon


def decision_weights(
    ds: EmpiricalDataset, kernel: KernelSpec
) -> tuple[list[list[tuple[int, Fraction]]], tuple[int, ...]]:
    """Row-normalized random-walk weights on the dataset points.

    Row i holds (j, weight) pairs summing to 1; rows whose kernel mass is
    zero are returned empty and their indices reported as skipped.
    """
    rows: list[list[tuple[int, Fraction]]] = []
    skipped = []
    for i in range(ds.n):
        raw = [
            (j, Fraction(kernel.weight(ds.points[i], ds.points[j])))
            for j in range(ds.n)
        ]
        raw = [(j, w) for j, w in raw if w > 0]
        total = sum((w for _, w in raw), Fraction(0))
        if total == 0:
            rows.append([])
            skipped.append(i)
            continue
        rows.append([(j, w / total) for j, w in raw])
    return rows, tuple(skipped)


def _decision_tv_exact(
    u: Sequence[Fraction],
    ds: EmpiricalDataset,
    rows: list[list[tuple[int, Fraction]]],
    epsilon: Fraction,
) -> Fraction:
    fracs = exact_masses(ds)
    total = Fraction(0)
    for i in range(ds.n):
        for j, w in rows[i]:
            gap = (u[j] - u[i]) if ds.labels[i] == 0 else (u[i] - u[j])
            if gap > 0:
                total += fracs[i] * w * gap
    return total / epsilon


def decision_tv(
    u: Sequence[float], ds: EmpiricalDataset, kernel: KernelSpec
) -> float:
    """Total variation of the decision model: one-sided gaps (u(xi) - u(x))+
    under the random-walk weights, charged upward for label-0 mass and
    downward for label-1 mass, over epsilon."""
    if len(u) != ds.n:
        raise InputError(f"field length {len(u)} != dataset size {ds.n}")
    rows, _ = decision_weights(ds, kernel)
    value = _decision_tv_exact(
        [Fraction(v) for v in u], ds, rows, Fraction(kernel.epsilon)
    )
    return float(value)


@dataclass(frozen=True)
class DecisionSolution:
    """Binary labels minimizing empirical risk + epsilon * decision TV."""

    labels: tuple[int, ...]
    value: float
    value_exact: Fraction
    skipped_rows: tuple[int, ...]


def solve_decision_model(
    ds: EmpiricalDataset, kernel: KernelSpec
) -> DecisionSolution:
    """Exact minimizer of the decision model by pairwise min-cut.

    Every penalty term is a directed positive part c * (u_a - u_b)+, so the
    objective is submodular; epsilon cancels against the row weights and
    the cut network needs only mass unaries and pairwise arcs.
    """
    fracs = exact_masses(ds)
    rows, skipped = decision_weights(ds, kernel)
    source, sink = 0, 1
    node = lambda i: 2 + i
    flow = MaxFlow(2 + ds.n)
    for i in range(ds.n):
        if ds.labels[i] == 0:
            flow.add_edge(node(i), sink, fracs[i])  # charged when u_i = 1
        else:
            flow.add_edge(source, node(i), fracs[i])  # charged when u_i = 0
    for i in range(ds.n):
        for j, w in rows[i]:
            if i == j:
                continue
            c = fracs[i] * w
            if c == 0:
                continue
            if ds.labels[i] == 0:
                flow.add_edge(node(j), node(i), c)  # (u_j - u_i)+
            else:
                flow.add_edge(node(i), node(j), c)  # (u_i - u_j)+
    value = flow.max_flow(source, sink)
    if not isinstance(value, Fraction):
        value = Fraction(value)
    reach = flow.reachable_from(source)
    labels = tuple(1 if reach[node(i)] else 0 for i in range(ds.n))
    return DecisionSolution(
        labels=labels,
        value=float(value),
        value_exact=value,
        skipped_rows=skipped,
    )


# ---------------------------------------------------------------------------
# Pure random perturbation: smoothed Bayes
# ---------------------------------------------------------------------------


def _grid_kernel_offsets(
    gm: GridMeasure, kernel: KernelSpec
) -> list[tuple[tuple[int, ...], float]]:
    cutoff = (
        kernel.epsilon
        if kernel.kind == "indicator-ball"
        else _GAUSSIAN_CUTOFF * kernel.epsilon
    )
    d = gm.ndim
    zero = tuple([0] * d)
    bounds = [
        min(int(math.ceil(cutoff / gm.spacing[a])), gm.dims[a] - 1) for a in range(d)
    ]
    offsets = []
    for off in np.ndindex(*[2 * b + 1 for b in bounds]):
        o = tuple(off[a] - bounds[a] for a in range(d))
        disp = tuple(o[a] * gm.spacing[a] for a in range(d))
        if distance(kernel.metric, zero, disp) >= cutoff:
            continue
        w = kernel.weight(zero, disp)
        if w > 0.0:
            offsets.append((o, w))
    offsets.sort()
    return offsets


def smooth_bayes(gm: GridMeasure, kernel: KernelSpec) -> ClassifierMask:
    """Bayes classifier of the kernel-smoothed measure.

    Each cell's mass is spread over its in-domain kernel footprint with the
    footprint renormalized at the boundary, which conserves total mass on
    the truncated domain; the mask keeps cells where the smoothed label-1
    mass strictly exceeds the smoothed label-0 mass (ties go out of A, as
    in the grid solver).
    """
    offsets = _grid_kernel_offsets(gm, kernel)
    norm = np.zeros(gm.dims, dtype=np.float64)
    for off, w in offsets:
        sl = offset_slices(gm.dims, off)
        if sl is not None:
            dst, _ = sl
            norm[dst] += w
    out0 = np.zeros(gm.dims, dtype=np.float64)
    out1 = np.zeros(gm.dims, dtype=np.float64)
    for off, w in offsets:
        sl = offset_slices(gm.dims, off)
        if sl is None:
            continue
        dst, src = sl
        out0[src] += gm.dens0[dst] * w / norm[dst]
        out1[src] += gm.dens1[dst] * w / norm[dst]
    return ClassifierMask.from_bits(gm, out1 > out0)
