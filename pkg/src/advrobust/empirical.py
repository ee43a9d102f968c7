"""Exact optimal adversarial risk for empirical measures.

Two opposite-label points conflict when their open epsilon-balls overlap,
i.e. when d(x_i, x_j) < 2*epsilon; any classifier must sacrifice at least
one endpoint of every conflict, and sacrificing a minimum-mass vertex cover
of the bipartite conflict graph is achievable.  The optimum is therefore a
min-weight vertex cover, computed exactly as a max-flow, with the max
fractional matching as the matching lower bound (Koenig duality) and the
label-swap optimal transport value as an independent certificate.

All flow arithmetic is exact: masses are scaled to integers when their
least common denominator stays below 10**9 and kept as rationals otherwise,
so the reported dualities hold with zero tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ._maxflow import MaxFlow
from .core import (
    EmpiricalDataset,
    InputError,
    InternalError,
    MetricSpec,
    distance,
    exact_masses,
    neighbor_pairs,
)
from .functionals import BallUnionClassifier

__all__ = [
    "ConflictGraph",
    "CoverCertificate",
    "PathEntry",
    "PathReport",
    "build_conflict_graph",
    "optimal_risk",
    "build_classifier",
    "ot_dual_value",
    "sweep_epsilon",
    "save_certificate",
    "save_classifier",
    "save_path_report",
]

_INT_SCALE_LIMIT = 10**9


# ---------------------------------------------------------------------------
# Conflict graph
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConflictGraph:
    """Bipartite graph of cross-label conflicts at radius 2*epsilon.

    Nodes are dataset indices (label-0 on the left, label-1 on the right)
    with their masses; edges join pairs with d < 2*epsilon strictly, except
    at epsilon = 0 where only coincident opposite-label points conflict
    (the zero-radius ball is the point itself, so a shared location forces
    a loss either way).
    """

    left: tuple[int, ...]
    right: tuple[int, ...]
    left_masses: tuple[float, ...]
    right_masses: tuple[float, ...]
    edges: tuple[tuple[int, int], ...]
    epsilon: float

    @property
    def n_edges(self) -> int:
        return len(self.edges)


def build_conflict_graph(
    ds: EmpiricalDataset, epsilon: float, metric: MetricSpec = MetricSpec(2.0)
) -> ConflictGraph:
    if epsilon < 0.0:
        raise InputError("epsilon must be >= 0")
    pairs = neighbor_pairs(ds.points, 2.0 * epsilon, metric)
    edges = []
    for i, j in pairs:
        if ds.labels[i] == ds.labels[j]:
            continue
        a, b = (i, j) if ds.labels[i] == 0 else (j, i)
        edges.append((a, b))
    edges.sort()
    left = ds.indices_with_label(0)
    right = ds.indices_with_label(1)
    return ConflictGraph(
        left=left,
        right=right,
        left_masses=tuple(ds.masses[i] for i in left),
        right_masses=tuple(ds.masses[i] for i in right),
        edges=tuple(edges),
        epsilon=float(epsilon),
    )


# ---------------------------------------------------------------------------
# Exact capacities
# ---------------------------------------------------------------------------


def _flow_masses(fracs: Sequence[Fraction]) -> tuple[list, object]:
    """Masses as exact flow capacities plus the matching value unit.

    Returns (capacities, unit) where value_in_mass = flow_value * unit;
    integer fast path when the common denominator is small, rationals
    otherwise.
    """
    lcm = 1
    for f in fracs:
        lcm = math.lcm(lcm, f.denominator)
        if lcm > _INT_SCALE_LIMIT:
            return list(fracs), Fraction(1)
    return [int(f * lcm) for f in fracs], Fraction(1, lcm)


# ---------------------------------------------------------------------------
# Optimal risk via min-weight vertex cover
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoverCertificate:
    """A minimum-mass vertex cover with its matching-dual value.

    ``cover`` holds dataset indices touching every conflict edge;
    ``cover_value`` (its mass) equals ``matching_value`` (the max-flow /
    fractional matching mass) by Koenig duality, and both equal the optimal
    adversarial risk.
    """

    cover: tuple[int, ...]
    matching_value: float
    cover_value: float
    epsilon: float


def _solve_cover(
    ds: EmpiricalDataset, graph: ConflictGraph
) -> tuple[Fraction, tuple[int, ...]]:
    fracs = exact_masses(ds)
    caps, unit = _flow_masses(fracs)
    left_pos = {i: k for k, i in enumerate(graph.left)}
    right_pos = {j: k for k, j in enumerate(graph.right)}
    n_nodes = 2 + len(graph.left) + len(graph.right)
    source, sink = 0, 1
    node_l = lambda k: 2 + k
    node_r = lambda k: 2 + len(graph.left) + k

    flow = MaxFlow(n_nodes)
    caps_in_graph = [caps[i] for i in graph.left] + [caps[j] for j in graph.right]
    infinite = sum(caps_in_graph, type(caps[0])(0)) + 1
    for k, i in enumerate(graph.left):
        flow.add_edge(source, node_l(k), caps[i])
    for k, j in enumerate(graph.right):
        flow.add_edge(node_r(k), sink, caps[j])
    for i, j in graph.edges:
        flow.add_edge(node_l(left_pos[i]), node_r(right_pos[j]), infinite)

    value = flow.max_flow(source, sink) * unit
    reach = flow.reachable_from(source)
    cover = [i for k, i in enumerate(graph.left) if not reach[node_l(k)]]
    cover += [j for k, j in enumerate(graph.right) if reach[node_r(k)]]
    cover.sort()

    cover_set = set(cover)
    for i, j in graph.edges:
        if i not in cover_set and j not in cover_set:
            raise InternalError(f"extracted cover misses edge ({i}, {j})")
    cover_value = sum((fracs[i] for i in cover), Fraction(0))
    if cover_value != value:
        raise InternalError(
            f"duality violated: cover mass {cover_value} != flow value {value}"
        )
    return value, tuple(cover)


def optimal_risk(
    ds: EmpiricalDataset, epsilon: float, metric: MetricSpec = MetricSpec(2.0)
) -> tuple[float, CoverCertificate]:
    """Minimum adversarial risk over all classifiers, with certificate."""
    graph = build_conflict_graph(ds, epsilon, metric)
    value, cover = _solve_cover(ds, graph)
    cert = CoverCertificate(
        cover=cover,
        matching_value=float(value),
        cover_value=float(value),
        epsilon=float(epsilon),
    )
    return float(value), cert


def build_classifier(
    ds: EmpiricalDataset,
    cert: CoverCertificate,
    epsilon: float,
    metric: MetricSpec = MetricSpec(2.0),
) -> BallUnionClassifier:
    """Optimal classifier realizing the certificate: the union of
    epsilon-balls around the label-1 points kept out of the cover."""
    cover = set(cert.cover)
    centers = tuple(
        ds.points[j] for j in ds.indices_with_label(1) if j not in cover
    )
    radii = tuple([float(epsilon)] * len(centers))
    return BallUnionClassifier(centers, radii, metric)


# ---------------------------------------------------------------------------
# Optimal transport dual
# ---------------------------------------------------------------------------


def ot_dual_value(
    ds: EmpiricalDataset, epsilon: float, metric: MetricSpec = MetricSpec(2.0)
) -> float:
    """Optimal adversarial risk through the label-swap transport problem.

    Couple the measure with its label-swapped copy under the 0-1 cost that
    is free exactly on conflict pairs; the risk equals one half minus half
    the optimal transport cost.  Computed by maximizing the zero-cost
    transported mass with a max-flow over both orientations of the conflict
    edges.
    """
    graph = build_conflict_graph(ds, epsilon, metric)
    fracs = exact_masses(ds)
    caps, unit = _flow_masses(fracs)
    n = ds.n
    source, sink = 0, 1
    node_mu = lambda i: 2 + i
    node_sw = lambda i: 2 + n + i

    flow = MaxFlow(2 + 2 * n)
    infinite = sum(caps, type(caps[0])(0)) + 1
    for i in range(n):
        flow.add_edge(source, node_mu(i), caps[i])
        flow.add_edge(node_sw(i), sink, caps[i])
    for i, j in graph.edges:
        # Zero-cost pairs in both orientations: the swapped copy of the
        # opposite-label partner carries the matching displayed label.
        flow.add_edge(node_mu(i), node_sw(j), infinite)
        flow.add_edge(node_mu(j), node_sw(i), infinite)

    moved = flow.max_flow(source, sink) * unit
    cost = 1 - moved
    return float(Fraction(1, 2) - Fraction(1, 2) * cost)


# ---------------------------------------------------------------------------
# Epsilon sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathEntry:
    epsilon: float
    optimal_risk: float
    cover_size: int
    classifier: BallUnionClassifier


@dataclass(frozen=True)
class PathReport:
    """The solution path: per-epsilon optimal risk and classifier, with
    risk nondecreasing in epsilon and bounded by min(w0, w1)."""

    entries: tuple[PathEntry, ...]


def sweep_epsilon(
    ds: EmpiricalDataset,
    epsilons: Sequence[float],
    metric: MetricSpec = MetricSpec(2.0),
) -> PathReport:
    eps = [float(e) for e in epsilons]
    if any(b < a for a, b in zip(eps, eps[1:])):
        raise InputError("epsilon list must be sorted ascending")
    bound = min(ds.w0, ds.w1)
    entries = []
    previous = -math.inf
    for e in eps:
        risk, cert = optimal_risk(ds, e, metric)
        if risk < previous:
            raise InternalError(
                f"optimal risk decreased along the sweep at epsilon={e}"
            )
        if risk > bound + 1e-12:
            raise InternalError(
                f"optimal risk {risk} exceeds the trivial bound {bound}"
            )
        previous = risk
        entries.append(
            PathEntry(
                epsilon=e,
                optimal_risk=risk,
                cover_size=len(cert.cover),
                classifier=build_classifier(ds, cert, e, metric),
            )
        )
    return PathReport(tuple(entries))


# ---------------------------------------------------------------------------
# Serialization: one record per line "epsilon,risk,i1 i2 ..."; classifiers
# as one "c1,c2,...;radius" row per ball.
# ---------------------------------------------------------------------------


def save_certificate(path: str, cert: CoverCertificate) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        indices = " ".join(str(i) for i in cert.cover)
        fh.write(f"{cert.epsilon!r},{cert.cover_value!r},{indices}\n")


def save_path_report(path: str, report: PathReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in report.entries:
            fh.write(
                f"{entry.epsilon!r},{entry.optimal_risk!r},cover_size={entry.cover_size}\n"
            )


def save_classifier(path: str, A: BallUnionClassifier) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c, r in zip(A.centers, A.radii):
            fh.write(",".join(repr(v) for v in c) + f";{r!r}\n")
