"""Independent brute-force references for desk-scale certification.

Every oracle reimplements its objective directly from the worst-case-risk
definition (per-point double loops over candidate attacks, exhaustive
enumeration of sets, exact rational arithmetic on scaled integer masses)
and shares no evaluation logic with the solvers it certifies; only plain
data plumbing (types, metric, exact mass conversion) is reused.  These are
test infrastructure, not public API, and have no performance targets.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .core import (
    BallStencil,
    EmpiricalDataset,
    GridMeasure,
    InputError,
    MetricSpec,
    distance,
    exact_masses,
)
from .functionals import ClassifierMask

__all__ = [
    "brute_force_grid",
    "brute_force_empirical",
    "brute_force_coupling",
    "brute_force_decision",
]

_GRID_CELL_LIMIT = 22
_EMPIRICAL_LIMIT = 20
_COUPLING_POINT_LIMIT = 8
_COUPLING_ATOM_LIMIT = 10
_DECISION_LIMIT = 16


# ---------------------------------------------------------------------------
# Grid enumeration
# ---------------------------------------------------------------------------


def brute_force_grid(
    gm: GridMeasure, stencil: BallStencil, scale: int = 12
) -> tuple[Fraction, list[ClassifierMask]]:
    """Exhaustive minimum of the grid adversarial risk over all 2^cells
    masks, with the full optimum set.

    Densities are quantized at 10**-scale exactly like the solver, so
    values compare exactly.  Cell balls are recomputed here from raw
    center-to-center distances, independent of the stencil offsets.
    """
    count = gm.cell_count
    if count > _GRID_CELL_LIMIT:
        raise InputError(
            f"brute force enumerates 2^cells masks; {count} cells exceed the "
            f"{_GRID_CELL_LIMIT}-cell limit"
        )
    eps = stencil.epsilon
    metric = stencil.metric
    centers = [gm.cell_center(idx) for idx in np.ndindex(*gm.dims)]
    balls = []
    for x in range(count):
        if eps == 0.0:
            balls.append(1 << x)
            continue
        bits = 0
        for y in range(count):
            if distance(metric, centers[x], centers[y]) < eps:
                bits |= 1 << y
        balls.append(bits)

    factor = 10**scale
    dens0 = [int(round(v * factor)) for v in gm.dens0.ravel().tolist()]
    dens1 = [int(round(v * factor)) for v in gm.dens1.ravel().tolist()]

    masks = np.arange(1 << count, dtype=np.int64)
    values = np.zeros(1 << count, dtype=np.int64)
    for x in range(count):
        ball = balls[x]
        hit = (masks & ball) != 0
        unsafe = (masks & ball) != ball
        if dens0[x]:
            values += dens0[x] * hit
        if dens1[x]:
            values += dens1[x] * unsafe

    best = int(values.min())
    optima = np.nonzero(values == best)[0]
    out = []
    for m in optima.tolist():
        bits = np.array(
            [(m >> x) & 1 == 1 for x in range(count)], dtype=bool
        ).reshape(gm.dims)
        out.append(ClassifierMask.from_bits(gm, bits))
    return Fraction(best, factor), out


# ---------------------------------------------------------------------------
# Empirical sacrifice sets
# ---------------------------------------------------------------------------


def _conflict_pairs_direct(
    ds: EmpiricalDataset, epsilon: float, metric: MetricSpec
) -> list[tuple[int, int]]:
    pairs = []
    for i in range(ds.n):
        for j in range(i + 1, ds.n):
            if ds.labels[i] == ds.labels[j]:
                continue
            d = distance(metric, ds.points[i], ds.points[j])
            if (d == 0.0) if epsilon == 0.0 else (d < 2.0 * epsilon):
                pairs.append((i, j))
    return pairs


def brute_force_empirical(
    ds: EmpiricalDataset, epsilon: float, metric: MetricSpec = MetricSpec(2.0)
) -> tuple[Fraction, list[tuple[int, ...]]]:
    """Minimum total mass over point subsets covering every conflict pair,
    with all minimum-mass sacrifice sets, by enumeration of all 2^N subsets."""
    n = ds.n
    if n > _EMPIRICAL_LIMIT:
        raise InputError(
            f"brute force enumerates 2^N subsets; N={n} exceeds {_EMPIRICAL_LIMIT}"
        )
    pairs = _conflict_pairs_direct(ds, epsilon, metric)
    fracs = exact_masses(ds)
    lcm = 1
    for f in fracs:
        lcm = math.lcm(lcm, f.denominator)
    weights = [int(f * lcm) for f in fracs]

    total = 1 << n
    feasible = np.ones(total, dtype=bool)
    masks = np.arange(total, dtype=np.int64)
    for i, j in pairs:
        pair_mask = (1 << i) | (1 << j)
        feasible &= (masks & pair_mask) != 0

    values = [0] * total
    for m in range(1, total):
        low = m & (-m)
        values[m] = values[m ^ low] + weights[low.bit_length() - 1]

    best = None
    argmins: list[int] = []
    feasible_list = feasible.tolist()
    for m in range(total):
        if not feasible_list[m]:
            continue
        v = values[m]
        if best is None or v < best:
            best = v
            argmins = [m]
        elif v == best:
            argmins.append(m)
    assert best is not None  # the full set always covers
    sets = [tuple(i for i in range(n) if (m >> i) & 1) for m in argmins]
    return Fraction(best, lcm), sets


# ---------------------------------------------------------------------------
# Transport couplings
# ---------------------------------------------------------------------------


def brute_force_coupling(
    ds: EmpiricalDataset, epsilon: float, metric: MetricSpec = MetricSpec(2.0)
) -> Fraction:
    """Optimal adversarial risk through exhaustive transport assignment.

    Masses are scaled to unit atoms on their common denominator and the
    optimal coupling with the label-swapped copy is found by dynamic
    programming over all atom assignments (the extreme points of the scaled
    transportation polytope); the risk is 1/2 - 1/2 times the minimal cost.
    """
    if ds.n > _COUPLING_POINT_LIMIT:
        raise InputError(
            f"coupling enumeration needs N <= {_COUPLING_POINT_LIMIT}, got {ds.n}"
        )
    fracs = exact_masses(ds)
    lcm = 1
    for f in fracs:
        lcm = math.lcm(lcm, f.denominator)
    if lcm > _COUPLING_ATOM_LIMIT:
        raise InputError(
            f"coupling enumeration needs masses on a common denominator "
            f"<= {_COUPLING_ATOM_LIMIT}, got {lcm}"
        )
    atoms = []  # point index per unit atom
    for i, f in enumerate(fracs):
        atoms.extend([i] * int(f * lcm))
    t = len(atoms)

    def cost(a: int, b: int) -> int:
        # mu atom a against swapped-copy atom b: free iff the displayed
        # labels agree (original labels differ) and the features conflict.
        i, j = atoms[a], atoms[b]
        if ds.labels[i] == ds.labels[j]:
            return 1
        d = distance(metric, ds.points[i], ds.points[j])
        close = (d == 0.0) if epsilon == 0.0 else (d < 2.0 * epsilon)
        return 0 if close else 1

    size = 1 << t
    infinity = t + 1
    dp = [infinity] * size
    dp[0] = 0
    for mask in range(size):
        here = dp[mask]
        if here >= infinity:
            continue
        k = mask.bit_count()
        if k == t:
            continue
        for b in range(t):
            if not (mask >> b) & 1:
                nxt = mask | (1 << b)
                c = here + cost(k, b)
                if c < dp[nxt]:
                    dp[nxt] = c
    transport_cost = Fraction(dp[size - 1], t)
    return Fraction(1, 2) - Fraction(1, 2) * transport_cost


# ---------------------------------------------------------------------------
# Decision-model enumeration
# ---------------------------------------------------------------------------


def brute_force_decision(ds: EmpiricalDataset, kernel) -> tuple[Fraction, tuple[int, ...]]:
    """Exhaustive minimum of the random-perturbation-with-decision objective
    over all 2^N labelings, evaluated straight from the model: a proposed
    jump is accepted only when it worsens the classification.

    Returns the exact optimal value and the first optimal labeling in mask
    order.
    """
    n = ds.n
    if n > _DECISION_LIMIT:
        raise InputError(
            f"decision enumeration needs N <= {_DECISION_LIMIT}, got {n}"
        )
    fracs = exact_masses(ds)
    # Row-normalized jump weights, recomputed from the kernel directly.
    rows: list[list[tuple[int, Fraction]]] = []
    for i in range(n):
        raw = [
            (j, Fraction(kernel.weight(ds.points[i], ds.points[j])))
            for j in range(n)
        ]
        raw = [(j, w) for j, w in raw if w > 0]
        total = sum((w for _, w in raw), Fraction(0))
        rows.append([(j, w / total) for j, w in raw] if total else [])

    pair_costs: list[tuple[int, int, Fraction]] = []  # (i, j, mass * weight)
    for i in range(n):
        for j, w in rows[i]:
            if i != j and w > 0:
                pair_costs.append((i, j, fracs[i] * w))

    denom = 1
    for f in fracs:
        denom = math.lcm(denom, f.denominator)
    for _, _, c in pair_costs:
        denom = math.lcm(denom, c.denominator)
    if denom * (n + 1) >= 2**62:
        raise InputError(
            "decision enumeration needs masses and kernel weights with a "
            "small common denominator"
        )

    masks = np.arange(1 << n, dtype=np.int64)
    u = [((masks >> i) & 1).astype(bool) for i in range(n)]
    values = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        unit = int(fracs[i] * denom)
        values += unit * (u[i] if ds.labels[i] == 0 else ~u[i])
    for i, j, c in pair_costs:
        unit = int(c * denom)
        if ds.labels[i] == 0:
            values += unit * (u[j] & ~u[i])  # accepted upward jump
        else:
            values += unit * (u[i] & ~u[j])  # accepted downward jump

    best_mask = int(values.argmin())
    best = Fraction(int(values[best_mask]), denom)
    labels = tuple((best_mask >> i) & 1 for i in range(n))
    return best, labels
