"""Adversarial risk, nonlocal pre-perimeter, pre-total-variation and their
structural identities on grids and ball-union classifiers.

The adversarial risk of a set A charges a label-0 point whenever its open
epsilon-ball meets A and a label-1 point whenever its ball is not contained
in A.  Subtracting the plain 0-1 risk and dividing by epsilon yields the
nonlocal pre-perimeter, so the exact decomposition

    adversarial_risk = empirical_risk + epsilon * pre_perimeter

holds for every set; it is a library invariant, not an approximation.

All grid reductions accumulate with ``math.fsum`` (correctly rounded sums),
so evaluations that agree as boolean logic agree bit for bit, and set
monotonicity of risks is exact in floating point.  Empirical (point-cloud)
evaluations run in exact rational arithmetic internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .core import (
    BallStencil,
    EmpiricalDataset,
    GridMeasure,
    InputError,
    MetricSpec,
    distance,
    exact_masses,
    offset_slices,
)

__all__ = [
    "ClassifierMask",
    "ScalarField",
    "BallUnionClassifier",
    "RiskBreakdown",
    "empirical_risk_grid",
    "adversarial_risk_grid",
    "pre_perimeter_grid",
    "pre_tv_grid",
    "coarea_tv",
    "morphological_risk",
    "adversarial_risk_empirical",
    "empirical_risk_points",
    "risk_breakdown_grid",
    "risk_breakdown_empirical",
]


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


def _readonly_bool(arr: np.ndarray, dims: tuple[int, ...]) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=bool).reshape(dims)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class ClassifierMask:
    """A candidate set A on a grid: one boolean per cell (True = in A)."""

    grid: GridMeasure
    bits: np.ndarray

    def __post_init__(self) -> None:
        if tuple(self.bits.shape) != self.grid.dims:
            raise InputError(
                f"mask shape {self.bits.shape} != grid dims {self.grid.dims}"
            )

    @classmethod
    def from_bits(cls, grid: GridMeasure, bits: np.ndarray) -> "ClassifierMask":
        return cls(grid, _readonly_bool(bits, grid.dims))

    @classmethod
    def empty(cls, grid: GridMeasure) -> "ClassifierMask":
        return cls.from_bits(grid, np.zeros(grid.dims, dtype=bool))

    @classmethod
    def full(cls, grid: GridMeasure) -> "ClassifierMask":
        return cls.from_bits(grid, np.ones(grid.dims, dtype=bool))

    def complement(self) -> "ClassifierMask":
        return ClassifierMask.from_bits(self.grid, ~self.bits)

    def union(self, other: "ClassifierMask") -> "ClassifierMask":
        return ClassifierMask.from_bits(self.grid, self.bits | other.bits)

    def intersection(self, other: "ClassifierMask") -> "ClassifierMask":
        return ClassifierMask.from_bits(self.grid, self.bits & other.bits)

    def same_as(self, other: "ClassifierMask") -> bool:
        return bool(np.array_equal(self.bits, other.bits))

    def subset_of(self, other: "ClassifierMask") -> bool:
        return bool(np.all(~self.bits | other.bits))

    @property
    def count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A real-valued function on grid cells; the convex relaxation uses
    values in [0, 1]."""

    grid: GridMeasure
    values: np.ndarray

    def __post_init__(self) -> None:
        if tuple(self.values.shape) != self.grid.dims:
            raise InputError(
                f"field shape {self.values.shape} != grid dims {self.grid.dims}"
            )
        if not np.all(np.isfinite(self.values)):
            raise InputError("field values must be finite")

    @classmethod
    def from_values(cls, grid: GridMeasure, values: np.ndarray) -> "ScalarField":
        arr = np.ascontiguousarray(values, dtype=np.float64).reshape(grid.dims)
        arr.setflags(write=False)
        return cls(grid, arr)

    @classmethod
    def from_mask(cls, mask: ClassifierMask) -> "ScalarField":
        return cls.from_values(mask.grid, mask.bits.astype(np.float64))


@dataclass(frozen=True)
class BallUnionClassifier:
    """A set A given as a union of open metric balls.

    A radius of 0 denotes the singleton {center}, realizing the convention
    that a zero-radius ball is the point itself; the empirical solver emits
    such classifiers at epsilon = 0.
    """

    centers: tuple[tuple[float, ...], ...]
    radii: tuple[float, ...]
    metric: MetricSpec = MetricSpec(2.0)

    def __post_init__(self) -> None:
        if len(self.centers) != len(self.radii):
            raise InputError("centers and radii must have equal length")
        if any(r < 0.0 for r in self.radii):
            raise InputError("radii must be >= 0")

    @property
    def n_balls(self) -> int:
        return len(self.centers)

    def contains_point(self, x: Sequence[float]) -> bool:
        for c, r in zip(self.centers, self.radii):
            d = distance(self.metric, x, c)
            if (d < r) if r > 0.0 else (d == 0.0):
                return True
        return False

    def rasterize(self, grid: GridMeasure) -> ClassifierMask:
        """Mask of cells whose center lies in the union."""
        bits = np.zeros(grid.dims, dtype=bool)
        for index in np.ndindex(*grid.dims):
            bits[index] = self.contains_point(grid.cell_center(index))
        return ClassifierMask.from_bits(grid, bits)


@dataclass(frozen=True)
class RiskBreakdown:
    """Empirical risk, pre-perimeter and adversarial risk of one classifier
    at one epsilon, tied together by the exact decomposition identity."""

    epsilon: float
    empirical_risk: float
    pre_perimeter: float
    adversarial_risk: float

    def __post_init__(self) -> None:
        parts = (self.empirical_risk, self.pre_perimeter, self.adversarial_risk)
        if any(v < 0.0 for v in parts):
            raise InputError("risk components must be nonnegative")
        if self.adversarial_risk > 1.0 + 1e-12:
            raise InputError("adversarial risk cannot exceed 1")
        gap = self.adversarial_risk - (
            self.empirical_risk + self.epsilon * self.pre_perimeter
        )
        if abs(gap) > 1e-10:
            raise InputError(f"decomposition identity violated by {gap!r}")

    _KEYS = ("epsilon", "empirical_risk", "pre_perimeter", "adversarial_risk")

    def to_text(self) -> str:
        return "".join(f"{k}={getattr(self, k)!r}\n" for k in self._KEYS)

    @classmethod
    def from_text(cls, text: str) -> "RiskBreakdown":
        values: dict[str, float] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            key, _, raw = line.partition("=")
            values[key.strip()] = float(raw)
        return cls(**{k: values[k] for k in cls._KEYS})


# ---------------------------------------------------------------------------
# Grid evaluators
# ---------------------------------------------------------------------------


def _check_grid(obj_grid: GridMeasure, gm: GridMeasure) -> None:
    if obj_grid.dims != gm.dims:
        raise InputError(f"incompatible grid shapes {obj_grid.dims} vs {gm.dims}")


def _sup_bits(bits: np.ndarray, stencil: BallStencil) -> np.ndarray:
    """Per-cell max of the indicator over the clipped stencil ball."""
    out = bits.copy()
    for off in stencil.offsets:
        if all(o == 0 for o in off):
            continue
        sl = offset_slices(bits.shape, off)
        if sl is not None:
            dst, src = sl
            out[dst] |= bits[src]
    return out


def _inf_bits(bits: np.ndarray, stencil: BallStencil) -> np.ndarray:
    """Per-cell min of the indicator over the clipped stencil ball."""
    out = bits.copy()
    for off in stencil.offsets:
        if all(o == 0 for o in off):
            continue
        sl = offset_slices(bits.shape, off)
        if sl is not None:
            dst, src = sl
            out[dst] &= bits[src]
    return out


def _mass(dens: np.ndarray, where: np.ndarray) -> list[float]:
    return dens[where].tolist()


def empirical_risk_grid(mask: ClassifierMask, gm: GridMeasure) -> float:
    """Plain 0-1 risk: label-0 mass inside A plus label-1 mass outside A."""
    _check_grid(mask.grid, gm)
    return math.fsum(_mass(gm.dens0, mask.bits) + _mass(gm.dens1, ~mask.bits))


def adversarial_risk_grid(
    mask: ClassifierMask, gm: GridMeasure, stencil: BallStencil
) -> float:
    """Worst-case 0-1 risk when every point may move within its open
    epsilon-ball (balls clipped at the grid boundary)."""
    _check_grid(mask.grid, gm)
    hit = _sup_bits(mask.bits, stencil)
    unsafe = ~_inf_bits(mask.bits, stencil)
    return math.fsum(_mass(gm.dens0, hit) + _mass(gm.dens1, unsafe))


def pre_perimeter_grid(
    mask: ClassifierMask, gm: GridMeasure, stencil: BallStencil
) -> float:
    """Nonlocal pre-perimeter: per-side mass of the epsilon-thickened
    decision boundary, divided by epsilon.

    Equivalently the dens0 mass of cells outside A whose ball meets A plus
    the dens1 mass of cells inside A whose ball meets the complement, over
    epsilon.  Returns 0 at epsilon = 0, where the ball degenerates to the
    cell itself and the boundary band is empty.
    """
    _check_grid(mask.grid, gm)
    if stencil.epsilon == 0.0:
        return 0.0
    hit = _sup_bits(mask.bits, stencil)
    safe = _inf_bits(mask.bits, stencil)
    band0 = hit & ~mask.bits
    band1 = mask.bits & ~safe
    return math.fsum(_mass(gm.dens0, band0) + _mass(gm.dens1, band1)) / stencil.epsilon


def pre_tv_grid(u: ScalarField, gm: GridMeasure, stencil: BallStencil) -> float:
    """Nonlocal pre-total-variation of a scalar field: ball-wise sup/inf
    gaps weighted by the two class measures, divided by epsilon."""
    _check_grid(u.grid, gm)
    if stencil.epsilon == 0.0:
        return 0.0
    sup = u.values.copy()
    inf = u.values.copy()
    for off in stencil.offsets:
        if all(o == 0 for o in off):
            continue
        sl = offset_slices(u.values.shape, off)
        if sl is not None:
            dst, src = sl
            np.maximum(sup[dst], u.values[src], out=sup[dst])
            np.minimum(inf[dst], u.values[src], out=inf[dst])
    terms = (gm.dens0 * (sup - u.values)).ravel().tolist()
    terms += (gm.dens1 * (u.values - inf)).ravel().tolist()
    return math.fsum(terms) / stencil.epsilon


def coarea_tv(u: ScalarField, gm: GridMeasure, stencil: BallStencil) -> float:
    """Layer-cake evaluation of the pre-total-variation: the pre-perimeter
    of the superlevel sets integrated over thresholds.

    Agrees with ``pre_tv_grid`` for every (necessarily piecewise-constant)
    grid field.
    """
    _check_grid(u.grid, gm)
    levels = np.unique(u.values)
    terms = []
    for k in range(1, levels.size):
        t = levels[k]
        mask = ClassifierMask.from_bits(gm, u.values >= t)
        per = pre_perimeter_grid(mask, gm, stencil)
        terms.append((float(t) - float(levels[k - 1])) * per)
    return math.fsum(terms)


def morphological_risk(
    mask: ClassifierMask, gm: GridMeasure, stencil: BallStencil
) -> float:
    """Adversarial risk via set morphology: dens0 mass of the dilation plus
    the label-1 mass left outside the erosion.

    Identical boolean logic to ``adversarial_risk_grid``, reached through
    the dilation/erosion operators instead of per-cell sup/inf sweeps; the
    two agree exactly.
    """
    from .morphology import dilate, erode

    _check_grid(mask.grid, gm)
    grown = dilate(mask, stencil)
    core = erode(mask, stencil)
    return math.fsum(_mass(gm.dens0, grown.bits) + _mass(gm.dens1, ~core.bits))


def risk_breakdown_grid(
    mask: ClassifierMask, gm: GridMeasure, stencil: BallStencil
) -> RiskBreakdown:
    return RiskBreakdown(
        epsilon=stencil.epsilon,
        empirical_risk=empirical_risk_grid(mask, gm),
        pre_perimeter=pre_perimeter_grid(mask, gm, stencil),
        adversarial_risk=adversarial_risk_grid(mask, gm, stencil),
    )


# ---------------------------------------------------------------------------
# Empirical (point cloud) evaluators
# ---------------------------------------------------------------------------


def _ball_intersects(
    metric: MetricSpec,
    x: Sequence[float],
    eps: float,
    center: Sequence[float],
    radius: float,
) -> bool:
    """Open B_eps(x) meets the open ball (or singleton when radius = 0)."""
    d = distance(metric, x, center)
    if eps + radius == 0.0:
        return d == 0.0
    return d < eps + radius


def _ball_contains(
    metric: MetricSpec,
    x: Sequence[float],
    eps: float,
    center: Sequence[float],
    radius: float,
) -> bool:
    """Single-ball sufficiency test for B_eps(x) inside the ball: the
    closed condition d + eps <= radius.

    Coverage by several balls jointly, without one containing ball, counts
    as non-containment; for solver-built equal-radius unions this is exact,
    certified globally by the matching lower bound.
    """
    return distance(metric, x, center) + eps <= radius


def _misclassified(
    A: BallUnionClassifier, ds: EmpiricalDataset, epsilon: float
) -> list[int]:
    bad = []
    for i, (x, lab) in enumerate(zip(ds.points, ds.labels)):
        if lab == 0:
            hit = any(
                _ball_intersects(A.metric, x, epsilon, c, r)
                for c, r in zip(A.centers, A.radii)
            )
            if hit:
                bad.append(i)
        else:
            safe = any(
                _ball_contains(A.metric, x, epsilon, c, r)
                for c, r in zip(A.centers, A.radii)
            )
            if not safe:
                bad.append(i)
    return bad


def adversarial_risk_empirical(
    A: BallUnionClassifier, ds: EmpiricalDataset, epsilon: float
) -> float:
    """Adversarial risk of a ball-union classifier on an empirical measure.

    A label-0 point is charged iff some ball meets its open epsilon-ball
    (d < epsilon + r); a label-1 point is charged iff no single ball
    contains its ball (for all j: d + epsilon > r_j).  Accumulated in exact
    rational arithmetic.
    """
    if epsilon < 0.0:
        raise InputError("epsilon must be >= 0")
    fracs = exact_masses(ds)
    bad = _misclassified(A, ds, epsilon)
    return float(sum((fracs[i] for i in bad), Fraction(0)))


def empirical_risk_points(
    predict: Callable[[Sequence[float]], bool], ds: EmpiricalDataset
) -> float:
    """Plain 0-1 risk of an arbitrary point predicate on the dataset."""
    fracs = exact_masses(ds)
    total = Fraction(0)
    for i, (x, lab) in enumerate(zip(ds.points, ds.labels)):
        if bool(predict(x)) != bool(lab):
            total += fracs[i]
    return float(total)


def risk_breakdown_empirical(
    A: BallUnionClassifier, ds: EmpiricalDataset, epsilon: float
) -> RiskBreakdown:
    adv = adversarial_risk_empirical(A, ds, epsilon)
    emp = adversarial_risk_empirical(A, ds, 0.0)
    per = (adv - emp) / epsilon if epsilon > 0.0 else 0.0
    return RiskBreakdown(
        epsilon=epsilon,
        empirical_risk=emp,
        pre_perimeter=per,
        adversarial_risk=adv,
    )
