"""Metrics, datasets, grid geometry and epsilon-ball machinery.

Shared foundation for the empirical and grid solvers: lp metrics on R^d,
labeled weighted point clouds, rectangular grid measures with two density
fields, and the integer-offset stencils that realize open epsilon-balls on
grids.  All types are immutable after construction and all operations are
pure functions, so everything here is safe for concurrent reads.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "InputError",
    "ParseError",
    "InternalError",
    "NormalizationWarning",
    "MetricSpec",
    "distance",
    "EmpiricalDataset",
    "GridMeasure",
    "BallStencil",
    "ball_stencil",
    "neighbor_pairs",
    "exact_masses",
    "load_dataset",
    "save_dataset",
    "load_grid",
    "save_grid",
    "offset_slices",
]


class InputError(ValueError):
    """Bad arguments or malformed input data (CLI exit code 2)."""


class ParseError(InputError):
    """Malformed input file; message carries the 1-based line number."""


class InternalError(RuntimeError):
    """An internal consistency check failed, e.g. a violated duality
    certificate (CLI exit code 3)."""


class NormalizationWarning(UserWarning):
    """Masses or densities deviated from total 1 by more than the
    documented tolerance and were rescaled."""


# ---------------------------------------------------------------------------
# Metric
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricSpec:
    """An lp norm on R^d; ``p`` may be any real >= 1 or ``math.inf``."""

    p: float = 2.0

    def __post_init__(self) -> None:
        if not (self.p >= 1.0):  # also rejects NaN
            raise InputError(f"metric exponent p must be >= 1, got {self.p}")

    @classmethod
    def from_string(cls, text: str) -> "MetricSpec":
        text = text.strip().lower()
        if text in ("inf", "infinity", "oo"):
            return cls(math.inf)
        try:
            return cls(float(text))
        except ValueError:
            raise InputError(f"cannot parse metric exponent {text!r}") from None


def distance(metric: MetricSpec, x: Sequence[float], y: Sequence[float]) -> float:
    """lp distance between two points of equal dimension."""
    if len(x) != len(y):
        raise InputError(f"dimension mismatch: {len(x)} vs {len(y)}")
    p = metric.p
    if p == math.inf:
        return max((abs(a - b) for a, b in zip(x, y)), default=0.0)
    if p == 2.0:
        return math.dist(x, y)
    if p == 1.0:
        return math.fsum(abs(a - b) for a, b in zip(x, y))
    return math.fsum(abs(a - b) ** p for a, b in zip(x, y)) ** (1.0 / p)


# ---------------------------------------------------------------------------
# Empirical dataset
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalDataset:
    """A labeled weighted point cloud: point i carries label in {0, 1} and
    positive mass, with masses summing to 1.

    The two class weights are ``w0`` (total label-0 mass) and ``w1 = 1 - w0``.
    """

    points: tuple[tuple[float, ...], ...]
    labels: tuple[int, ...]
    masses: tuple[float, ...]

    def __post_init__(self) -> None:
        n = len(self.points)
        if n == 0:
            raise InputError("dataset must contain at least one point")
        if len(self.labels) != n or len(self.masses) != n:
            raise InputError("points, labels and masses must have equal length")
        dim = len(self.points[0])
        if any(len(p) != dim for p in self.points):
            raise InputError("all points must share one dimension")
        if any(lab not in (0, 1) for lab in self.labels):
            raise InputError("labels must be 0 or 1")
        if any(not (m > 0.0) for m in self.masses):
            raise InputError("masses must be positive")
        total = math.fsum(self.masses)
        if abs(total - 1.0) > 1e-12:
            raise InputError(f"masses must sum to 1 within 1e-12, got {total!r}")

    @classmethod
    def from_points(
        cls,
        points: Iterable[Sequence[float]],
        labels: Iterable[int],
        masses: Iterable[float] | None = None,
    ) -> "EmpiricalDataset":
        """Build a dataset; omitted masses default to the uniform 1/N."""
        pts = tuple(tuple(float(c) for c in p) for p in points)
        labs = tuple(int(v) for v in labels)
        if masses is None:
            ms = tuple([1.0 / len(pts)] * len(pts)) if pts else ()
        else:
            ms = tuple(float(m) for m in masses)
        return cls(pts, labs, ms)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return len(self.points[0])

    @property
    def w0(self) -> float:
        return math.fsum(m for m, lab in zip(self.masses, self.labels) if lab == 0)

    @property
    def w1(self) -> float:
        return math.fsum(m for m, lab in zip(self.masses, self.labels) if lab == 1)

    def indices_with_label(self, label: int) -> tuple[int, ...]:
        return tuple(i for i, lab in enumerate(self.labels) if lab == label)


def exact_masses(ds: EmpiricalDataset) -> tuple[Fraction, ...]:
    """Masses as exact rationals, renormalized so they sum to exactly 1.

    Floats are binary rationals, so this is lossless up to the (at most
    ~1e-16 relative) renormalization; every exact-arithmetic code path uses
    this one convention so that values agree bit for bit.
    """
    fracs = [Fraction(m) for m in ds.masses]
    total = sum(fracs)
    return tuple(f / total for f in fracs)


# ---------------------------------------------------------------------------
# Grid measure
# ---------------------------------------------------------------------------


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """A discretized data measure on a rectangular grid of up to 3 axes.

    ``dens0``/``dens1`` hold per-cell masses of the two class measures
    (label 0 and label 1); together they sum to 1.  Cells are represented by
    their centers: cell index ``(i0, .., ik)`` sits at
    ``origin + (index + 0.5) * spacing`` per axis.
    """

    dims: tuple[int, ...]
    spacing: tuple[float, ...]
    origin: tuple[float, ...]
    dens0: np.ndarray
    dens1: np.ndarray

    def __post_init__(self) -> None:
        d = len(self.dims)
        if not 1 <= d <= 3:
            raise InputError(f"grids support 1 to 3 axes, got {d}")
        if len(self.spacing) != d or len(self.origin) != d:
            raise InputError("dims, spacing and origin must have equal length")
        if any(n < 1 for n in self.dims):
            raise InputError("every axis needs at least one cell")
        if any(not (h > 0.0) for h in self.spacing):
            raise InputError("spacing must be positive")
        for name in ("dens0", "dens1"):
            arr = getattr(self, name)
            if tuple(arr.shape) != self.dims:
                raise InputError(f"{name} shape {arr.shape} != dims {self.dims}")
            if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
                raise InputError(f"{name} must be finite and nonnegative")
        total = math.fsum(self.dens0.ravel().tolist()) + math.fsum(
            self.dens1.ravel().tolist()
        )
        if abs(total - 1.0) > 1e-9:
            raise InputError(
                f"densities must sum to 1 within 1e-9 after normalization, got {total!r}"
            )

    @classmethod
    def create(
        cls,
        dims: Sequence[int],
        spacing: Sequence[float],
        origin: Sequence[float],
        dens0: np.ndarray,
        dens1: np.ndarray,
        normalize: bool = True,
    ) -> "GridMeasure":
        """Validate, optionally rescale to total mass 1, and freeze."""
        dims_t = tuple(int(n) for n in dims)
        d0 = np.ascontiguousarray(dens0, dtype=np.float64).reshape(dims_t)
        d1 = np.ascontiguousarray(dens1, dtype=np.float64).reshape(dims_t)
        if normalize:
            total = float(d0.sum() + d1.sum())
            if total <= 0.0:
                raise InputError("total density mass must be positive")
            if abs(total - 1.0) > 1e-9:  # leave already-normalized grids intact
                d0 = d0 / total
                d1 = d1 / total
        return cls(
            dims_t,
            tuple(float(h) for h in spacing),
            tuple(float(o) for o in origin),
            _readonly(d0),
            _readonly(d1),
        )

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.dims))

    @property
    def w0(self) -> float:
        return math.fsum(self.dens0.ravel().tolist())

    @property
    def w1(self) -> float:
        return math.fsum(self.dens1.ravel().tolist())

    def cell_center(self, index: Sequence[int]) -> tuple[float, ...]:
        return tuple(
            o + (i + 0.5) * h for o, i, h in zip(self.origin, index, self.spacing)
        )


# ---------------------------------------------------------------------------
# Ball stencil
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BallStencil:
    """Integer cell offsets realizing the open epsilon-ball around a cell.

    An offset ``o`` is a member iff the center displacement satisfies
    ``d(0, o * spacing) < epsilon`` strictly; comparisons are made in exact
    floating arithmetic with no tolerance band so edge-of-ball ties are
    reproducible.  ``epsilon == 0`` yields exactly ``{0}`` (a point's
    zero-radius ball is the point itself).
    """

    offsets: tuple[tuple[int, ...], ...]
    epsilon: float
    metric: MetricSpec

    def __post_init__(self) -> None:
        zero = tuple([0] * len(self.offsets[0])) if self.offsets else ()
        if zero not in self.offsets:
            raise InputError("stencil must contain the zero offset")

    @property
    def size(self) -> int:
        return len(self.offsets)


def ball_stencil(
    grid: GridMeasure, epsilon: float, metric: MetricSpec = MetricSpec(2.0)
) -> BallStencil:
    """Enumerate the open-ball offsets for ``grid``'s spacing, in
    lexicographic order."""
    if epsilon < 0.0:
        raise InputError(f"epsilon must be >= 0, got {epsilon}")
    d = grid.ndim
    zero = tuple([0] * d)
    if epsilon == 0.0:
        return BallStencil((zero,), 0.0, metric)
    # Offsets beyond dims-1 cells never land in-domain, so cap enumeration.
    bounds = []
    for axis in range(d):
        h = grid.spacing[axis]
        k = int(math.ceil(epsilon / h))
        bounds.append(min(k, grid.dims[axis] - 1))
    offsets = []
    for off in np.ndindex(*[2 * b + 1 for b in bounds]):
        o = tuple(off[a] - bounds[a] for a in range(d))
        disp = tuple(o[a] * grid.spacing[a] for a in range(d))
        if distance(metric, zero, disp) < epsilon:
            offsets.append(o)
    offsets.sort()
    return BallStencil(tuple(offsets), float(epsilon), metric)


def offset_slices(
    shape: Sequence[int], offset: Sequence[int]
) -> tuple[tuple[slice, ...], tuple[slice, ...]] | None:
    """Destination and source slices so that ``dst[d] op= src[s]`` applies a
    cell shift by ``offset`` with out-of-domain cells dropped.

    Returns None when the shift has no overlap with the domain.
    """
    dst, src = [], []
    for n, o in zip(shape, offset):
        lo_d, hi_d = max(0, -o), min(n, n - o)
        if lo_d >= hi_d:
            return None
        dst.append(slice(lo_d, hi_d))
        src.append(slice(lo_d + o, hi_d + o))
    return tuple(dst), tuple(src)


# ---------------------------------------------------------------------------
# Fixed-radius neighbor search
# ---------------------------------------------------------------------------

_ALL_PAIRS_LIMIT = 2000


def neighbor_pairs(
    points: Sequence[Sequence[float]],
    radius: float,
    metric: MetricSpec = MetricSpec(2.0),
) -> list[tuple[int, int]]:
    """All index pairs (i < j) with ``d(x_i, x_j) < radius`` strictly.

    ``radius == 0`` returns coincident pairs only.  Uses a uniform spatial
    hash with cell size ``radius`` for large inputs and a plain all-pairs
    scan for N <= 2000.
    """
    n = len(points)
    if radius < 0.0:
        raise InputError("radius must be >= 0")
    if radius == 0.0:
        groups: dict[tuple[float, ...], list[int]] = {}
        for i, p in enumerate(points):
            groups.setdefault(tuple(p), []).append(i)
        pairs = []
        for idxs in groups.values():
            for a in range(len(idxs)):
                for b in range(a + 1, len(idxs)):
                    pairs.append((idxs[a], idxs[b]))
        pairs.sort()
        return pairs
    if n <= _ALL_PAIRS_LIMIT:
        return [
            (i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if distance(metric, points[i], points[j]) < radius
        ]
    # Spatial hash: since |.|_p >= |.|_inf for p >= 1, candidates live in
    # adjacent hash cells.
    dim = len(points[0])
    buckets: dict[tuple[int, ...], list[int]] = {}
    keys = []
    for i, p in enumerate(points):
        key = tuple(int(math.floor(c / radius)) for c in p)
        keys.append(key)
        buckets.setdefault(key, []).append(i)
    pairs = []
    neighborhood = list(np.ndindex(*[3] * dim))
    for i in range(n):
        ki = keys[i]
        for off in neighborhood:
            key = tuple(ki[a] + off[a] - 1 for a in range(dim))
            for j in buckets.get(key, ()):
                if j > i and distance(metric, points[i], points[j]) < radius:
                    pairs.append((i, j))
    pairs.sort()
    return pairs


# ---------------------------------------------------------------------------
# Dataset file format: header-free CSV rows "x1,...,xd,label[,mass]"
# ---------------------------------------------------------------------------


def _parse_float(token: str, lineno: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"line {lineno}: cannot parse {what} {token!r}") from None
    if not math.isfinite(value):
        raise ParseError(f"line {lineno}: non-finite {what} {token!r}")
    return value


def load_dataset(path: str) -> EmpiricalDataset:
    """Read a dataset CSV.

    When every row's final column is 0 or 1 it is read as the label and
    masses default to the uniform 1/N; otherwise the final column is the
    mass and the label sits second to last.  Masses deviating from total 1
    by more than 1e-9 are rescaled with a NormalizationWarning.
    """
    rows: list[tuple[int, list[float]]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            values = [
                _parse_float(tok.strip(), lineno, "value") for tok in text.split(",")
            ]
            if len(values) < 2:
                raise ParseError(f"line {lineno}: expected at least 2 columns")
            rows.append((lineno, values))
    if not rows:
        raise ParseError("line 1: empty dataset file")
    width = len(rows[0][1])
    for lineno, values in rows:
        if len(values) != width:
            raise ParseError(f"line {lineno}: inconsistent column count")
    # A trailing column after the label is the mass; it can only exist when
    # rows are at least "x,label,mass" wide.
    with_mass = width >= 3 and not all(
        values[-1] in (0.0, 1.0) for _, values in rows
    )
    points, labels, masses = [], [], []
    for lineno, values in rows:
        label_col = -2 if with_mass else -1
        label = values[label_col]
        if label not in (0.0, 1.0):
            raise ParseError(f"line {lineno}: label must be 0 or 1, got {label!r}")
        coords = values[: width + label_col]
        if with_mass:
            mass = values[-1]
            if not (mass > 0.0):
                raise ParseError(f"line {lineno}: mass must be positive, got {mass!r}")
            masses.append(mass)
        points.append(tuple(coords))
        labels.append(int(label))
    if not with_mass:
        masses = [1.0 / len(points)] * len(points)
    total = math.fsum(masses)
    if abs(total - 1.0) > 1e-9:
        warnings.warn(
            f"masses in {path} sum to {total!r}; rescaling to 1",
            NormalizationWarning,
            stacklevel=2,
        )
    if total != 1.0:
        masses = [m / total for m in masses]
    return EmpiricalDataset(tuple(points), tuple(labels), tuple(masses))


def save_dataset(path: str, ds: EmpiricalDataset, write_masses: bool = False) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p, lab, m in zip(ds.points, ds.labels, ds.masses):
            row = [repr(c) for c in p] + [str(lab)]
            if write_masses:
                row.append(repr(m))
            fh.write(",".join(row) + "\n")


# ---------------------------------------------------------------------------
# Grid file format: text header (dims, spacing, origin) then the dens0 and
# dens1 blocks as row-major decimal masses; commas and whitespace both
# separate values, so d=2 CSV matrices are accepted as-is.
# ---------------------------------------------------------------------------


def load_grid(path: str) -> GridMeasure:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header: dict[str, list[float]] = {}
    blocks: dict[str, list[float]] = {}
    current: str | None = None
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        tokens = text.replace(",", " ").split()
        key = tokens[0].lower()
        if key in ("dims", "spacing", "origin"):
            header[key] = [
                _parse_float(tok, lineno, key) for tok in tokens[1:]
            ]
            current = None
        elif key in ("dens0", "dens1"):
            blocks[key] = [
                _parse_float(tok, lineno, key) for tok in tokens[1:]
            ]
            current = key
        elif current is not None:
            blocks[current].extend(
                _parse_float(tok, lineno, current) for tok in tokens
            )
        else:
            raise ParseError(f"line {lineno}: unexpected content {text!r}")
    for key in ("dims", "spacing", "origin"):
        if key not in header:
            raise ParseError(f"line 1: missing {key} header")
    for key in ("dens0", "dens1"):
        if key not in blocks:
            raise ParseError(f"line 1: missing {key} block")
    dims = tuple(int(v) for v in header["dims"])
    count = int(np.prod(dims)) if dims else 0
    for key in ("dens0", "dens1"):
        if len(blocks[key]) != count:
            raise ParseError(
                f"line 1: {key} holds {len(blocks[key])} values, expected {count}"
            )
        if any(v < 0.0 for v in blocks[key]):
            raise ParseError(f"line 1: {key} must be nonnegative")
    total = math.fsum(blocks["dens0"]) + math.fsum(blocks["dens1"])
    if total <= 0.0:
        raise ParseError("line 1: total density mass must be positive")
    if abs(total - 1.0) > 1e-9:
        warnings.warn(
            f"densities in {path} sum to {total!r}; rescaling to 1",
            NormalizationWarning,
            stacklevel=2,
        )
    d0 = np.array(blocks["dens0"], dtype=np.float64).reshape(dims)
    d1 = np.array(blocks["dens1"], dtype=np.float64).reshape(dims)
    return GridMeasure.create(dims, header["spacing"], header["origin"], d0, d1)


def save_grid(path: str, gm: GridMeasure) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("dims " + " ".join(str(n) for n in gm.dims) + "\n")
        fh.write("spacing " + " ".join(repr(h) for h in gm.spacing) + "\n")
        fh.write("origin " + " ".join(repr(o) for o in gm.origin) + "\n")
        for name, arr in (("dens0", gm.dens0), ("dens1", gm.dens1)):
            fh.write(name + "\n")
            flat = arr.ravel()
            row = gm.dims[-1]
            for start in range(0, flat.size, row):
                fh.write(
                    " ".join(repr(v) for v in flat[start : start + row].tolist())
                    + "\n"
                )
