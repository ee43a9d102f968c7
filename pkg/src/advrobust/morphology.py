"""Dilation, erosion, opening and closing of classifier sets.

On grids the dilation of A marks every cell whose clipped epsilon-ball
meets A, and the erosion keeps cells whose whole ball lies inside A.  With
the symmetric stencils produced by ``ball_stencil`` the pair forms an
adjunction, so the algebra of openings and closings (idempotence,
``closing(A)^eps = A^eps``, complement duality, ...) holds exactly as
boolean logic; the risk monotonicity of opening/closing is likewise exact.

Grid erosion matches the complement-dilation identity by construction of
the shared clipped-ball semantics, which is what keeps the morphological
risk rewrite equal to the direct adversarial risk.
"""

from __future__ import annotations

import numpy as np

from .core import BallStencil, GridMeasure, InputError, ParseError, offset_slices
from .functionals import BallUnionClassifier, ClassifierMask

__all__ = [
    "dilate",
    "erode",
    "opening",
    "closing",
    "dilate_ball_union",
    "save_mask",
    "load_mask",
]


def dilate(mask: ClassifierMask, stencil: BallStencil) -> ClassifierMask:
    """Cells whose clipped epsilon-ball contains a cell of A."""
    bits = mask.bits.copy()
    for off in stencil.offsets:
        if all(o == 0 for o in off):
            continue
        sl = offset_slices(bits.shape, off)
        if sl is not None:
            dst, src = sl
            bits[dst] |= mask.bits[src]
    return ClassifierMask.from_bits(mask.grid, bits)


def erode(mask: ClassifierMask, stencil: BallStencil) -> ClassifierMask:
    """Cells whose clipped epsilon-ball lies entirely inside A."""
    bits = mask.bits.copy()
    for off in stencil.offsets:
        if all(o == 0 for o in off):
            continue
        sl = offset_slices(bits.shape, off)
        if sl is not None:
            dst, src = sl
            bits[dst] &= mask.bits[src]
    return ClassifierMask.from_bits(mask.grid, bits)


def opening(mask: ClassifierMask, stencil: BallStencil) -> ClassifierMask:
    """Erode then dilate: the largest epsilon-inner-regular subset."""
    return dilate(erode(mask, stencil), stencil)


def closing(mask: ClassifierMask, stencil: BallStencil) -> ClassifierMask:
    """Dilate then erode: the smallest epsilon-outer-regular superset."""
    return erode(dilate(mask, stencil), stencil)


def dilate_ball_union(A: BallUnionClassifier, epsilon: float) -> BallUnionClassifier:
    """Dilation of a union of open lp balls is the union of the enlarged
    balls, exactly: each radius grows by epsilon."""
    if epsilon < 0.0:
        raise InputError("epsilon must be >= 0")
    return BallUnionClassifier(
        A.centers, tuple(r + epsilon for r in A.radii), A.metric
    )


# ---------------------------------------------------------------------------
# Mask files: portable bitmap text (P1, 2-D only) or CSV of 0/1.  Row-major:
# axis 0 indexes rows from the origin cell, the final axis runs within a row.
# ---------------------------------------------------------------------------


def save_mask(path: str, mask: ClassifierMask, fmt: str = "p1") -> None:
    bits = mask.bits
    with open(path, "w", encoding="utf-8") as fh:
        if fmt == "p1":
            if bits.ndim != 2:
                raise InputError("P1 export requires a 2-D mask; use fmt='csv'")
            fh.write("P1\n")
            fh.write(f"{bits.shape[1]} {bits.shape[0]}\n")
            for row in bits:
                fh.write(" ".join("1" if v else "0" for v in row) + "\n")
        elif fmt == "csv":
            flat = bits.reshape(-1, bits.shape[-1])
            for row in flat:
                fh.write(",".join("1" if v else "0" for v in row) + "\n")
        else:
            raise InputError(f"unknown mask format {fmt!r}")


def load_mask(path: str, grid: GridMeasure) -> ClassifierMask:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh.read().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError("line 1: empty mask file")
    if lines[0].upper() == "P1":
        tokens: list[str] = []
        for ln in lines[2:]:
            tokens.extend(ln.split())
    else:
        tokens = []
        for ln in lines:
            tokens.extend(ln.replace(",", " ").split())
    if len(tokens) != grid.cell_count:
        raise ParseError(
            f"line 1: mask holds {len(tokens)} cells, grid needs {grid.cell_count}"
        )
    values = []
    for tok in tokens:
        if tok not in ("0", "1"):
            raise ParseError(f"line 1: mask entries must be 0 or 1, got {tok!r}")
        values.append(tok == "1")
    bits = np.array(values, dtype=bool).reshape(grid.dims)
    return ClassifierMask.from_bits(grid, bits)
