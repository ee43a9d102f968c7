"""Morphology algebra and its interaction with the adversarial risk."""

import numpy as np
import pytest

from advrobust.core import GridMeasure, MetricSpec, ball_stencil, distance
from advrobust.functionals import (
    BallUnionClassifier,
    ClassifierMask,
    adversarial_risk_grid,
)
from advrobust.graphcut import assemble_energy, solve_mincut
from advrobust.morphology import (
    closing,
    dilate,
    dilate_ball_union,
    erode,
    load_mask,
    opening,
    save_mask,
)


def random_grid(rng, dims, spacing=1.0):
    return GridMeasure.create(
        dims, [spacing] * len(dims), [0.0] * len(dims),
        rng.random(dims), rng.random(dims),
    )


def random_mask(rng, gm, p=0.5):
    return ClassifierMask.from_bits(gm, rng.random(gm.dims) < p)


def random_setup(rng, dims=(6, 6), max_eps=3.0):
    gm = random_grid(rng, dims)
    st = ball_stencil(gm, float(rng.uniform(0.0, max_eps)))
    return gm, st, random_mask(rng, gm)


class TestBasics:
    def test_dilate_empty_and_erode_full(self):
        rng = np.random.default_rng(0)
        gm = random_grid(rng, (5, 5))
        st = ball_stencil(gm, 1.5)
        assert dilate(ClassifierMask.empty(gm), st).count == 0
        assert erode(ClassifierMask.full(gm), st).count == gm.cell_count

    def test_singleton_dilates_to_stencil_footprint(self):
        rng = np.random.default_rng(1)
        gm = random_grid(rng, (9, 9))
        st = ball_stencil(gm, 2.5)
        bits = np.zeros(gm.dims, dtype=bool)
        bits[4, 4] = True
        grown = dilate(ClassifierMask.from_bits(gm, bits), st)
        expected = {(4 + o[0], 4 + o[1]) for o in st.offsets}
        assert {tuple(ix) for ix in np.argwhere(grown.bits)} == expected

    def test_monotone_in_set(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            gm, st, a = random_setup(rng)
            b = a.union(random_mask(rng, gm))
            assert dilate(a, st).subset_of(dilate(b, st))
            assert erode(a, st).subset_of(erode(b, st))


class TestAlgebraicIdentities:
    """The six closure/duality identities, exact on random masks."""

    def test_identities(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            gm, st, a = random_setup(rng)
            opened, closed = opening(a, st), closing(a, st)
            # opening(A) <= A <= closing(A)
            assert opened.subset_of(a)
            assert a.subset_of(closed)
            # dilation of the closing reproduces the dilation
            assert dilate(closed, st).same_as(dilate(a, st))
            # erosion of the opening reproduces the erosion
            assert erode(opened, st).same_as(erode(a, st))
            # erosion is complement-dilation
            assert erode(a, st).same_as(dilate(a.complement(), st).complement())
            # closing of the complement is the complement of the opening
            assert closing(a.complement(), st).same_as(opened.complement())

    def test_idempotence(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            gm, st, a = random_setup(rng)
            opened, closed = opening(a, st), closing(a, st)
            assert opening(opened, st).same_as(opened)
            assert closing(closed, st).same_as(closed)


class TestRiskInteraction:
    def test_opening_and_closing_never_increase_risk(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            gm, st, a = random_setup(rng)
            base = adversarial_risk_grid(a, gm, st)
            assert adversarial_risk_grid(opening(a, st), gm, st) <= base
            assert adversarial_risk_grid(closing(a, st), gm, st) <= base

    def test_minimizer_preserved_and_intermediate_sets_optimal(self):
        rng = np.random.default_rng(6)
        for _ in range(5):
            gm = random_grid(rng, (5, 5))
            st = ball_stencil(gm, float(rng.uniform(0.8, 2.2)))
            best = solve_mincut(assemble_energy(gm, st)).mask
            value = adversarial_risk_grid(best, gm, st)
            opened, closed = opening(best, st), closing(best, st)
            assert adversarial_risk_grid(opened, gm, st) == value
            assert adversarial_risk_grid(closed, gm, st) == value
            free = closed.bits & ~opened.bits
            for _ in range(20):
                bits = opened.bits | (free & (rng.random(gm.dims) < 0.5))
                between = ClassifierMask.from_bits(gm, bits)
                assert adversarial_risk_grid(between, gm, st) == value


class TestBallUnionDilation:
    def test_radius_grows(self):
        A = BallUnionClassifier(((0.0, 0.0),), (1.0,))
        assert dilate_ball_union(A, 0.5).radii == (1.5,)

    def test_semigroup(self):
        A = BallUnionClassifier(((0.0,), (2.0,)), (0.25, 1.0))
        twice = dilate_ball_union(dilate_ball_union(A, 0.25), 0.5)
        once = dilate_ball_union(A, 0.75)
        assert twice == once

    def test_rasterized_dilation_matches_grid_dilation_up_to_band(self):
        # Fine rasterization: the two dilations may disagree only on cells
        # within one cell diagonal of the dilated boundary.
        n, h = 48, 1.0 / 24
        gm = GridMeasure.create(
            (n, n), (h, h), (-1.0, -1.0), np.ones((n, n)), np.ones((n, n))
        )
        A = BallUnionClassifier(((-0.3, 0.1), (0.4, -0.2)), (0.25, 0.3))
        eps = 0.2
        grid_dilated = dilate(A.rasterize(gm), ball_stencil(gm, eps))
        true_dilated = dilate_ball_union(A, eps).rasterize(gm)
        diag = h * np.sqrt(2.0)
        metric = MetricSpec(2)
        disagreement = grid_dilated.bits ^ true_dilated.bits
        for idx in np.argwhere(disagreement):
            center = gm.cell_center(tuple(idx))
            margin = min(
                distance(metric, center, c) - r
                for c, r in zip(A.centers, A.radii)
            )
            assert abs(margin - eps) <= diag


class TestMaskIO:
    def test_p1_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        gm = random_grid(rng, (5, 7))
        mask = random_mask(rng, gm)
        path = tmp_path / "mask.pbm"
        save_mask(str(path), mask, "p1")
        assert load_mask(str(path), gm).same_as(mask)

    def test_csv_round_trip(self, tmp_path):
        rng = np.random.default_rng(8)
        gm = random_grid(rng, (3, 4))
        mask = random_mask(rng, gm)
        path = tmp_path / "mask.csv"
        save_mask(str(path), mask, "csv")
        assert load_mask(str(path), gm).same_as(mask)
