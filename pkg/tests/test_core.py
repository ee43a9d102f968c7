"""Metric, dataset, grid and stencil foundations."""

import math

import numpy as np
import pytest

from advrobust import core
from advrobust.core import (
    BallStencil,
    EmpiricalDataset,
    GridMeasure,
    InputError,
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


def unit_grid(dims, spacing=1.0):
    rng = np.random.default_rng(0)
    d0 = rng.random(dims)
    d1 = rng.random(dims)
    return GridMeasure.create(
        dims, [spacing] * len(dims), [0.0] * len(dims), d0, d1
    )


class TestDistance:
    def test_euclidean_pythagorean(self):
        assert distance(MetricSpec(2), (0, 0), (3, 4)) == 5.0

    def test_max_norm(self):
        assert distance(MetricSpec(math.inf), (1, 1), (4, 3)) == 3.0

    def test_one_norm(self):
        assert distance(MetricSpec(1), (0, 0), (3, 4)) == 7.0

    def test_general_p(self):
        d = distance(MetricSpec(3), (0.0,), (2.0,))
        assert d == pytest.approx(2.0)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            distance(MetricSpec(2), (0, 0), (1, 2, 3))

    def test_p_below_one_rejected(self):
        with pytest.raises(InputError):
            MetricSpec(0.5)

    def test_metric_axioms_random_triples(self):
        rng = np.random.default_rng(42)
        for p in (1.0, 1.5, 2.0, 3.0, math.inf):
            metric = MetricSpec(p)
            for _ in range(50):
                x, y, z = rng.uniform(-5, 5, size=(3, 4))
                dxy = distance(metric, x, y)
                assert dxy == distance(metric, y, x)
                assert distance(metric, x, x) == 0.0
                assert dxy <= distance(metric, x, z) + distance(metric, z, y) + 1e-12

    def test_from_string(self):
        assert MetricSpec.from_string("inf").p == math.inf
        assert MetricSpec.from_string("2").p == 2.0
        with pytest.raises(InputError):
            MetricSpec.from_string("banana")


class TestDataset:
    def test_uniform_default_masses(self):
        ds = EmpiricalDataset.from_points([(0.0,), (1.0,)], [0, 1])
        assert ds.masses == (0.5, 0.5)
        assert ds.w0 == 0.5 and ds.w1 == 0.5

    def test_validation(self):
        with pytest.raises(InputError):
            EmpiricalDataset.from_points([(0.0,)], [2])
        with pytest.raises(InputError):
            EmpiricalDataset.from_points([(0.0,), (1.0,)], [0, 1], [0.5, -0.5])
        with pytest.raises(InputError):
            EmpiricalDataset.from_points([(0.0,), (1.0,)], [0, 1], [0.5, 0.4])

    def test_exact_masses_sum_to_one(self):
        ds = EmpiricalDataset.from_points([(0.0,)] * 3, [0, 1, 0])
        fracs = core.exact_masses(ds)
        assert sum(fracs) == 1


class TestStencil:
    def test_epsilon_zero_is_singleton(self):
        gm = unit_grid((4, 4))
        st = ball_stencil(gm, 0.0)
        assert st.offsets == ((0, 0),)

    def test_one_and_a_half_cells(self):
        gm = unit_grid((8, 8))
        st = ball_stencil(gm, 1.5)
        expected = {
            (0, 0),
            (1, 0), (-1, 0), (0, 1), (0, -1),
            (1, 1), (1, -1), (-1, 1), (-1, -1),
        }
        assert set(st.offsets) == expected

    def test_strict_inequality_excludes_radius(self):
        # distance exactly one spacing is not inside the open unit ball
        gm = unit_grid((8, 8))
        st = ball_stencil(gm, 1.0)
        assert st.offsets == ((0, 0),)

    def test_monotone_in_epsilon(self):
        gm = unit_grid((10, 10))
        rng = np.random.default_rng(1)
        eps = sorted(rng.uniform(0.0, 4.0, size=6))
        sets = [set(ball_stencil(gm, e).offsets) for e in eps]
        for small, big in zip(sets, sets[1:]):
            assert small <= big

    def test_symmetry(self):
        gm = unit_grid((10, 10), spacing=0.5)
        st = ball_stencil(gm, 1.7, MetricSpec(1))
        for off in st.offsets:
            assert tuple(-o for o in off) in st.offsets

    def test_negative_epsilon_rejected(self):
        with pytest.raises(InputError):
            ball_stencil(unit_grid((2, 2)), -0.1)

    def test_lexicographic_order(self):
        st = ball_stencil(unit_grid((8, 8)), 1.5)
        assert list(st.offsets) == sorted(st.offsets)

    def test_zero_offset_required(self):
        with pytest.raises(InputError):
            BallStencil(((1, 0),), 1.0, MetricSpec(2))


class TestNeighborPairs:
    def test_matches_all_pairs_scan(self, monkeypatch):
        rng = np.random.default_rng(7)
        pts = [tuple(p) for p in rng.uniform(-1, 1, size=(60, 3))]
        radius = 0.6
        expected = [
            (i, j)
            for i in range(len(pts))
            for j in range(i + 1, len(pts))
            if distance(MetricSpec(2), pts[i], pts[j]) < radius
        ]
        assert neighbor_pairs(pts, radius) == expected
        # force the spatial-hash path and compare again
        monkeypatch.setattr(core, "_ALL_PAIRS_LIMIT", 5)
        assert neighbor_pairs(pts, radius) == expected

    def test_zero_radius_matches_coincident_points(self):
        pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]
        assert neighbor_pairs(pts, 0.0) == [(0, 2), (1, 3)]


class TestDatasetIO:
    def test_two_delta_file(self, tmp_path):
        path = tmp_path / "two.csv"
        path.write_text("-1,0\n1,1\n")
        ds = load_dataset(str(path))
        assert ds.n == 2
        assert ds.w0 == 0.5 and ds.w1 == 0.5
        assert ds.points == ((-1.0,), (1.0,))

    def test_empty_file_is_parse_error(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ParseError):
            load_dataset(str(path))

    def test_mass_column(self, tmp_path):
        path = tmp_path / "mass.csv"
        path.write_text("0,0,0.25\n1,1,0.75\n")
        ds = load_dataset(str(path))
        assert ds.masses == (0.25, 0.75)

    def test_mass_normalization_warns(self, tmp_path):
        path = tmp_path / "mass.csv"
        path.write_text("0,0,0.2\n1,1,0.9\n")
        with pytest.warns(NormalizationWarning):
            ds = load_dataset(str(path))
        assert math.fsum(ds.masses) == pytest.approx(1.0, abs=1e-15)

    def test_bad_label(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0,0\n1,2\n")
        with pytest.raises(ParseError, match="line 2"):
            load_dataset(str(path))

    def test_bad_mass(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0,0,0.5\n1,1,-0.5\n")
        with pytest.raises(ParseError, match="line 2"):
            load_dataset(str(path))

    def test_malformed_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0,0\nfoo,1\n")
        with pytest.raises(ParseError, match="line 2"):
            load_dataset(str(path))

    def test_round_trip(self, tmp_path):
        ds = EmpiricalDataset.from_points(
            [(0.25, -1.5), (2.0, 0.125)], [0, 1], [0.125, 0.875]
        )
        path = tmp_path / "ds.csv"
        save_dataset(str(path), ds, write_masses=True)
        back = load_dataset(str(path))
        assert back == ds


class TestGridIO:
    def test_round_trip(self, tmp_path):
        gm = unit_grid((3, 4), spacing=0.5)
        path = tmp_path / "grid.txt"
        save_grid(str(path), gm)
        back = load_grid(str(path))
        assert back.dims == gm.dims
        assert back.spacing == gm.spacing
        assert back.origin == gm.origin
        assert np.array_equal(back.dens0, gm.dens0)
        assert np.array_equal(back.dens1, gm.dens1)

    def test_missing_block(self, tmp_path):
        path = tmp_path / "grid.txt"
        path.write_text("dims 2 2\nspacing 1 1\norigin 0 0\ndens0\n1 0 0 1\n")
        with pytest.raises(ParseError):
            load_grid(str(path))

    def test_normalization_warning(self, tmp_path):
        path = tmp_path / "grid.txt"
        path.write_text(
            "dims 1 2\nspacing 1 1\norigin 0 0\ndens0\n1 1\ndens1\n1 1\n"
        )
        with pytest.warns(NormalizationWarning):
            gm = load_grid(str(path))
        assert gm.w0 + gm.w1 == pytest.approx(1.0, abs=1e-12)

    def test_negative_density_rejected(self, tmp_path):
        path = tmp_path / "grid.txt"
        path.write_text(
            "dims 1 2\nspacing 1 1\norigin 0 0\ndens0\n-1 1\ndens1\n1 1\n"
        )
        with pytest.raises(ParseError):
            load_grid(str(path))

    def test_four_axes_rejected(self):
        with pytest.raises(InputError):
            GridMeasure.create(
                (2, 2, 2, 2), (1, 1, 1, 1), (0, 0, 0, 0),
                np.ones((2, 2, 2, 2)), np.ones((2, 2, 2, 2)),
            )

    def test_cell_centers(self):
        gm = unit_grid((4, 4), spacing=0.5)
        assert gm.cell_center((0, 0)) == (0.25, 0.25)
        assert gm.cell_center((3, 1)) == (1.75, 0.75)
