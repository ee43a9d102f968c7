"""Conflict graph, vertex-cover solver, OT dual and the epsilon sweep.

The two-atom line instance (mass 1/2 at -1 with label 0, mass 1/2 at +1
with label 1) pins the canonical values: conflicts appear exactly when
2*epsilon exceeds the distance 2, and the optimal risk steps from 0 to 1/2.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from advrobust.core import (
    EmpiricalDataset,
    InputError,
    MetricSpec,
    distance,
    exact_masses,
)
from advrobust.empirical import (
    build_classifier,
    build_conflict_graph,
    optimal_risk,
    ot_dual_value,
    save_certificate,
    save_classifier,
    save_path_report,
    sweep_epsilon,
)
from advrobust.functionals import adversarial_risk_empirical
from advrobust import oracle

DUALITY_TOL = 1e-9


def two_delta():
    return EmpiricalDataset.from_points([(-1.0,), (1.0,)], [0, 1])


def random_dataset(rng, n, dim=2, spread=1.0):
    pts = [tuple(p) for p in rng.uniform(-spread, spread, size=(n, dim))]
    labels = [int(v) for v in rng.integers(0, 2, size=n)]
    return EmpiricalDataset.from_points(pts, labels)


class TestConflictGraph:
    def test_two_delta_overlapping_balls_conflict(self):
        g = build_conflict_graph(two_delta(), 1.5)
        assert g.edges == ((0, 1),)

    def test_two_delta_disjoint_balls(self):
        g = build_conflict_graph(two_delta(), 0.5)
        assert g.edges == ()

    def test_boundary_is_strict(self):
        # distance exactly 2*epsilon does not conflict
        g = build_conflict_graph(two_delta(), 1.0)
        assert g.edges == ()

    def test_epsilon_zero_conflicts_only_at_shared_locations(self):
        ds = EmpiricalDataset.from_points(
            [(0.0,), (0.0,), (1.0,)], [0, 1, 1]
        )
        g = build_conflict_graph(ds, 0.0)
        assert g.edges == ((0, 1),)

    def test_matches_all_pairs_oracle(self):
        rng = np.random.default_rng(0)
        metric = MetricSpec(2)
        for _ in range(20):
            ds = random_dataset(rng, 12)
            eps = float(rng.uniform(0.0, 1.0))
            g = build_conflict_graph(ds, eps, metric)
            expected = set()
            for i in range(ds.n):
                for j in range(ds.n):
                    if ds.labels[i] == 0 and ds.labels[j] == 1:
                        d = distance(metric, ds.points[i], ds.points[j])
                        close = (d == 0.0) if eps == 0.0 else (d < 2 * eps)
                        if close:
                            expected.add((i, j))
            assert set(g.edges) == expected

    def test_carries_masses(self):
        g = build_conflict_graph(two_delta(), 1.5)
        assert g.left_masses == (0.5,) and g.right_masses == (0.5,)


class TestOptimalRisk:
    def test_two_delta_values(self):
        ds = two_delta()
        for eps in (0.25, 0.5, 0.9):
            assert optimal_risk(ds, eps)[0] == 0.0
        for eps in (1.1, 1.5, 1.9):
            assert optimal_risk(ds, eps)[0] == 0.5

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            ds = random_dataset(rng, int(rng.integers(2, 16)))
            eps = float(rng.uniform(0.0, 1.2))
            risk, cert = optimal_risk(ds, eps)
            value, _ = oracle.brute_force_empirical(ds, eps)
            assert risk == float(value)
            assert cert.cover_value == cert.matching_value == risk

    def test_cover_covers_every_edge(self):
        rng = np.random.default_rng(2)
        ds = random_dataset(rng, 14)
        eps = 0.5
        _, cert = optimal_risk(ds, eps)
        cover = set(cert.cover)
        for i, j in build_conflict_graph(ds, eps).edges:
            assert i in cover or j in cover

    def test_trivial_bound(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            ds = random_dataset(rng, 10)
            risk, _ = optimal_risk(ds, float(rng.uniform(0, 2)))
            assert risk <= min(ds.w0, ds.w1) + 1e-15

    def test_nonuniform_masses(self):
        ds = EmpiricalDataset.from_points(
            [(-1.0,), (1.0,)], [0, 1], [0.125, 0.875]
        )
        risk, cert = optimal_risk(ds, 1.5)
        assert risk == 0.125  # sacrificing the light atom is optimal
        assert cert.cover == (0,)


class TestBuildClassifier:
    def test_separated_classes_zero_risk(self):
        rng = np.random.default_rng(4)
        pts0 = [(-2.0 + 0.1 * k, 0.0) for k in range(4)]
        pts1 = [(2.0 + 0.1 * k, 0.0) for k in range(4)]
        ds = EmpiricalDataset.from_points(pts0 + pts1, [0] * 4 + [1] * 4)
        risk, cert = optimal_risk(ds, 0.4)
        assert risk == 0.0 and cert.cover == ()
        A = build_classifier(ds, cert, 0.4)
        assert A.n_balls == 4
        assert adversarial_risk_empirical(A, ds, 0.4) == 0.0

    def test_two_delta_classifier(self):
        ds = two_delta()
        risk, cert = optimal_risk(ds, 1.5)
        A = build_classifier(ds, cert, 1.5)
        assert cert.cover == (0,)
        assert A.centers == ((1.0,),) and A.radii == (1.5,)
        assert adversarial_risk_empirical(A, ds, 1.5) == 0.5

    def test_certificate_equality_random(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            ds = random_dataset(rng, 12)
            eps = float(rng.uniform(0.0, 1.0))
            risk, cert = optimal_risk(ds, eps)
            A = build_classifier(ds, cert, eps)
            assert adversarial_risk_empirical(A, ds, eps) == risk


class TestOTDual:
    def test_two_delta(self):
        assert ot_dual_value(two_delta(), 1.5) == 0.5
        assert ot_dual_value(two_delta(), 0.5) == 0.0

    def test_equals_optimal_risk_everywhere(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            ds = random_dataset(rng, int(rng.integers(2, 17)))
            eps = float(rng.uniform(0.0, 1.5))
            assert ot_dual_value(ds, eps) == optimal_risk(ds, eps)[0]

    def test_matches_coupling_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            ds = random_dataset(rng, int(rng.integers(2, 9)))
            eps = float(rng.uniform(0.0, 1.5))
            assert ot_dual_value(ds, eps) == float(
                oracle.brute_force_coupling(ds, eps)
            )


class TestLatticeClosure:
    def test_union_and_intersection_of_optimal_sacrifices(self):
        # For optimal sacrifice sets S1, S2, enlarging the classifier joins
        # the kept label-1 atoms and the hit label-0 atoms, so the induced
        # sacrifice of the union is (S1 & S2 on the label-1 side) together
        # with (S1 | S2 on the label-0 side), and dually for intersection.
        # Both must again be optimal covers.
        rng = np.random.default_rng(8)
        tested = 0
        while tested < 10:
            ds = random_dataset(rng, int(rng.integers(6, 13)))
            eps = float(rng.uniform(0.2, 1.0))
            value, sets = oracle.brute_force_empirical(ds, eps)
            if len(sets) < 2:
                continue
            tested += 1
            fracs = exact_masses(ds)
            edges = build_conflict_graph(ds, eps).edges
            label1 = set(ds.indices_with_label(1))
            for a in range(len(sets)):
                for b in range(a + 1, len(sets)):
                    s1, s2 = set(sets[a]), set(sets[b])
                    for combo in (
                        (s1 & s2 & label1) | ((s1 | s2) - label1),
                        (s1 | s2) & label1 | ((s1 & s2) - label1),
                    ):
                        assert all(i in combo or j in combo for i, j in edges)
                        assert sum(
                            (fracs[i] for i in combo), Fraction(0)
                        ) == value


class TestSweep:
    def test_two_delta_step(self):
        report = sweep_epsilon(two_delta(), [0.5, 1.5])
        assert [e.optimal_risk for e in report.entries] == [0.0, 0.5]

    def test_epsilon_zero_equals_bayes_risk_of_atoms(self):
        ds = EmpiricalDataset.from_points(
            [(0.0,), (0.0,), (1.0,)], [0, 1, 1]
        )
        report = sweep_epsilon(ds, [0.0])
        assert report.entries[0].optimal_risk == pytest.approx(1.0 / 3, abs=1e-15)

    def test_unsorted_rejected(self):
        with pytest.raises(InputError):
            sweep_epsilon(two_delta(), [1.0, 0.5])

    def test_nondecreasing_random(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            ds = random_dataset(rng, 10)
            eps = sorted(float(e) for e in rng.uniform(0, 1.5, size=5))
            risks = [e.optimal_risk for e in sweep_epsilon(ds, eps).entries]
            assert risks == sorted(risks)


class TestAttackConsistency:
    def test_sampled_reassignment_never_beats_certificate(self):
        # any adversary moving points within their open balls to other
        # dataset locations stays below the certified optimum
        rng = np.random.default_rng(10)
        metric = MetricSpec(2)
        for _ in range(10):
            ds = random_dataset(rng, 12)
            eps = float(rng.uniform(0.2, 1.0))
            risk, cert = optimal_risk(ds, eps)
            A = build_classifier(ds, cert, eps)
            for _ in range(25):
                attacked = Fraction(0)
                fracs = exact_masses(ds)
                for i, (x, lab) in enumerate(zip(ds.points, ds.labels)):
                    targets = [
                        q for q in ds.points if distance(metric, x, q) < eps
                    ] or [x]
                    y = targets[int(rng.integers(len(targets)))]
                    if A.contains_point(y) != bool(lab):
                        attacked += fracs[i]
                assert float(attacked) <= risk + DUALITY_TOL


class TestSerialization:
    def test_certificate_and_classifier_files(self, tmp_path):
        ds = two_delta()
        risk, cert = optimal_risk(ds, 1.5)
        A = build_classifier(ds, cert, 1.5)
        cert_path = tmp_path / "cover.txt"
        cls_path = tmp_path / "classifier.txt"
        save_certificate(str(cert_path), cert)
        save_classifier(str(cls_path), A)
        assert cert_path.read_text() == "1.5,0.5,0\n"
        assert cls_path.read_text() == "1.0;1.5\n"

    def test_path_report_file(self, tmp_path):
        report = sweep_epsilon(two_delta(), [0.5, 1.5])
        path = tmp_path / "path.txt"
        save_path_report(str(path), report)
        lines = path.read_text().splitlines()
        assert lines == ["0.5,0.0,cover_size=0", "1.5,0.5,cover_size=1"]
