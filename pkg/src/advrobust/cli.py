"""Command-line front end.

Subcommands: generate canonical instances, solve empirical datasets and
grids, apply morphology to masks, sweep epsilon, and run the invariant
suite against an instance file.  Every command is deterministic given its
inputs and flags; reruns produce byte-identical outputs.

Exit codes: 0 ok, 2 input error, 3 internal consistency failure.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import empirical as emp
from . import graphcut, morphology
from .core import (
    EmpiricalDataset,
    GridMeasure,
    InputError,
    InternalError,
    MetricSpec,
    ball_stencil,
    distance,
    load_dataset,
    load_grid,
    save_dataset,
    save_grid,
)
from .functionals import (
    ClassifierMask,
    adversarial_risk_empirical,
    adversarial_risk_grid,
    coarea_tv,
    morphological_risk,
    pre_perimeter_grid,
    pre_tv_grid,
    risk_breakdown_empirical,
    risk_breakdown_grid,
    ScalarField,
)

OK, USAGE_ERROR, INTERNAL_ERROR = 0, 2, 3


def _metric(text: str) -> MetricSpec:
    return MetricSpec.from_string(text)


def _eps_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError:
        raise InputError(f"cannot parse epsilon list {text!r}") from None


# ---------------------------------------------------------------------------
# Instance generators
# ---------------------------------------------------------------------------


def _gen_two_deltas(args) -> int:
    ds = EmpiricalDataset.from_points([(-1.0,), (1.0,)], [0, 1])
    save_dataset(args.out, ds)
    print(f"wrote {args.out}")
    return OK


def _gen_four_squares(args) -> int:
    n = args.cells
    if n < 2 or n % 2:
        raise InputError("four-squares needs an even cell count >= 2")
    h = 2.0 / n
    dens0 = np.zeros((n, n))
    dens1 = np.zeros((n, n))
    cell_mass = 1.0 / (n * n)
    for i in range(n):
        for j in range(n):
            x = -1.0 + (i + 0.5) * h
            y = -1.0 + (j + 0.5) * h
            if x * y > 0.0:
                dens1[i, j] = cell_mass
            else:
                dens0[i, j] = cell_mass
    gm = GridMeasure.create((n, n), (h, h), (-1.0, -1.0), dens0, dens1)
    save_grid(args.out, gm)
    print(f"wrote {args.out}")
    return OK


def _gen_two_clusters(args) -> int:
    rng = np.random.default_rng(args.seed)
    n = args.n
    pts0 = rng.normal(loc=(-1.0, 0.0), scale=args.spread, size=(n, 2))
    pts1 = rng.normal(loc=(1.0, 0.0), scale=args.spread, size=(n, 2))
    points = [tuple(p) for p in pts0] + [tuple(p) for p in pts1]
    labels = [0] * n + [1] * n
    save_dataset(args.out, EmpiricalDataset.from_points(points, labels))
    print(f"wrote {args.out}")
    return OK


def cmd_gen(args) -> int:
    if args.case == "two-deltas":
        return _gen_two_deltas(args)
    if args.case == "four-squares":
        return _gen_four_squares(args)
    if args.case == "two-clusters":
        return _gen_two_clusters(args)
    raise InputError(f"unknown case {args.case!r}")


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------


def cmd_solve_empirical(args) -> int:
    ds = load_dataset(args.dataset)
    metric = _metric(args.metric)
    risk, cert = emp.optimal_risk(ds, args.epsilon, metric)
    classifier = emp.build_classifier(ds, cert, args.epsilon, metric)
    achieved = adversarial_risk_empirical(classifier, ds, args.epsilon)
    if achieved != risk:
        raise InternalError(
            f"classifier risk {achieved!r} != certified value {risk!r}"
        )
    breakdown = risk_breakdown_empirical(classifier, ds, args.epsilon)
    with open(args.out + ".risk", "w", encoding="utf-8") as fh:
        fh.write(breakdown.to_text())
    emp.save_certificate(args.out + ".cover", cert)
    emp.save_classifier(args.out + ".classifier", classifier)
    print(f"optimal adversarial risk {risk!r}")
    print(f"wrote {args.out}.risk {args.out}.cover {args.out}.classifier")
    return OK


def cmd_solve_grid(args) -> int:
    gm = load_grid(args.grid)
    metric = _metric(args.metric)
    stencil = ball_stencil(gm, args.epsilon, metric)
    solution = graphcut.solve_mincut(
        graphcut.assemble_energy(gm, stencil), scale=args.scale
    )
    fmt = "p1" if gm.ndim == 2 else "csv"
    morphology.save_mask(args.out + ".mask", solution.mask, fmt)
    morphology.save_mask(args.out + ".min.mask", solution.a_min, fmt)
    morphology.save_mask(args.out + ".max.mask", solution.a_max, fmt)
    breakdown = risk_breakdown_grid(solution.mask, gm, stencil)
    with open(args.out + ".value", "w", encoding="utf-8") as fh:
        fh.write(breakdown.to_text())
        fh.write(f"scaled_value={solution.scaled_value}\n")
        fh.write(f"scale={solution.scale}\n")
        fh.write(f"scaling_error_bound={solution.scaling_error_bound!r}\n")
    print(f"optimal adversarial risk {solution.value!r}")
    print(f"wrote {args.out}.mask {args.out}.min.mask {args.out}.max.mask {args.out}.value")
    return OK


def cmd_morph(args) -> int:
    gm = load_grid(args.grid)
    mask = morphology.load_mask(args.mask, gm)
    stencil = ball_stencil(gm, args.epsilon, _metric(args.metric))
    ops = {
        "dilate": morphology.dilate,
        "erode": morphology.erode,
        "open": morphology.opening,
        "close": morphology.closing,
    }
    if args.op not in ops:
        raise InputError(f"unknown morphology op {args.op!r}")
    result = ops[args.op](mask, stencil)
    fmt = "p1" if gm.ndim == 2 else "csv"
    morphology.save_mask(args.out, result, fmt)
    print(f"wrote {args.out}")
    return OK


def cmd_sweep(args) -> int:
    epsilons = _eps_list(args.eps_list)
    kind = _sniff_instance(args.instance)
    if kind == "grid":
        gm = load_grid(args.instance)
        rows = graphcut.sweep_grid(gm, epsilons, _metric(args.metric), args.scale)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("epsilon,value,perimeter_part,empirical_part\n")
            for e, value, per, empv in rows:
                fh.write(f"{e!r},{value!r},{per!r},{empv!r}\n")
    else:
        ds = load_dataset(args.instance)
        report = emp.sweep_epsilon(ds, epsilons, _metric(args.metric))
        emp.save_path_report(args.out, report)
    print(f"wrote {args.out}")
    return OK


def _sniff_instance(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                return "grid" if line.strip().lower().startswith("dims") else "dataset"
    return "dataset"


# ---------------------------------------------------------------------------
# Property checks
# ---------------------------------------------------------------------------


def _check_dataset(ds: EmpiricalDataset, seed: int) -> list[tuple[str, bool]]:
    from . import oracle

    rng = np.random.default_rng(seed)
    metric = MetricSpec(2.0)
    coords = np.asarray(ds.points, dtype=float)
    spread = float((coords.max(axis=0) - coords.min(axis=0)).max()) or 1.0
    epsilons = sorted(float(e) for e in rng.uniform(0.0, 0.8 * spread + 1e-6, 4))
    results = []

    duality_ok = True
    monotone_ok = True
    certificate_ok = True
    attack_ok = True
    previous = -math.inf
    for e in [0.0] + epsilons:
        risk, cert = emp.optimal_risk(ds, e, metric)
        duality_ok &= cert.matching_value == cert.cover_value == risk
        duality_ok &= emp.ot_dual_value(ds, e, metric) == risk
        monotone_ok &= risk >= previous
        monotone_ok &= risk <= min(ds.w0, ds.w1) + 1e-12
        previous = risk
        classifier = emp.build_classifier(ds, cert, e, metric)
        certificate_ok &= adversarial_risk_empirical(classifier, ds, e) == risk
        for _ in range(20):
            attacked = 0.0
            for i, (x, lab) in enumerate(zip(ds.points, ds.labels)):
                targets = [
                    q for q in ds.points if e > 0.0 and distance(metric, x, q) < e
                ] or [x]
                y = targets[int(rng.integers(len(targets)))]
                wrong = classifier.contains_point(y) != bool(lab)
                attacked += ds.masses[i] * wrong
            attack_ok &= attacked <= risk + 1e-9
    results.append(("duality (matching = cover = risk = ot-dual)", duality_ok))
    results.append(("epsilon monotonicity and trivial bound", monotone_ok))
    results.append(("classifier achieves certified value", certificate_ok))
    results.append(("sampled attacks never beat the certificate", attack_ok))
    if ds.n <= 12:
        e = epsilons[-1]
        value, _ = oracle.brute_force_empirical(ds, e, metric)
        risk, _ = emp.optimal_risk(ds, e, metric)
        results.append(("brute-force agreement", float(value) == risk))
    return results


def _check_grid(gm: GridMeasure, seed: int) -> list[tuple[str, bool]]:
    from . import morphology as morph

    rng = np.random.default_rng(seed)
    metric = MetricSpec(2.0)
    h = min(gm.spacing)
    results = []

    decomposition_ok = True
    submodular_ok = True
    coarea_ok = True
    morphology_ok = True
    for _ in range(10):
        eps = float(rng.uniform(0.0, 3.0 * h))
        stencil = ball_stencil(gm, eps, metric)
        bits_a = rng.random(gm.dims) < 0.5
        bits_b = rng.random(gm.dims) < 0.5
        a = ClassifierMask.from_bits(gm, bits_a)
        b = ClassifierMask.from_bits(gm, bits_b)
        breakdown = risk_breakdown_grid(a, gm, stencil)
        gap = breakdown.adversarial_risk - (
            breakdown.empirical_risk + stencil.epsilon * breakdown.pre_perimeter
        )
        decomposition_ok &= abs(gap) <= 1e-10
        decomposition_ok &= (
            morphological_risk(a, gm, stencil) == breakdown.adversarial_risk
        )
        per = lambda m: pre_perimeter_grid(m, gm, stencil)
        submodular_ok &= per(a.union(b)) + per(a.intersection(b)) <= per(a) + per(
            b
        ) + 1e-10
        u = ScalarField.from_values(
            gm, rng.choice(np.linspace(0.0, 1.0, 5), size=gm.dims)
        )
        coarea_ok &= abs(
            coarea_tv(u, gm, stencil) - pre_tv_grid(u, gm, stencil)
        ) <= 1e-10
        opened = morph.opening(a, stencil)
        closed = morph.closing(a, stencil)
        risk = lambda m: adversarial_risk_grid(m, gm, stencil)
        morphology_ok &= risk(opened) <= risk(a) and risk(closed) <= risk(a)
        morphology_ok &= morph.erode(a, stencil).same_as(
            morph.dilate(a.complement(), stencil).complement()
        )
    results.append(("decomposition identity", decomposition_ok))
    results.append(("pre-perimeter submodularity", submodular_ok))
    results.append(("coarea formula", coarea_ok))
    results.append(("morphology identities and risk monotonicity", morphology_ok))

    eps = 1.5 * h
    stencil = ball_stencil(gm, eps, metric)
    solution = graphcut.solve_mincut(graphcut.assemble_energy(gm, stencil))
    sandwich_ok = solution.a_min.subset_of(solution.a_max)
    if gm.cell_count <= 20:
        from . import oracle

        value, optima = oracle.brute_force_grid(gm, stencil)
        sandwich_ok &= solution.value_exact == value
        sandwich_ok &= any(solution.mask.same_as(m) for m in optima)
        for m in optima:
            sandwich_ok &= solution.a_min.subset_of(m) and m.subset_of(
                solution.a_max
            )
    results.append(("min-cut optimality and extreme sandwich", sandwich_ok))
    return results


def cmd_check(args) -> int:
    kind = _sniff_instance(args.instance)
    if kind == "grid":
        results = _check_grid(load_grid(args.instance), args.seed)
    else:
        results = _check_dataset(load_dataset(args.instance), args.seed)
    failures = 0
    for name, ok in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        failures += not ok
    return INTERNAL_ERROR if failures else OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="advrobust",
        description="Optimal adversarially robust binary classifiers for "
        "empirical and gridded measures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a canonical instance")
    p.add_argument("--case", required=True, choices=["two-deltas", "four-squares", "two-clusters"])
    p.add_argument("--cells", type=int, default=32, help="grid cells per axis")
    p.add_argument("--n", type=int, default=16, help="points per cluster")
    p.add_argument("--spread", type=float, default=0.4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve-empirical", help="solve a dataset instance")
    p.add_argument("dataset")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--metric", default="2")
    p.add_argument("--out", required=True, help="output file prefix")
    p.set_defaults(func=cmd_solve_empirical)

    p = sub.add_parser("solve-grid", help="solve a grid instance")
    p.add_argument("grid")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--metric", default="2")
    p.add_argument("--scale", type=int, default=graphcut.DEFAULT_SCALE)
    p.add_argument("--out", required=True, help="output file prefix")
    p.set_defaults(func=cmd_solve_grid)

    p = sub.add_parser("morph", help="apply a morphology operator to a mask")
    p.add_argument("mask")
    p.add_argument("--grid", required=True, help="grid file fixing the geometry")
    p.add_argument("--op", required=True, choices=["dilate", "erode", "open", "close"])
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--metric", default="2")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_morph)

    p = sub.add_parser("sweep", help="solve along an epsilon list")
    p.add_argument("instance")
    p.add_argument("--eps-list", required=True)
    p.add_argument("--metric", default="2")
    p.add_argument("--scale", type=int, default=graphcut.DEFAULT_SCALE)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", help="run the invariant suite on an instance")
    p.add_argument("instance")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except InternalError as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
