"""Command-line entry point; every table is written as CSV with a header row."""

import argparse
import csv
import math
import sys

from . import bench
from .covertree import aspect_ratio, build, load_cloud_csv, load_tree, save_cloud_csv, save_tree, verify
from .errors import DegenerateCloud, IpgError
from .sensing import MANIFOLDS, gen_gaussian, gen_manifold


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _angle(text):
    """A float, or an expression like ``pi/3`` or ``5pi/12``."""
    t = text.strip().replace(" ", "")
    if "pi" not in t:
        return float(t)
    num, _, den = t.partition("/")
    coef = num.replace("*", "").replace("pi", "")
    value = (float(coef) if coef else 1.0) * math.pi
    return value / float(den) if den else value


def _angles(text):
    return tuple(_angle(v) for v in text.split(",") if v.strip())


def _open_out(path):
    return open(path, "w", newline="") if path and path != "-" else sys.stdout


def _write(table, path):
    fh = _open_out(path)
    try:
        table.write_csv(fh)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _experiment_args(p, oracle_default, tol_default):
    p.add_argument("--dataset", default="s-curve", choices=sorted(MANIFOLDS))
    p.add_argument("--d", type=int, default=1000)
    p.add_argument("--ambient", type=int, default=50)
    p.add_argument("--J", type=int, default=20)
    p.add_argument("--ratios", "--ratio", type=_floats, default=bench.DEFAULT_RATIOS,
                   help="comma-separated m/n values")
    p.add_argument("--oracle", action="append", default=None,
                   help="exact, tree, fp:NU, pfp:NU0:R or eps:E; repeatable")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--max-iters", type=int, default=30)
    p.add_argument("--tol", type=float, default=tol_default,
                   help="objective-progress tolerance; negative disables it")
    p.add_argument("--step-scale", type=float, default=1.0, help="step is this over m")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(oracle_default=oracle_default)


def _spec(args):
    tol = args.tol if args.tol is None or args.tol >= 0 else None
    return bench.ExperimentSpec(
        dataset=args.dataset, d=args.d, ambient_dim=args.ambient, J=args.J,
        ratios=tuple(args.ratios), oracles=tuple(args.oracle or args.oracle_default),
        trials=args.trials, seed=args.seed, max_iters=args.max_iters, tol=tol,
        step_scale=args.step_scale, jobs=args.jobs)


def _gen_data(args):
    if args.operator:
        m, n = (int(v) for v in args.operator.lower().split("x"))
        op = gen_gaussian(m, n, args.seed)
        if args.out == "-":
            raise IpgError("operators must be written to a file (--out)")
        op.save_csv(args.out)
        return 0
    cloud = gen_manifold(args.dataset, args.d, args.ambient, args.seed)
    save_cloud_csv(cloud, sys.stdout if args.out == "-" else args.out)
    return 0


def _build_tree(args):
    cloud = load_cloud_csv(args.cloud)
    tree = build(cloud)
    save_tree(tree, args.out)
    print(f"built tree over {cloud.d} points: l_max={tree.l_max} sigma={tree.sigma:.6g}",
          file=sys.stderr)
    return 0


def _verify_tree(args):
    cloud = load_cloud_csv(args.cloud)
    tree = load_tree(args.tree, cloud)
    report = verify(tree, cloud)
    fh = _open_out(args.out)
    w = csv.writer(fh)
    w.writerow(["property", "status", "counterexample"])
    for c in report.checks:
        status = "skip" if c.skipped else ("pass" if c.passed else "fail")
        w.writerow([c.name, status, c.counterexample or ""])
    if fh is not sys.stdout:
        fh.close()
    return 0 if report.ok else 1


def _tree_stats(args):
    cloud = load_cloud_csv(args.cloud)
    tree = load_tree(args.tree, cloud) if args.tree else build(cloud)
    try:
        aspect = aspect_ratio(cloud)
    except DegenerateCloud:
        aspect = float("nan")
    rows = [
        ("points", tree.d),
        ("ambient_dim", tree.ambient_dim),
        ("sigma", tree.sigma),
        ("depth", tree.l_max),
        ("scales", tree.l_max + 1),
        ("finest_resolution", tree.finest_resolution),
        ("aspect_ratio", aspect),
    ]
    rows += [(f"nodes_scale_{i}", int(c)) for i, c in enumerate(tree.nodes_per_scale())]
    fh = _open_out(args.out)
    w = csv.writer(fh)
    w.writerow(["stat", "value"])
    w.writerows(rows)
    if fh is not sys.stdout:
        fh.close()
    return 0


def _converge(args):
    _write(bench.cmd_convergence(_spec(args)), args.out)
    return 0


def _phase(args):
    _write(bench.cmd_phase_transition(_spec(args)), args.out)
    return 0


def _cost(args):
    _write(bench.cmd_cost(_spec(args)), args.out)
    return 0


def _converse(args):
    _write(bench.cmd_converse(args.gammas, args.eps, args.K), args.out)
    return 0


def _bounds(args):
    table = bench.cmd_bounds(seed=args.seed, d=args.d, ambient_dim=args.ambient, J=args.J,
                             m=args.m, oracle=args.oracle, nu_g=args.nu_g,
                             max_iters=args.max_iters)
    _write(table, args.out)
    return 0


def make_parser():
    parser = argparse.ArgumentParser(
        prog="inexact-ipg",
        description="Projected gradient recovery over point-cloud models with cover-tree projections.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="sample a manifold cloud or a Gaussian operator")
    p.add_argument("--dataset", default="s-curve", choices=sorted(MANIFOLDS))
    p.add_argument("--d", type=int, default=1000)
    p.add_argument("--ambient", type=int, default=50)
    p.add_argument("--operator", help="MxN: write a Gaussian sampling operator instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_gen_data)

    p = sub.add_parser("build-tree", help="build and save a cover tree")
    p.add_argument("cloud")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_build_tree)

    p = sub.add_parser("verify-tree", help="check every tree invariant; exit 1 on failure")
    p.add_argument("cloud")
    p.add_argument("tree")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_verify_tree)

    p = sub.add_parser("tree-stats", help="depth, per-scale sizes, resolution, aspect ratio")
    p.add_argument("cloud")
    p.add_argument("--tree")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_tree_stats)

    p = sub.add_parser("converge", help="per-iteration traces")
    _experiment_args(p, ["exact"], None)
    p.set_defaults(func=_converge)

    p = sub.add_parser("phase", help="recovery grid over ratio and oracle")
    _experiment_args(p, ["eps:0.4", "eps:3"], None)
    p.set_defaults(func=_phase)

    p = sub.add_parser("cost", help="distance evaluations per oracle and ratio")
    _experiment_args(p, ["exact", "tree", "eps:0.4"], 1e-8)
    p.set_defaults(func=_cost)

    p = sub.add_parser("converse", help="adversarial line example")
    p.add_argument("--gammas", type=_angles, default=(math.pi / 3,),
                   help="comma-separated angles; forms like pi/3 are accepted")
    p.add_argument("--eps", type=_floats, default=(0.5, 0.6))
    p.add_argument("--K", type=int, default=50)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_converse)

    p = sub.add_parser("bounds", help="measured error against the theoretical bound")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d", type=int, default=60)
    p.add_argument("--ambient", type=int, default=4)
    p.add_argument("--J", type=int, default=1)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--oracle", default="fp:0.05")
    p.add_argument("--nu-g", type=float, default=0.01)
    p.add_argument("--max-iters", type=int, default=30)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_bounds)
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (IpgError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
