"""Command line entry point: ``covergff <subcommand>``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from . import eulerian as eu
from . import experiments as ex
from . import gff
from . import isomorphism as iso
from . import network as nw
from . import spectral as sp
from . import tree_coupling as tc
from . import walk


def _emit(obj):
    if is_dataclass(obj):
        obj = asdict(obj)
    print(json.dumps(ex._jsonable(obj), indent=2, sort_keys=True))


def _net(args) -> nw.Network:
    return nw.resolve_network(args.graph, args.root)


def _ints(text: str) -> list:
    return [int(x) for x in text.split(",") if x.strip()]


def _floats(path: str) -> np.ndarray:
    return np.array([float(x) for x in Path(path).read_text().split()])


# ------------------------------------------------------------------ handlers


def cmd_resistance(a):
    net = _net(a)
    if a.matrix:
        _emit({"resistance": sp.resistance_matrix(net)})
    else:
        _emit({"u": a.u, "v": a.v, "resistance": sp.effective_resistance(net, a.u, a.v)})


def cmd_hitting(a):
    net = _net(a)
    if a.matrix:
        _emit({"hitting": sp.hitting_time_matrix(net), "t_hit": sp.max_hitting_time(net)})
    else:
        _emit({"u": a.u, "v": a.v, "hitting_time": sp.hitting_time(net, a.u, a.v),
               "commute_time": sp.commute_time(net, a.u, a.v)})


def cmd_reduce(a):
    sys.stdout.write(nw.dumps(sp.reduce_network(_net(a), _ints(a.keep))))


def cmd_gff_sample(a):
    H = gff.sample_gff_matrix(_net(a), a.count, a.seed, a.workers)
    np.savetxt(sys.stdout, H, fmt="%.17g")


def cmd_gff_sup(a):
    _emit(gff.estimate_sup(_net(a), a.samples, a.seed, workers=a.workers))


def cmd_gff_detect(a):
    _emit(gff.detection_experiment(_net(a), a.epsilon, a.samples, a.seed, M=a.M, workers=a.workers))


def cmd_estimate(a):
    _emit(ex.estimate_cover_time(_net(a), a.samples, a.seed, a.epsilon, a.runs, a.workers))


def cmd_walk_cover(a):
    net = _net(a)
    tau, ret = walk.cover_times(net, a.start, a.runs, a.seed, a.workers)
    out = {"start": a.start, "runs": a.runs, "mean": tau.mean(), "stderr": tau.std(ddof=1) / np.sqrt(a.runs)
           if a.runs > 1 else float("nan"), "mean_return": ret.mean()}
    if a.exact:
        out["exact"] = walk.exact_cover_time(net, a.start)
    _emit(out)


def cmd_walk_ilt(a):
    b = walk.sample_local_times(_net(a), a.t, a.runs, a.seed, a.backend, a.workers)
    _emit({"t": a.t, "mean_local_time": b.local_times.mean(axis=0), "mean_tau": b.tau.mean(),
           "mean_excursions": b.excursion_counts.mean()})


def cmd_verify_ray_knight(a):
    r = iso.ray_knight_two_sample(_net(a), a.t, a.samples, a.seed, backend=a.backend, workers=a.workers)
    _emit({**asdict(r), "passed": r.passed, "local_time_mean_pass": r.local_time_mean_pass})


def cmd_verify_baby_iso(a):
    r = iso.baby_iso_check(a.ell, [float(x) for x in a.lambdas.split(",")], a.samples, a.seed)
    _emit({**asdict(r), "passed": r.passed})


def cmd_verify_coupling(a):
    tree = _net(a)
    L, H = tc.coupled_samples(tree, a.t, a.samples, a.seed, a.workers)
    _emit({"samples": a.samples, "violations": tc.domination_violations(L, H, a.t),
           "mean_local_time": L.mean(axis=0), "mean_field": H.mean(axis=0)})


def cmd_tree_concentration(a):
    r = tc.tree_concentration_experiment(_net(a), a.runs, a.seed, a.samples, workers=a.workers)
    _emit({**asdict(r), "nonincreasing": r.nonincreasing})


def cmd_eulerian_count(a):
    g = eu.load_multigraph(Path(a.graph).read_text())
    best = eu.best_circuit_count(g)
    out = {"ec": best.ec, "ec_v": best.ec_v, "arborescences": best.arborescences,
           "path_count": {v: eu.path_count(g, v) for v in best.ec_v}}
    if a.brute_force:
        out["brute_force"] = eu.brute_force_circuits(g)
    _emit(out)


def cmd_path_dist(a):
    net = _net(a)
    d = eu.conditioned_path_distribution(net, _floats(a.ltimes), a.cap, a.form)
    order = np.argsort(-d.probabilities)[: a.top]
    _emit({"paths": len(d.paths), "top": [{"path": d.paths[i], "probability": d.probabilities[i]} for i in order]})


def cmd_random_eulerian(a):
    w = np.loadtxt(a.weights, ndmin=2)
    model = eu.random_eulerian_model(w, a.cap)
    for g in model.sample(a.count, a.seed):
        print(json.dumps([list(r) for r in g.j]))


def cmd_experiment(a):
    cfg = json.loads(Path(a.config).read_text()) if a.config else {}
    if a.suite:
        cfg["suite"] = a.suite
    if a.output_dir:
        cfg["output_dir"] = a.output_dir
    res = ex.run_experiment(ex.ExperimentConfig.from_dict(cfg))
    for name, v in res["verdicts"].items():
        print(f"{'PASS' if v['passed'] else 'FAIL'}  {name}")
    print(f"wrote {res['rows']} rows to {res['output_dir']} in {res['wall_seconds']:.1f}s")


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="covergff", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, graph=True, seed=True, help=None):
        s = sub.add_parser(name, help=help)
        if graph:
            s.add_argument("--graph", required=True, help="edge-list file or family such as path:10")
            s.add_argument("--root", type=int, default=None)
        if seed:
            s.add_argument("--seed", type=int, default=0)
            s.add_argument("--workers", type=int, default=1)
        s.set_defaults(fn=fn)
        return s

    s = add("resistance", cmd_resistance, seed=False, help="effective resistance")
    s.add_argument("u", type=int, nargs="?", default=0)
    s.add_argument("v", type=int, nargs="?", default=1)
    s.add_argument("--matrix", action="store_true")
    s = add("hitting", cmd_hitting, seed=False, help="expected hitting and commute times")
    s.add_argument("u", type=int, nargs="?", default=0)
    s.add_argument("v", type=int, nargs="?", default=1)
    s.add_argument("--matrix", action="store_true")
    s = add("reduce", cmd_reduce, seed=False, help="Schur reduction onto a vertex subset")
    s.add_argument("--keep", required=True, help="comma separated vertices")
    s = add("gff-sample", cmd_gff_sample, help="GFF samples, one per line")
    s.add_argument("--count", type=int, default=1)
    s = add("gff-sup", cmd_gff_sup, help="statistics of the GFF supremum")
    s.add_argument("--samples", type=int, default=10_000)
    s = add("gff-detect", cmd_gff_detect, help="window detection probability")
    s.add_argument("--epsilon", type=float, default=0.5)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--M", type=float, default=None)
    s = add("estimate", cmd_estimate, help="cover-time estimate from the GFF supremum")
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--runs", type=int, default=0, help="cover runs for comparison (0 skips)")
    s.add_argument("--epsilon", type=float, default=0.5)
    s = add("walk-cover", cmd_walk_cover, help="simulated cover times")
    s.add_argument("--start", type=int, default=0)
    s.add_argument("--runs", type=int, default=1000)
    s.add_argument("--exact", action="store_true", help="also solve the exact chain (n <= 12)")
    s = add("walk-ilt", cmd_walk_ilt, help="local times at the inverse local time")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--runs", type=int, default=10_000)
    s.add_argument("--backend", choices=walk.BACKENDS, default="excursion")
    s = add("verify-ray-knight", cmd_verify_ray_knight, help="two-sample check of the isomorphism")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--samples", "--count", dest="samples", type=int, default=100_000)
    s.add_argument("--backend", choices=walk.BACKENDS, default="excursion")
    s = add("verify-baby-iso", cmd_verify_baby_iso, graph=False, help="one-vertex Laplace transform check")
    s.add_argument("--ell", type=float, required=True)
    s.add_argument("--lambdas", default="0.5,1,2")
    s.add_argument("--samples", type=int, default=100_000)
    s = add("verify-coupling", cmd_verify_coupling, help="tree coupling violation count")
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--samples", type=int, default=10_000)
    s = add("tree-concentration", cmd_tree_concentration, help="cover-time tails on a tree")
    s.add_argument("--runs", type=int, default=1000)
    s.add_argument("--samples", type=int, default=10_000)
    s = add("eulerian-count", cmd_eulerian_count, graph=False, seed=False, help="BEST counts of a multigraph")
    s.add_argument("--graph", required=True, help="'u v j' multigraph file")
    s.add_argument("--brute-force", action="store_true")
    s = add("path-dist", cmd_path_dist, seed=False, help="path law given local times")
    s.add_argument("--ltimes", required=True, help="file of local times, root entry is t")
    s.add_argument("--cap", type=int, default=10)
    s.add_argument("--form", choices=("full", "reduced"), default="full")
    s.add_argument("--top", type=int, default=20)
    s = add("random-eulerian", cmd_random_eulerian, graph=False, help="exact draws from the Eulerian model")
    s.add_argument("--weights", required=True, help="whitespace matrix of w_uv")
    s.add_argument("--cap", type=int, default=6)
    s.add_argument("--count", type=int, default=1)
    s = add("experiment", cmd_experiment, graph=False, seed=False, help="run a suite from a JSON config")
    s.add_argument("--config", default=None)
    s.add_argument("--suite", choices=ex.SUITES, default=None)
    s.add_argument("--output-dir", default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"covergff: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
