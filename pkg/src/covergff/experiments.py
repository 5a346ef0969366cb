"""Cover-time estimation pipeline, experiment suites and the acceptance checks.

The estimator is ``|E| (E sup eta)^2`` with ``|E|`` half the total
conductance.  Every check returns a :class:`CriterionResult` so the CLI
``full`` suite and the test-suite share one implementation.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy
from scipy import stats

from . import __version__
from . import eulerian as eu
from . import isomorphism as iso
from . import network as nw
from . import spectral as sp
from . import tree_coupling as tc
from . import walk
from .gff import detection_experiment, estimate_sup, sample_gff_tree_matrix, summarize_sup

SCHEMA_VERSION = 1
SUITES = ("smoke", "ray-knight", "coupling", "concentration", "eulerian", "estimator-trend", "full")
Z95 = 1.959963984540054


class ExperimentError(ValueError):
    pass


# ------------------------------------------------------------------ configuration


@dataclass
class ExperimentConfig:
    graph: str = "path:5"  # file path or family spec such as ``binary-tree:6``
    root: int = 0
    seed: int = 0
    suite: str = "smoke"
    sup_samples: int = 10_000
    cover_runs: int = 1000
    walk_runs: int = 10_000
    t_values: list = field(default_factory=lambda: [0.5, 2.0])
    epsilon: float = 0.5
    output_dir: str = "covergff-out"
    workers: int = 1
    simulate: bool = True

    def __post_init__(self):
        for name in ("sup_samples", "cover_runs", "walk_runs", "workers"):
            if getattr(self, name) <= 0:
                raise ExperimentError(f"{name} must be positive")
        if any(t <= 0 for t in self.t_values):
            raise ExperimentError("t values must be positive")
        if not 0 <= self.epsilon <= 1:
            raise ExperimentError("epsilon must lie in [0, 1]")
        if self.suite not in SUITES:
            raise ExperimentError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ExperimentError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def network(self) -> nw.Network:
        return nw.resolve_network(self.graph, self.root)


# ------------------------------------------------------------------ estimator


@dataclass
class CoverEstimate:
    edges: float
    mean_sup: float
    sup_stderr: float
    estimate: float
    confidence: tuple  # 95% delta-method interval
    t_hit_exact: float
    gate_ratio: float  # t_hit / estimate
    gate_threshold: float  # eps^4 / (10^4 Delta^2), C taken as 1
    gate_pass: bool
    gate_label: str = "heuristic (C=1)"
    simulated_cover: float | None = None
    simulated_stderr: float | None = None
    cover_start: int | None = None
    ratio: float | None = None  # simulated / estimate
    upper_sanity: bool | None = None  # simulated <= 2 estimate, qualitative
    warnings: list = field(default_factory=list)


def sup_statistics(net: nw.Network, count: int, seed: int, workers: int = 1):
    """Supremum statistics; trees use the edge-increment sampler."""
    if nw.is_tree(net):
        H = sample_gff_tree_matrix(net, count, seed)
        return summarize_sup(net, H.max(axis=1), seed, bootstrap=0)
    return estimate_sup(net, count, seed, bootstrap=0, workers=workers)


def candidate_starts(net: nw.Network) -> list:
    """Root, the vertex farthest from it and the resistance centre."""
    R = sp.resistance_matrix(net)
    far = int(np.argmax(R[net.root]))
    centre = int(np.argmin(R.max(axis=1)))
    return sorted({net.root, far, centre})


def worst_start_cover(net: nw.Network, runs: int, seed: int, workers: int = 1, starts=None):
    """``(mean, stderr, start)`` for the candidate start with the largest mean cover time."""
    best = None
    for s in starts if starts is not None else candidate_starts(net):
        tau, _ = walk.cover_times(net, s, runs, seed, workers)
        row = (float(tau.mean()), float(tau.std(ddof=1) / math.sqrt(runs)), s)
        if best is None or row[0] > best[0]:
            best = row
    return best


def estimate_cover_time(
    net: nw.Network, sup_samples: int = 10_000, seed: int = 0, epsilon: float = 0.5,
    cover_runs: int = 0, workers: int = 1, starts=None,
) -> CoverEstimate:
    warnings = []
    if net.max_degree > 10:
        warnings.append(f"maximum degree {net.max_degree} is large; the estimator assumes bounded degree")
    sup = sup_statistics(net, sup_samples, seed, workers)
    edges = net.total_conductance / 2
    S = sup.mean_sup
    est = edges * S * S
    half = Z95 * 2 * edges * abs(S) * sup.stderr
    thit = sp.max_hitting_time(net)
    threshold = epsilon**4 / (1e4 * net.max_degree**2)
    ce = CoverEstimate(
        edges=edges,
        mean_sup=S,
        sup_stderr=sup.stderr,
        estimate=est,
        confidence=(est - half, est + half),
        t_hit_exact=thit,
        gate_ratio=thit / est,
        gate_threshold=threshold,
        gate_pass=thit <= threshold * est,
        warnings=warnings,
    )
    if cover_runs:
        m, se, s = worst_start_cover(net, cover_runs, seed, workers, starts)
        ce.simulated_cover, ce.simulated_stderr, ce.cover_start = m, se, s
        ce.ratio = m / est
        ce.upper_sanity = m <= 2 * est
    return ce


def ratio_stderr(ce: CoverEstimate) -> float:
    """Delta-method stderr of simulated / estimate."""
    rel = math.hypot(ce.simulated_stderr / ce.simulated_cover, 2 * ce.sup_stderr / ce.mean_sup)
    return ce.ratio * rel


# ------------------------------------------------------------------ concentration


@dataclass
class ConcentrationRow:
    label: str
    vertices: int
    mean_cover: float
    sd_cover: float
    dispersion: float  # sd / mean
    t_hit: float
    sqrt_hit_ratio: float  # sqrt(t_hit / mean)
    estimate: float
    normalized_tails: list  # P(|tau - estimate| / sqrt(estimate t_hit) >= lam)


@dataclass
class ConcentrationReport:
    rows: list
    lambdas: list

    @property
    def decreasing(self) -> bool:
        d = [r.dispersion for r in self.rows]
        return all(a > b for a, b in zip(d, d[1:]))


def aldous_concentration_experiment(nets, runs: int, seed: int, sup_samples: int = 10_000, lambdas=(1, 2, 4),
                                    workers: int = 1) -> ConcentrationReport:
    """Relative spread of the cover time from the root along a family ``[(label, net), ...]``."""
    rows = []
    for label, net in nets:
        tau, _ = walk.cover_times(net, net.root, runs, seed, workers)
        thit = sp.max_hitting_time(net)
        S = sup_statistics(net, sup_samples, seed, workers).mean_sup
        est = net.total_conductance / 2 * S * S
        dev = np.abs(tau - est) / math.sqrt(est * thit)
        m, sd = float(tau.mean()), float(tau.std(ddof=1))
        rows.append(ConcentrationRow(label, net.n, m, sd, sd / m, thit, math.sqrt(thit / m), est,
                                     [float(np.mean(dev >= lam)) for lam in lambdas]))
    return ConcentrationReport(rows, list(lambdas))


# ------------------------------------------------------------------ acceptance checks


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: dict
    seconds: float = 0.0

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.name} ({self.seconds:.1f}s)"


def _bonferroni_ks(a: np.ndarray, b: np.ndarray, cols, level=1e-3):
    p = [float(stats.ks_2samp(a[:, v], b[:, v], method="asymp").pvalue) for v in cols]
    return min(p) >= level / max(len(cols), 1), p


def criterion_ray_knight(samples=100_000, seed=101):
    nets = {"edge": nw.single_edge(), "path5": nw.path_graph(5), "tree10": nw.random_tree(10, seed=3)}
    ok, detail = True, {}
    for name, net in nets.items():
        for t in (0.5, 2.0):
            r = iso.ray_knight_two_sample(net, t, samples, seed)
            ok &= r.ks_pass and r.local_time_mean_pass
            detail[f"{name}/t={t}"] = {"min_ks_p": min(r.ks_pvalue), "ks_pass": r.ks_pass,
                                       "local_time_mean_pass": r.local_time_mean_pass,
                                       "moments_pass": r.moments_pass}
    return ok, detail


def criterion_baby(samples=100_000, seed=102):
    ok, detail = True, {}
    for ell in (0.0, 1.0, 4.0):
        r = iso.baby_iso_check(ell, (0.5, 1.0, 2.0), samples, seed)
        ok &= r.passed
        detail[f"ell={ell}"] = {"closed_form": r.closed_form, "lhs": r.lhs, "rhs": r.rhs}
    anchor = iso.baby_laplace(0.0, 1.0)
    ok &= abs(anchor - 0.70711) < 5e-6
    detail["anchor"] = anchor
    return ok, detail


def criterion_coupling(samples=10_000, seed=103):
    tree = nw.random_tree(50, seed=4)
    L, H = tc.coupled_samples(tree, 1.0, samples, seed)
    viol = tc.domination_violations(L, H, 1.0)
    R = tc.recursive_local_times(tree, 1.0, samples, seed + 1)
    G = sample_gff_tree_matrix(tree, samples, seed + 2)
    cols = [v for v in range(tree.n) if v != tree.root]
    # one family of 2 (n - 1) tests, Bonferroni over all of them
    pl = [float(stats.ks_2samp(L[:, v], R[:, v], method="asymp").pvalue) for v in cols]
    pg = [float(stats.ks_2samp(H[:, v], G[:, v], method="asymp").pvalue) for v in cols]
    level = 1e-3 / (2 * len(cols))
    ok = viol == 0 and min(pl + pg) >= level
    return ok, {"violations": viol, "min_p_local_time": min(pl), "min_p_field": min(pg), "level": level}


def criterion_recursive(samples=10_000, seed=104):
    ok, detail = True, {}
    for name, tree in (("binary3", nw.binary_tree(3)), ("random30", nw.random_tree(30, seed=5))):
        a = tc.recursive_local_times(tree, 1.0, samples, seed)
        b = walk.sample_local_times(tree, 1.0, samples, seed + 1).local_times
        cols = [v for v in range(tree.n) if v != tree.root]
        good, p = _bonferroni_ks(a, b, cols)
        ok &= good
        detail[name] = {"min_p": min(p), "tests": len(cols)}
    return ok, detail


def criterion_best(max_vertices=4, max_total=8):
    graphs = list(eu.eulerian_sweep(max_vertices, max_total))
    mismatches, roots_bad, paths_bad = 0, 0, 0
    for g in graphs:
        try:
            best = eu.best_circuit_count(g)
        except AssertionError:
            roots_bad += 1
            continue
        mismatches += best.ec != eu.brute_force_circuits(g)
        for v in range(g.n):
            try:
                paths_bad += eu.path_count(g, v) != eu.brute_force_paths(g, v)
            except AssertionError:
                paths_bad += 1
    checked, nested_bad = eu.nested_pairs_check(graphs)
    ok = not (mismatches or roots_bad or paths_bad or nested_bad)
    return ok, {"graphs": len(graphs), "best_mismatches": mismatches, "root_dependent": roots_bad,
                "path_count_failures": paths_bad, "nested_pairs": checked, "nested_failures": len(nested_bad)}


def _covering_paths(net, t, count, seed):
    out = []
    for tr in walk.iter_traces(net, t, 50 * count, seed):
        if np.all(tr.local_times > 0):
            out.append((eu.strip_self_jumps(tr.embedded_path), tr.local_times))
            if len(out) == count:
                return out
    raise ExperimentError("too few covering paths")


def criterion_cycle_reversal(count=1000, seed=106):
    net = nw.load_network("0 1 1.0\n1 2 2.0\n2 3 0.5\n3 0 1.5\n0 2 0.7\n1 1 1.0")
    g = np.random.default_rng(seed)
    worst = 0.0
    for p, ell in _covering_paths(net, 3.0, count, seed):
        pairs = [(i, j) for i in range(len(p)) for j in range(i + 2, len(p)) if p[i] == p[j]]
        i, j = pairs[g.integers(len(pairs))]
        q = eu.reverse_internal_cycle(p, i, j)
        worst = max(worst, abs(eu.path_weight(p, ell, net).log_value - eu.path_weight(q, ell, net).log_value))
    return worst <= 1e-9, {"paths": count, "max_log_gap": worst}


def criterion_path_law(runs=100_000, seed=107):
    cmp = eu.walk_path_law(nw.single_edge(), [2.0, 2.0], runs, seed)
    return cmp.passed, {"accepted": cmp.accepted, "max_gap_se": cmp.max_gap,
                        "observed": cmp.observed.tolist(), "predicted": cmp.predicted.tolist()}


def criterion_line(n=200, runs=2000, sup_samples=10_000, seed=108):
    ce = estimate_cover_time(nw.path_graph(n), sup_samples, seed, cover_runs=runs)
    return 1.77 <= ce.ratio <= 2.16, {"ratio": ce.ratio, "ratio_stderr": ratio_stderr(ce),
                                      "target": 5 * math.pi / 8, "simulated": ce.simulated_cover,
                                      "estimate": ce.estimate, "start": ce.cover_start}


def criterion_tree_trend(depths=(6, 8, 10), runs=2000, sup_samples=10_000, seed=109):
    ratios, ses = [], []
    for d in depths:
        tree = nw.binary_tree(d)
        ce = estimate_cover_time(tree, sup_samples, seed, cover_runs=runs, starts=[0, tree.n - 1])
        ratios.append(ce.ratio)
        ses.append(ratio_stderr(ce))
    ok = all(a > b for a, b in zip(ratios, ratios[1:])) and ratios[-1] <= 1.6
    return ok, {"depths": list(depths), "ratios": ratios, "ratio_stderr": ses}


def criterion_ilt_tails(runs=10_000, seed=110):
    r = walk.inverse_local_time_tails(nw.binary_tree(6), 1.0, runs, seed)
    return r.passed, {"empirical": r.empirical, "bound": r.bound}


def criterion_detection(samples=1_000_000, seed=111):
    r = detection_experiment(nw.ladder_graph(15), 0.5, samples, seed)
    return r.passed, {"empirical": r.empirical_probability, "stderr": r.stderr, "bound": r.bound, "M": r.M,
                      "max_degree": r.max_degree}


def small_graphs(max_n=4) -> list:
    """Connected unit graphs on 2..max_n vertices, one per isomorphism class, rooted at 0."""
    from itertools import combinations, permutations

    out = []
    for n in range(2, max_n + 1):
        pairs = list(combinations(range(n), 2))
        seen = set()
        for r in range(n - 1, len(pairs) + 1):
            for es in combinations(pairs, r):
                key = min(tuple(sorted(tuple(sorted((p[a], p[b]))) for a, b in es)) for p in permutations(range(n)))
                if key in seen:
                    continue
                seen.add(key)
                try:
                    out.append(nw.from_edges(list(es), n=n))
                except nw.DisconnectedError:
                    pass
    return out


def criterion_exact_oracles(runs=100_000, seed=112):
    nets = small_graphs() + [nw.path_graph(7), nw.cycle_graph(6), nw.binary_tree(3), nw.random_tree(12, seed=6),
                             nw.load_network("0 1 2.0\n1 2 0.5\n2 0 1.0\n1 1 3.0\n2 3 1.5")]
    worst_rel = 0.0
    for net in nets:
        H = sp.hitting_time_matrix(net)
        R = sp.resistance_matrix(net)
        C = H + H.T
        target = net.total_conductance * R
        mask = ~np.eye(net.n, dtype=bool)
        worst_rel = max(worst_rel, float(np.max(np.abs(C[mask] - target[mask]) / target[mask])))
    gaps = []
    for net in small_graphs():
        tau, _ = walk.cover_times(net, 0, runs, seed)
        exact = walk.exact_cover_time(net, 0)
        gaps.append(abs(tau.mean() - exact) / (tau.std(ddof=1) / math.sqrt(runs)))
    ok = worst_rel <= 1e-9 and max(gaps) <= 3
    return ok, {"commute_max_rel_err": worst_rel, "cover_gaps_se": gaps}


CRITERIA = {
    1: ("Ray-Knight identity", criterion_ray_knight),
    2: ("one-vertex isomorphism", criterion_baby),
    3: ("tree coupling domination", criterion_coupling),
    4: ("recursive tree sampler", criterion_recursive),
    5: ("BEST and path counts sweep", criterion_best),
    6: ("cycle reversal invariance", criterion_cycle_reversal),
    7: ("conditioned path law", criterion_path_law),
    8: ("line graph negative control", criterion_line),
    9: ("binary tree trend", criterion_tree_trend),
    10: ("inverse local time tails", criterion_ilt_tails),
    11: ("GFF window detection", criterion_detection),
    12: ("exact oracles", criterion_exact_oracles),
}


def run_criterion(number: int, **kwargs) -> CriterionResult:
    name, fn = CRITERIA[number]
    t0 = time.perf_counter()
    ok, detail = fn(**kwargs)
    return CriterionResult(number, name, bool(ok), detail, time.perf_counter() - t0)


# ------------------------------------------------------------------ suites


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(_fmt(x))
    return x


class _Sink:
    def __init__(self):
        self.rows = []
        self.verdicts = {}

    def add(self, suite, item, metric, value):
        self.rows.append((suite, item, metric, _fmt(value)))

    def verdict(self, name, ok, **info):
        self.verdicts[name] = {"passed": bool(ok), **_jsonable(info)}


def _suite_smoke(cfg, net, out):
    R = sp.resistance_matrix(net)
    out.add("smoke", "network", "vertices", net.n)
    out.add("smoke", "network", "resistance_diameter", float(R.max()))
    out.add("smoke", "network", "max_hitting_time", sp.max_hitting_time(net))
    ce = estimate_cover_time(net, min(cfg.sup_samples, 2000), cfg.seed, cfg.epsilon,
                             cover_runs=min(cfg.cover_runs, 200) if cfg.simulate else 0, workers=cfg.workers)
    for k in ("estimate", "mean_sup", "t_hit_exact", "gate_ratio"):
        out.add("smoke", "estimator", k, getattr(ce, k))
    rk = iso.ray_knight_two_sample(net, cfg.t_values[0], 2000, cfg.seed, workers=cfg.workers)
    out.verdict("smoke/ray-knight", rk.ks_pass, min_ks_p=min(rk.ks_pvalue))
    baby = iso.baby_iso_check(1.0, (0.5, 1.0, 2.0), 5000, cfg.seed)
    out.verdict("smoke/baby", baby.passed)
    ok, d = criterion_best(3, 5)
    out.verdict("smoke/best", ok, **d)


def _suite_ray_knight(cfg, net, out):
    for t in cfg.t_values:
        r = iso.ray_knight_two_sample(net, t, cfg.walk_runs, cfg.seed, workers=cfg.workers)
        for v, p, m, th in zip(r.vertices, r.ks_pvalue, r.lhs_mean, r.theory_mean):
            out.add("ray-knight", f"t={t}/v={v}", "ks_pvalue", p)
            out.add("ray-knight", f"t={t}/v={v}", "lhs_mean", m)
            out.add("ray-knight", f"t={t}/v={v}", "theory_mean", th)
        out.verdict(f"ray-knight/t={t}", r.passed and r.local_time_mean_pass)


def _suite_coupling(cfg, net, out):
    if not nw.is_tree(net):
        raise ExperimentError("the coupling suite needs a tree")
    for t in cfg.t_values:
        L, H = tc.coupled_samples(net, t, cfg.walk_runs, cfg.seed, cfg.workers)
        viol = tc.domination_violations(L, H, t)
        out.add("coupling", f"t={t}", "violations", viol)
        out.add("coupling", f"t={t}", "mean_local_time", float(L[:, 1:].mean()) if net.n > 1 else t)
        out.verdict(f"coupling/t={t}", viol == 0)


def _suite_concentration(cfg, net, out):
    tails = walk.inverse_local_time_tails(net, cfg.t_values[0], cfg.walk_runs, cfg.seed, workers=cfg.workers)
    for lam, p, b in zip(tails.lambdas, tails.empirical, tails.bound):
        out.add("concentration", f"lambda={lam}", "tau_tail", p)
        out.add("concentration", f"lambda={lam}", "tau_bound", b)
    out.verdict("concentration/tau-tails", tails.passed)
    if nw.is_tree(net):
        rep = tc.tree_concentration_experiment(net, cfg.cover_runs, cfg.seed, cfg.sup_samples, workers=cfg.workers)
        for lam, p in zip(rep.lambdas, rep.tails):
            out.add("concentration", f"lambda={lam}", "cover_tail", p)
        out.verdict("concentration/tree-tails-nonincreasing", rep.nonincreasing, slope=rep.slope)


def _suite_eulerian(cfg, net, out):
    ok, d = criterion_best()
    for k, v in d.items():
        out.add("eulerian", "sweep", k, v)
    out.verdict("eulerian/sweep", ok)


def _suite_trend(cfg, net, out):
    ok, d = criterion_tree_trend(runs=cfg.cover_runs, sup_samples=cfg.sup_samples, seed=cfg.seed)
    for depth, r, s in zip(d["depths"], d["ratios"], d["ratio_stderr"]):
        out.add("estimator-trend", f"binary-tree:{depth}", "ratio", r)
        out.add("estimator-trend", f"binary-tree:{depth}", "ratio_stderr", s)
    out.verdict("estimator-trend/binary-trees", ok)
    ok, d = criterion_line(runs=cfg.cover_runs, sup_samples=cfg.sup_samples, seed=cfg.seed)
    out.add("estimator-trend", "path:200", "ratio", d["ratio"])
    out.verdict("estimator-trend/line-control", ok, ratio=d["ratio"], target=d["target"])
    conc = aldous_concentration_experiment([(f"binary-tree:{h}", nw.binary_tree(h)) for h in (5, 6, 7, 8, 9)],
                                           cfg.cover_runs, cfg.seed, cfg.sup_samples, workers=cfg.workers)
    for row in conc.rows:
        out.add("estimator-trend", row.label, "dispersion", row.dispersion)
        out.add("estimator-trend", row.label, "sqrt_hit_ratio", row.sqrt_hit_ratio)
    out.verdict("estimator-trend/dispersion-decreasing", conc.decreasing)


def _suite_full(cfg, net, out):
    for k in CRITERIA:
        r = run_criterion(k)
        out.add("full", f"criterion-{k}", "passed", r.passed)
        out.add("full", f"criterion-{k}", "seconds", r.seconds)
        out.verdict(f"criterion-{k}", r.passed, name=r.name, detail=r.detail)


_SUITES = {
    "smoke": _suite_smoke,
    "ray-knight": _suite_ray_knight,
    "coupling": _suite_coupling,
    "concentration": _suite_concentration,
    "eulerian": _suite_eulerian,
    "estimator-trend": _suite_trend,
    "full": _suite_full,
}


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run one suite and write ``results.csv``, ``verdicts.json`` and ``manifest.json``."""
    if cfg.suite not in _SUITES:
        raise ExperimentError(f"unknown suite {cfg.suite!r}")
    net = cfg.network()
    t0 = time.perf_counter()
    out = _Sink()
    _SUITES[cfg.suite](cfg, net, out)
    wall = time.perf_counter() - t0
    d = Path(cfg.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "item", "metric", "value"])
    w.writerows(out.rows)
    (d / "results.csv").write_text(buf.getvalue())
    (d / "verdicts.json").write_text(json.dumps({"schema": SCHEMA_VERSION, "verdicts": out.verdicts},
                                                indent=2, sort_keys=True) + "\n")
    manifest = {
        "schema": SCHEMA_VERSION,
        "config": asdict(cfg),
        "versions": {"covergff": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "wall_seconds": wall,
    }
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return {"verdicts": out.verdicts, "rows": len(out.rows), "wall_seconds": wall, "output_dir": str(d)}
