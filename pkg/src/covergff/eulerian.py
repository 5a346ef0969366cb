"""Directed Eulerian multigraphs and the law of a walk path given its local times.

Counting is exact: arborescences come from integer determinants (Bareiss
elimination in sympy) and factorials are Python integers.  Path weights are
kept in log space.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np
import sympy

from . import rng as rngmod
from .network import Network
from .walk import iter_traces, sample_local_times

BRUTE_FORCE_CAP = 12
THIN_CONSTANT = 1118


class NotEulerianError(ValueError):
    pass


class CapExceededError(ValueError):
    pass


# ------------------------------------------------------------------ multigraphs


@dataclass(frozen=True)
class EulerianMultigraph:
    """Directed multigraph given by integer multiplicities ``j[u][v]``, ``j[v][v] = 0``."""

    j: tuple  # tuple of tuples of int

    @staticmethod
    def from_matrix(m) -> "EulerianMultigraph":
        m = [[int(x) for x in row] for row in m]
        n = len(m)
        if any(len(row) != n for row in m):
            raise ValueError("multiplicity matrix must be square")
        for v in range(n):
            if m[v][v] != 0:
                raise ValueError("self-loops are not allowed")
        if any(x < 0 for row in m for x in row):
            raise ValueError("multiplicities must be nonnegative")
        return EulerianMultigraph(tuple(tuple(row) for row in m))

    @staticmethod
    def from_edges(n: int, edges) -> "EulerianMultigraph":
        m = [[0] * n for _ in range(n)]
        for e in edges:
            u, v = e[0], e[1]
            m[u][v] += e[2] if len(e) > 2 else 1
        return EulerianMultigraph.from_matrix(m)

    @property
    def n(self) -> int:
        return len(self.j)

    def out_degree(self, v: int) -> int:
        return sum(self.j[v])

    def in_degree(self, v: int) -> int:
        return sum(row[v] for row in self.j)

    @property
    def total(self) -> int:
        return sum(map(sum, self.j))

    def support(self) -> list:
        return [v for v in range(self.n) if self.out_degree(v) or self.in_degree(v)]

    def is_balanced(self) -> bool:
        return all(self.in_degree(v) == self.out_degree(v) for v in range(self.n))

    def is_connected(self) -> bool:
        sup = self.support()
        if not sup:
            return False
        seen = {sup[0]}
        stack = [sup[0]]
        while stack:
            x = stack.pop()
            for y in range(self.n):
                if (self.j[x][y] or self.j[y][x]) and y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == len(sup)

    def is_eulerian(self) -> bool:
        return self.total > 0 and self.is_balanced() and self.is_connected()

    def edges(self):
        for u in range(self.n):
            for v in range(self.n):
                if self.j[u][v]:
                    yield u, v, self.j[u][v]


def load_multigraph(text: str, n: int | None = None) -> EulerianMultigraph:
    """Parse ``u v j`` lines; duplicate pairs add."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'u v j'")
        try:
            u, v, k = (int(p) for p in parts)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
        rows.append((u, v, k))
    size = n if n is not None else 1 + max(max(u, v) for u, v, _ in rows)
    return EulerianMultigraph.from_edges(size, rows)


def _require_eulerian(g: EulerianMultigraph):
    if not g.is_eulerian():
        raise NotEulerianError("multigraph is not Eulerian (needs edges, balance and connectivity)")


# ------------------------------------------------------------------ counting


def arborescence_count(g: EulerianMultigraph, root: int, vertices=None) -> int:
    """Spanning arborescences directed toward ``root``, parallel edges distinguished.

    Determinant of the out-degree Laplacian with the root row and column
    removed.  ``vertices`` restricts the spanning set (default: all).
    """
    vs = list(range(g.n)) if vertices is None else sorted(vertices)
    if root not in vs:
        raise ValueError("root must be one of the vertices")
    others = [v for v in vs if v != root]
    if not others:
        return 1
    m = sympy.zeros(len(others), len(others))
    for a, u in enumerate(others):
        m[a, a] = sum(g.j[u][w] for w in vs)
        for b, v in enumerate(others):
            if u != v:
                m[a, b] -= g.j[u][v]
    return int(m.det(method="bareiss"))


@dataclass(frozen=True)
class BestCount:
    ec: int
    ec_v: dict
    arborescences: int


def best_circuit_count(g: EulerianMultigraph) -> BestCount:
    """Eulerian circuits up to rotation: ``ar * prod (deg_v - 1)!``."""
    _require_eulerian(g)
    sup = g.support()
    ars = {w: arborescence_count(g, w, sup) for w in sup}
    ar = ars[sup[0]]
    if any(a != ar for a in ars.values()):
        raise AssertionError(f"arborescence counts depend on the root: {ars}")
    ec = ar
    for v in sup:
        ec *= math.factorial(g.out_degree(v) - 1)
    return BestCount(ec, {v: g.out_degree(v) * ec for v in sup}, ar)


def brute_force_circuits(g: EulerianMultigraph, edge_cap: int = BRUTE_FORCE_CAP) -> int:
    """Count Eulerian circuits by backtracking; parallel edges distinguished.

    One representative per rotation class: the circuit starting with a fixed
    labelled copy of the first edge in ``g.edges()``.
    """
    if g.total > edge_cap:
        raise CapExceededError(f"{g.total} edges exceeds the cap {edge_cap}")
    _require_eulerian(g)
    rem = [list(row) for row in g.j]
    u, v, _ = next(g.edges())
    rem[u][v] -= 1
    left = g.total - 1

    def walk(x, left):
        if left == 0:
            return 1 if x == u else 0
        total = 0
        for y in range(g.n):
            k = rem[x][y]
            if k:
                rem[x][y] -= 1
                total += k * walk(y, left - 1)
                rem[x][y] += 1
        return total

    return walk(v, left)


def path_count(g: EulerianMultigraph, v0: int) -> int:
    """Distinct vertex sequences from ``v0`` traversing exactly ``g``: ``ec_v0 / prod j!``."""
    best = best_circuit_count(g)
    if v0 not in best.ec_v:
        raise ValueError("v0 is not on the support")
    denom = 1
    for _, _, k in g.edges():
        denom *= math.factorial(k)
    q = Fraction(best.ec_v[v0], denom)
    if q.denominator != 1:
        raise AssertionError(f"path count {q} is not an integer")
    return int(q)


def brute_force_paths(g: EulerianMultigraph, v0: int, edge_cap: int = BRUTE_FORCE_CAP) -> int:
    """Enumerate closed vertex sequences from ``v0`` that use every multiplicity exactly."""
    if g.total > edge_cap:
        raise CapExceededError(f"{g.total} edges exceeds the cap {edge_cap}")
    rem = [list(row) for row in g.j]

    def walk(x, left):
        if left == 0:
            return 1 if x == v0 else 0
        total = 0
        for y in range(g.n):
            if rem[x][y]:
                rem[x][y] -= 1
                total += walk(y, left - 1)
                rem[x][y] += 1
        return total

    return walk(v0, g.total)


def eulerian_sweep(max_vertices: int = 4, max_total: int = 8, min_vertices: int = 2):
    """Every Eulerian multigraph on ``n`` labelled vertices, all of them used,
    for ``min_vertices <= n <= max_vertices`` and total multiplicity ``<= max_total``."""
    for n in range(min_vertices, max_vertices + 1):
        pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
        m = [[0] * n for _ in range(n)]

        def rec(i, budget):
            if i == len(pairs):
                g = EulerianMultigraph.from_matrix(m)
                if g.is_eulerian() and len(g.support()) == n:
                    yield g
                return
            u, v = pairs[i]
            for k in range(budget + 1):
                m[u][v] = k
                yield from rec(i + 1, budget - k)
            m[u][v] = 0

        yield from rec(0, max_total)


def nested_pairs_check(graphs, root: int = 0):
    """Arborescence ratio inequality for nested graphs with equal support.

    Returns ``(pairs_checked, failures)`` where each failure is ``(g_small, g_big)``.
    """
    groups = defaultdict(list)
    for g in graphs:
        pattern = tuple(tuple(x > 0 for x in row) for row in g.j)
        groups[pattern].append(g)
    ar_cache = {}

    def ar(g):
        if g not in ar_cache:
            ar_cache[g] = arborescence_count(g, root)
        return ar_cache[g]

    checked, bad = 0, []
    for members in groups.values():
        for a, b in combinations(members, 2):
            for small, big in ((a, b), (b, a)):
                if all(small.j[u][v] <= big.j[u][v] for u in range(a.n) for v in range(a.n)):
                    checked += 1
                    bound = Fraction(1)
                    for u, v, k in big.edges():
                        bound *= Fraction(small.j[u][v], k)
                    if Fraction(ar(small), ar(big)) < bound:
                        bad.append((small, big))
    return checked, bad


# ------------------------------------------------------------------ path weights


@dataclass(frozen=True)
class PathWeight:
    log_value: float

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def strip_self_jumps(path) -> list:
    out = [int(path[0])]
    for x in path[1:]:
        if int(x) != out[-1]:
            out.append(int(x))
    return out


def traverse_counts(path, n: int) -> np.ndarray:
    k = np.zeros((n, n), dtype=np.int64)
    for a, b in zip(path[:-1], path[1:]):
        if a != b:
            k[a, b] += 1
    return k


def path_weight(path, local_times, net: Network, form: str = "full") -> PathWeight:
    """``W_P`` for a closed covering path given local times (``local_times[root] = t``).

    ``form="full"`` uses ``l_v^{k_v} / (k_v - 1)!``; ``form="reduced"`` uses
    ``l_v^{k_v - 1} / (k_v - 1)!``.  The two differ by ``prod_{v != root} l_v``,
    which is the same for every path.  Consecutive repeats (self-jumps) are
    dropped first; ``k_v`` counts arrivals, so at the root it is the number
    of excursions.
    """
    if form not in ("full", "reduced"):
        raise ValueError("form must be 'full' or 'reduced'")
    p = strip_self_jumps(path)
    v0 = net.root
    if p[0] != v0 or p[-1] != v0:
        raise ValueError("path must start and end at the root")
    ell = np.asarray(local_times, float)
    k = traverse_counts(p, net.n)
    kv = k.sum(axis=0)
    if np.any(kv == 0):
        raise ValueError("path must visit every vertex")
    if np.any(ell <= 0):
        raise ValueError("local times must be positive")
    c = net.conductance
    logw = 0.0
    for u, v in zip(*np.nonzero(k)):
        logw += k[u, v] * math.log(c[u, v])
    logw += kv[v0] * math.log(ell[v0]) - math.lgamma(kv[v0] + 1)
    shift = 0 if form == "full" else 1
    for v in range(net.n):
        if v != v0:
            logw += (kv[v] - shift) * math.log(ell[v]) - math.lgamma(kv[v])
    return PathWeight(float(logw))


def reverse_internal_cycle(path, i: int, j: int) -> list:
    """Reverse ``path[i..j]``, which must start and end at the same vertex."""
    p = list(path)
    if not 0 <= i < j < len(p) or p[i] != p[j]:
        raise ValueError("path[i..j] is not a cycle")
    return p[:i] + p[i : j + 1][::-1] + p[j + 1 :]


def eulerian_class_weight(g: EulerianMultigraph, local_times, net: Network) -> float:
    """``ar_root(G) prod_{u != v} (sqrt(l_u l_v) c_uv)^j / j!``."""
    ell = np.asarray(local_times, float)
    w = float(arborescence_count(g, net.root))
    for u, v, k in g.edges():
        w *= (math.sqrt(ell[u] * ell[v]) * net.conductance[u, v]) ** k / math.factorial(k)
    return w


# ------------------------------------------------------------------ conditioned law


@dataclass
class PathDistribution:
    paths: list
    log_weights: np.ndarray
    probabilities: np.ndarray  # renormalised over the enumerated paths
    traverse_cap: int

    def by_class(self, n: int) -> dict:
        """Total weight (unnormalised) per traverse-count matrix."""
        out = defaultdict(float)
        for p, lw in zip(self.paths, self.log_weights):
            out[EulerianMultigraph.from_matrix(traverse_counts(p, n))] += math.exp(lw)
        return dict(out)


def enumerate_paths(net: Network, traverse_cap: int) -> list:
    """Closed paths at the root without self-jumps that visit every vertex, length <= cap."""
    if net.n > 4:
        raise CapExceededError("path enumeration is limited to 4 vertices")
    adj = [[y for y in range(net.n) if y != x and net.conductance[x, y] > 0] for x in range(net.n)]
    out = []
    path = [net.root]
    counts = Counter(path)

    def rec():
        steps = len(path) - 1
        if steps and path[-1] == net.root and len(counts) == net.n:
            out.append(list(path))
        if steps == traverse_cap:
            return
        for y in adj[path[-1]]:
            path.append(y)
            counts[y] += 1
            rec()
            counts[y] -= 1
            if not counts[y]:
                del counts[y]
            path.pop()

    rec()
    return out


def conditioned_path_distribution(
    net: Network, local_times, traverse_cap: int = 10, form: str = "full"
) -> PathDistribution:
    paths = enumerate_paths(net, traverse_cap)
    if not paths:
        raise CapExceededError("no covering closed path within the traverse cap")
    lw = np.array([path_weight(p, local_times, net, form).log_value for p in paths])
    pr = np.exp(lw - lw.max())
    return PathDistribution(paths, lw, pr / pr.sum(), traverse_cap)


@dataclass
class PathLawComparison:
    target: np.ndarray
    rel_width: float
    runs: int
    accepted: int
    keys: list  # paths (tuples) compared
    observed: np.ndarray  # frequencies among accepted runs
    predicted: np.ndarray  # W_P / Z at the target local times
    stderr: np.ndarray

    @property
    def max_gap(self) -> float:
        se = np.maximum(self.stderr, 1e-300)
        return float(np.max(np.abs(self.observed - self.predicted) / se))

    @property
    def passed(self) -> bool:
        return self.max_gap <= 5.0


def walk_path_law(
    net: Network, local_times, runs: int, seed: int, rel_width: float = 0.1, traverse_cap: int = 16,
    min_prob: float = 1e-3,
) -> PathLawComparison:
    """Walk paths whose local times fall within ``±rel_width`` of the target, against ``W_P/Z``.

    Paths with predicted probability below ``min_prob`` are pooled into one
    remainder cell.
    """
    ell = np.asarray(local_times, float)
    t = float(ell[net.root])
    dist = conditioned_path_distribution(net, ell, traverse_cap)
    pred = {tuple(p): q for p, q in zip(dist.paths, dist.probabilities)}
    lo, hi = ell * (1 - rel_width), ell * (1 + rel_width)
    seen = Counter()
    accepted = 0
    others = [v for v in range(net.n) if v != net.root]
    for tr in iter_traces(net, t, runs, seed):
        L = tr.local_times
        if np.all((L[others] >= lo[others]) & (L[others] <= hi[others])):
            accepted += 1
            seen[tuple(strip_self_jumps(tr.embedded_path))] += 1
    keys = [k for k, q in pred.items() if q >= min_prob]
    obs = [seen[k] / max(accepted, 1) for k in keys]
    exp = [pred[k] for k in keys]
    obs.append(1 - sum(obs))
    exp.append(1 - sum(exp))
    keys.append(("rest",))
    obs, exp = np.array(obs), np.array(exp)
    m = max(accepted, 1)
    # a cell predicted empty still gets the variance of a single count
    q = np.maximum(exp, 1 / m)
    se = np.sqrt(q * (1 - q) / m)
    return PathLawComparison(ell, rel_width, runs, accepted, keys, obs, exp, se)


# ------------------------------------------------------------------ traverse decay


@dataclass
class TraverseDecayReport:
    edge: tuple
    k_values: list
    mass: list  # nu(k_uv + k_vu = k), renormalised over the enumeration
    decay_ratio: dict  # k -> nu(k+1) / nu(k-1) where defined
    imbalance: dict  # |k_uv - k_vu| -> mass
    cap: int
    condition_holds: bool
    notes: list = field(default_factory=list)


def _class_enumeration(net: Network, cap: int):
    """Eulerian multiplicity arrays on the edges of ``net`` with every entry <= cap."""
    n = net.n
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v and net.conductance[u, v] > 0]
    m = [[0] * n for _ in range(n)]

    def rec(i):
        if i == len(pairs):
            g = EulerianMultigraph.from_matrix(m)
            if g.is_eulerian() and len(g.support()) == n:
                yield g
            return
        u, v = pairs[i]
        for k in range(cap + 1):
            m[u][v] = k
            yield from rec(i + 1)
        m[u][v] = 0

    yield from rec(0)


def traverse_decay_report(net: Network, local_times, cap: int = 8, edge=None, threshold: float = 1 / 16):
    """Exact law of the traverse count over one edge given the local times.

    Classes are weighted by ``ar_root(G) prod (sqrt(l_u l_v) c_uv)^j / j!``; every
    multiplicity is capped at ``cap``.  The ratio bound for large counts is only
    reported.
    """
    ell = np.asarray(local_times, float)
    if edge is None:
        edge = next((u, v) for u in range(net.n) for v in range(u + 1, net.n) if net.conductance[u, v] > 0)
    u, v = edge
    cond = all(
        ell[a] * ell[b] * net.conductance[a, b] ** 2 <= threshold
        for a in range(net.n)
        for b in range(a + 1, net.n)
        if net.conductance[a, b] > 0
    )
    mass = defaultdict(float)
    imb = defaultdict(float)
    for g in _class_enumeration(net, cap):
        w = eulerian_class_weight(g, ell, net)
        mass[g.j[u][v] + g.j[v][u]] += w
        imb[abs(g.j[u][v] - g.j[v][u])] += w
    z = sum(mass.values())
    ks = sorted(mass)
    nu = {k: mass[k] / z for k in ks}
    ratios = {}
    for k in range(1, 2 * cap):
        if nu.get(k - 1, 0) > 0:
            ratios[k] = nu.get(k + 1, 0.0) / nu[k - 1]
    return TraverseDecayReport(
        edge=(u, v),
        k_values=ks,
        mass=[nu[k] for k in ks],
        decay_ratio=ratios,
        imbalance={d: w / z for d, w in sorted(imb.items())},
        cap=cap,
        condition_holds=cond,
        notes=["ratio bound for k >= 184 is out of reach here; reported only"],
    )


# ------------------------------------------------------------------ random Eulerian model


@dataclass
class RandomEulerianModel:
    graphs: list
    probabilities: np.ndarray
    root: int

    def sample(self, count: int, seed: int) -> list:
        cdf = np.cumsum(self.probabilities)
        cdf[-1] = 1.0
        g = rngmod.stream(seed, rngmod.EULER)
        idx = np.searchsorted(cdf, g.random(count), side="right")
        return [self.graphs[i] for i in idx]

    def sample_indices(self, count: int, seed: int) -> np.ndarray:
        cdf = np.cumsum(self.probabilities)
        cdf[-1] = 1.0
        return np.searchsorted(cdf, rngmod.stream(seed, rngmod.EULER).random(count), side="right")


def random_eulerian_model(weights, cap: int, root: int = 0) -> RandomEulerianModel:
    """Exact law ``P(G) ~ ar_root(G) prod w_uv^j / j!`` over spanning Eulerian graphs with total <= cap."""
    w = np.asarray(weights, float)
    n = w.shape[0]
    if n > 4 or cap > 8:
        raise CapExceededError("exact enumeration needs at most 4 vertices and cap <= 8")
    graphs, mass = [], []
    for g in eulerian_sweep(n, cap, min_vertices=n):
        if any(w[u, v] <= 0 for u, v, _ in g.edges()):
            continue
        m = float(arborescence_count(g, root))
        for u, v, k in g.edges():
            m *= w[u, v] ** k / math.factorial(k)
        if m > 0:
            graphs.append(g)
            mass.append(m)
    if not graphs:
        raise ValueError("the model has empty support")
    mass = np.array(mass)
    return RandomEulerianModel(graphs, mass / mass.sum(), root)


def random_eulerian_sampler(weights, cap: int, seed: int, root: int = 0) -> EulerianMultigraph:
    return random_eulerian_model(weights, cap, root).sample(1, seed)[0]


# ------------------------------------------------------------------ thin points


@dataclass
class ThinPointReport:
    runs: int
    bins: list  # upper edges of max_u l_u l_v c_uv^2
    eligible: list  # (run, vertex) pairs per bin
    probability: list  # P(k_v <= 1118 |N_v|) per bin
    stderr: list
    histograms: list  # Counter of k_v per bin

    @property
    def passed(self) -> bool:
        return all(p >= 0.5 - 4 * s for p, s, e in zip(self.probability, self.stderr, self.eligible) if e)


def thin_point_consistency(
    net: Network, t: float, runs: int, seed: int, bins=(1 / 64, 1 / 32, 1 / 16), threshold: float = 1 / 16
) -> ThinPointReport:
    """Visits to vertices whose neighbourhood local-time products are small.

    A non-root vertex ``v`` is eligible in a run when ``l_u l_v c_uv^2 <= threshold``
    for every neighbour ``u``; eligible pairs are binned by the largest product.
    """
    batch = sample_local_times(net, t, runs, seed)
    L, K = batch.local_times, batch.visits
    c = net.conductance
    adj = net.adjacency
    nbrs = [np.flatnonzero(adj[v]) for v in range(net.n)]
    edges_bins = [0.0, *bins]
    elig = [0] * len(bins)
    good = [0] * len(bins)
    hists = [Counter() for _ in bins]
    for v in range(net.n):
        if v == net.root:
            continue
        prod = (L[:, nbrs[v]] * L[:, [v]] * c[v, nbrs[v]] ** 2).max(axis=1)
        ok = prod <= threshold
        limit = THIN_CONSTANT * len(nbrs[v])
        for b in range(len(bins)):
            sel = ok & (prod <= edges_bins[b + 1]) & ((prod > edges_bins[b]) if b else True)
            kv = K[sel, v]
            elig[b] += int(sel.sum())
            good[b] += int(np.sum(kv <= limit))
            hists[b].update(kv.tolist())
    prob = [g / e if e else float("nan") for g, e in zip(good, elig)]
    se = [math.sqrt(max(p * (1 - p), 1 / e) / e) if e else float("nan") for p, e in zip(prob, elig)]
    return ThinPointReport(runs, list(bins), elig, prob, se, hists)
