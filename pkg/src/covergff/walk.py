"""Continuous-time random walk on a network.

The walk holds an Exp(1) time at each vertex and then jumps to ``y`` with
probability ``c_xy / c_x``; self-loops give jumps ``x -> x``.  Local time at
``v`` is time spent at ``v`` divided by ``c_v``, and ``tau(t)`` is the first
time the local time at the root exceeds ``t``.

Two samplers produce walks stopped at ``tau(t)``:

``"excursion"`` (default)
    ``N ~ Poisson(check_c * t)`` excursions away from the root, with
    ``check_c = c_root - c_root,root``; each is a discrete excursion with Exp(1)
    holdings and the marks are sorted uniforms on ``[0, t]``.
``"full"``
    Event-driven simulation of the whole walk, including root holdings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from . import rng as rngmod
from .network import Network
from .spectral import resistance_diameter

BACKENDS = ("excursion", "full")


# ------------------------------------------------------------------ tables


@dataclass(frozen=True)
class _Tables:
    ptr: np.ndarray
    nbr: np.ndarray
    cum: np.ndarray
    r_nbr: np.ndarray  # root neighbours excluding the root itself
    r_cum: np.ndarray
    cv: np.ndarray
    check_root: float


def _tables(net: Network) -> _Tables:
    cache = net._cache
    if "walk_tables" in cache:
        return cache["walk_tables"]
    c = net.conductance
    ptr = [0]
    nbr, cum = [], []
    for x in range(net.n):
        ys = np.flatnonzero(c[x] > 0)
        p = np.cumsum(c[x, ys]) / c[x, ys].sum()
        p[-1] = 1.0
        nbr.extend(ys)
        cum.extend(p)
        ptr.append(len(nbr))
    r = net.root
    rys = np.array([y for y in np.flatnonzero(c[r] > 0) if y != r])
    rcum = np.cumsum(c[r, rys]) / c[r, rys].sum()
    rcum[-1] = 1.0
    t = _Tables(
        np.array(ptr, dtype=np.int64),
        np.array(nbr, dtype=np.int64),
        np.array(cum, dtype=np.float64),
        rys.astype(np.int64),
        rcum.astype(np.float64),
        net.vertex_conductance.astype(np.float64),
        float(net.check_conductance[r]),
    )
    cache["walk_tables"] = t
    return t


# ------------------------------------------------------------------ kernels


@nb.njit(cache=True, nogil=True)
def _search(cum, lo, hi, u):
    # first index j in [lo, hi) with cum[j] > u
    hi -= 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo


@nb.njit(cache=True, nogil=True)
def _step(rng, x, ptr, nbr, cum):
    return nbr[_search(cum, ptr[x], ptr[x + 1], rng.random())]


@nb.njit(cache=True, nogil=True)
def _ilt_excursion_batch(rng, runs, t, root, check_root, r_nbr, r_cum, ptr, nbr, cum, cv, L, N, visits, touched, tau):
    n = cv.shape[0]
    stamp = np.empty(n, np.int64)
    for r in range(runs):
        stamp[:] = -1
        k = rng.poisson(check_root * t)
        N[r] = k
        total = 0.0
        for i in range(k):
            x = r_nbr[_search(r_cum, 0, r_cum.shape[0], rng.random())]
            visits[r, x] += 1
            stamp[x] = i
            touched[r, x] += 1
            while True:
                h = rng.exponential()
                L[r, x] += h
                total += h
                y = _step(rng, x, ptr, nbr, cum)
                if y == root:
                    break
                if y != x:
                    visits[r, y] += 1
                    if stamp[y] != i:
                        stamp[y] = i
                        touched[r, y] += 1
                x = y
        for v in range(n):
            L[r, v] /= cv[v]
        L[r, root] = t
        visits[r, root] = k
        touched[r, root] = k
        tau[r] = total + cv[root] * t


@nb.njit(cache=True, nogil=True)
def _ilt_full_batch(rng, runs, t, root, ptr, nbr, cum, cv, L, N, visits, touched, tau):
    n = cv.shape[0]
    stamp = np.empty(n, np.int64)
    for r in range(runs):
        stamp[:] = -1
        x = root
        lroot = 0.0
        total = 0.0
        k = 0
        while True:
            h = rng.exponential()
            if x == root:
                if lroot + h / cv[root] > t:
                    total += cv[root] * (t - lroot)
                    break
                lroot += h / cv[root]
            else:
                L[r, x] += h
            total += h
            y = _step(rng, x, ptr, nbr, cum)
            if y != x:
                if x == root:
                    k += 1
                if y != root:
                    visits[r, y] += 1
                    if stamp[y] != k:
                        stamp[y] = k
                        touched[r, y] += 1
            x = y
        for v in range(n):
            L[r, v] /= cv[v]
        L[r, root] = t
        N[r] = k
        visits[r, root] = k
        touched[r, root] = k
        tau[r] = total


@nb.njit(cache=True, nogil=True)
def _grow_i(a):
    b = np.empty(2 * a.shape[0], a.dtype)
    b[: a.shape[0]] = a
    return b


@nb.njit(cache=True, nogil=True)
def _trace_excursion(rng, t, root, check_root, r_nbr, r_cum, ptr, nbr, cum, cv):
    k = rng.poisson(check_root * t)
    marks = np.empty(k)
    for i in range(k):
        marks[i] = rng.random() * t
    marks.sort()
    path = np.empty(64, np.int64)
    hold = np.empty(64)
    starts = np.empty(k, np.int64)
    path[0] = root
    hold[0] = cv[root] * (marks[0] if k > 0 else t)
    pos = 1
    for i in range(k):
        starts[i] = pos - 1
        x = r_nbr[_search(r_cum, 0, r_cum.shape[0], rng.random())]
        while True:
            if pos + 1 >= path.shape[0]:
                path = _grow_i(path)
                hold = _grow_i(hold)
            path[pos] = x
            hold[pos] = rng.exponential()
            pos += 1
            y = _step(rng, x, ptr, nbr, cum)
            if y == root:
                nxt = marks[i + 1] if i + 1 < k else t
                path[pos] = root
                hold[pos] = cv[root] * (nxt - marks[i])
                pos += 1
                break
            x = y
    return path[:pos], hold[:pos], marks, starts


@nb.njit(cache=True, nogil=True)
def _trace_full(rng, t, root, ptr, nbr, cum, cv):
    path = np.empty(64, np.int64)
    hold = np.empty(64)
    marks = np.empty(16)
    starts = np.empty(16, np.int64)
    k = 0
    pos = 0
    x = root
    lroot = 0.0
    running = True
    while running:
        if pos + 1 >= path.shape[0]:
            path = _grow_i(path)
            hold = _grow_i(hold)
        h = rng.exponential()
        path[pos] = x
        if x == root and lroot + h / cv[root] > t:
            hold[pos] = cv[root] * (t - lroot)
            running = False
        else:
            hold[pos] = h
            if x == root:
                lroot += h / cv[root]
            y = _step(rng, x, ptr, nbr, cum)
            if x == root and y != root:
                if k >= marks.shape[0]:
                    marks = _grow_i(marks)
                    starts = _grow_i(starts)
                marks[k] = lroot
                starts[k] = pos
                k += 1
            x = y
        pos += 1
    return path[:pos], hold[:pos], marks[:k], starts[:k]


@nb.njit(cache=True, nogil=True)
def _cover_batch(rng, runs, start, ptr, nbr, cum, n, tcov, tret):
    stamp = np.full(n, -1, np.int64)
    for r in range(runs):
        stamp[start] = r
        seen = 1
        x = start
        time = 0.0
        covered = n == 1
        tcov[r] = 0.0
        while True:
            time += rng.exponential()
            y = _step(rng, x, ptr, nbr, cum)
            if not covered and stamp[y] != r:
                stamp[y] = r
                seen += 1
                if seen == n:
                    covered = True
                    tcov[r] = time
            x = y
            if covered and x == start:
                tret[r] = time
                break


# ------------------------------------------------------------------ traces


@dataclass(frozen=True)
class WalkTrace:
    """One walk from the root stopped at ``tau(t)``.

    ``holding_times[k]`` is the time spent at ``embedded_path[k]``; the last
    entry is the partial holding at the root.  In excursion mode consecutive
    root holdings between two excursions are merged into one entry.
    """

    embedded_path: np.ndarray
    holding_times: np.ndarray
    local_times: np.ndarray
    total_time: float
    excursions: list  # (start, end) positions of each root-to-root segment
    marks: np.ndarray
    t: float
    root: int

    @property
    def excursion_count(self) -> int:
        return len(self.marks)


def _check_t(t: float):
    if not t > 0:
        raise ValueError("t must be positive")


def _make_trace(net: Network, t: float, path, hold, marks, starts) -> WalkTrace:
    L = np.bincount(path, weights=hold, minlength=net.n) / net.vertex_conductance
    L[net.root] = t
    ends = []
    for s in starts:
        e = s + 1
        while path[e] != net.root:
            e += 1
        ends.append(int(e))
    return WalkTrace(
        embedded_path=path,
        holding_times=hold,
        local_times=L,
        total_time=float(hold.sum()),
        excursions=[(int(s), e) for s, e in zip(starts, ends)],
        marks=marks,
        t=float(t),
        root=net.root,
    )


def _trace_with(net: Network, t: float, rng: np.random.Generator, backend: str) -> WalkTrace:
    T = _tables(net)
    if backend == "excursion":
        out = _trace_excursion(rng, t, net.root, T.check_root, T.r_nbr, T.r_cum, T.ptr, T.nbr, T.cum, T.cv)
    elif backend == "full":
        out = _trace_full(rng, t, net.root, T.ptr, T.nbr, T.cum, T.cv)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return _make_trace(net, t, *out)


def simulate_to_inverse_local_time(net: Network, t: float, seed: int, backend: str = "excursion") -> WalkTrace:
    _check_t(t)
    return _trace_with(net, t, rngmod.stream(seed, rngmod.WALK, 0), backend)


def iter_traces(net: Network, t: float, runs: int, seed: int, backend: str = "excursion"):
    """``runs`` independent traces; run ``i`` uses block ``i // BLOCK_SIZE``."""
    _check_t(t)
    for r, size in rngmod.block_layout(runs):
        g = rngmod.stream(seed, rngmod.WALK, r)
        for _ in range(size):
            yield _trace_with(net, t, g, backend)


@dataclass(frozen=True)
class PathStats:
    traverse_counts: np.ndarray  # k[u, v], u != v
    visit_counts: np.ndarray  # k_v = sum_u k[u, v]


def path_stats(trace: WalkTrace, n: int | None = None) -> PathStats:
    """Traverse counts of the embedded path with self-jumps removed.

    ``visit_counts[v]`` counts arrivals at ``v``; for the root this equals the
    number of departures, so ``u -> v -> u`` has ``k_u = 1``.
    """
    path = trace.embedded_path
    n = n if n is not None else len(trace.local_times)
    k = np.zeros((n, n), dtype=np.int64)
    if len(path) > 1:
        a, b = path[:-1], path[1:]
        move = a != b
        np.add.at(k, (a[move], b[move]), 1)
    return PathStats(k, k.sum(axis=0))


def excursion_marks(trace: WalkTrace) -> np.ndarray:
    """Local time at the root when each excursion starts."""
    p = trace.embedded_path
    if len(p) == 0 or p[0] != trace.root or p[-1] != trace.root:
        raise ValueError("trace is not anchored at tau(t)")
    return trace.marks


# ------------------------------------------------------------------ batches


@dataclass(frozen=True)
class LocalTimeBatch:
    local_times: np.ndarray  # runs x n
    excursion_counts: np.ndarray
    visits: np.ndarray  # runs x n arrivals
    excursions_touching: np.ndarray  # runs x n, excursions that reach v
    tau: np.ndarray
    t: float


def sample_local_times(
    net: Network, t: float, runs: int, seed: int, backend: str = "excursion", workers: int = 1
) -> LocalTimeBatch:
    """Local-time fields at ``tau(t)`` for ``runs`` independent walks."""
    _check_t(t)
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    T = _tables(net)
    n = net.n

    def block(g, size):
        L = np.zeros((size, n))
        N = np.zeros(size, np.int64)
        vis = np.zeros((size, n), np.int64)
        tch = np.zeros((size, n), np.int64)
        tau = np.zeros(size)
        if backend == "excursion":
            _ilt_excursion_batch(g, size, t, net.root, T.check_root, T.r_nbr, T.r_cum, T.ptr, T.nbr, T.cum,
                                 T.cv, L, N, vis, tch, tau)
        else:
            _ilt_full_batch(g, size, t, net.root, T.ptr, T.nbr, T.cum, T.cv, L, N, vis, tch, tau)
        return L, N, vis, tch, tau

    parts = rngmod.map_blocks(block, runs, seed, (rngmod.WALK,), workers)
    cat = [np.concatenate([p[i] for p in parts]) for i in range(5)]
    return LocalTimeBatch(*cat, t=float(t))


def cover_times(net: Network, start: int, runs: int, seed: int, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Per-run cover time and the first return to ``start`` after covering."""
    if not 0 <= start < net.n:
        raise ValueError("start out of range")
    T = _tables(net)

    def block(g, size):
        a, b = np.zeros(size), np.zeros(size)
        _cover_batch(g, size, start, T.ptr, T.nbr, T.cum, net.n, a, b)
        return a, b

    parts = rngmod.map_blocks(block, runs, seed, (rngmod.COVER, start), workers)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def simulate_cover_time(net: Network, start: int, seed: int) -> tuple[float, float]:
    a, b = cover_times(net, start, 1, seed)
    return float(a[0]), float(b[0])


def exact_cover_time(net: Network, start: int) -> float:
    """Expected cover time by first-step analysis on (vertex, visited set).

    Exponential in ``n``; meant as an oracle for tiny graphs.
    """
    n = net.n
    if n > 12:
        raise ValueError("exact cover time is limited to 12 vertices")
    P = net.conductance / net.vertex_conductance[:, None]
    full = (1 << n) - 1
    E = {}
    masks = sorted(range(1 << n), key=lambda m: -bin(m).count("1"))
    for m in masks:
        members = [x for x in range(n) if m >> x & 1]
        if m == full:
            for x in members:
                E[x, m] = 0.0
            continue
        idx = {x: i for i, x in enumerate(members)}
        A = np.eye(len(members))
        b = np.ones(len(members))
        for x in members:
            for y in range(n):
                if P[x, y] == 0:
                    continue
                if m >> y & 1:
                    A[idx[x], idx[y]] -= P[x, y]
                else:
                    b[idx[x]] += P[x, y] * E[y, m | 1 << y]
        sol = np.linalg.solve(A, b)
        for x in members:
            E[x, m] = float(sol[idx[x]])
    return E[start, 1 << start]


def star_cover_time(leaves: int) -> float:
    """Expected cover time of a unit star from its centre: ``2 n H_n - 1``."""
    h = sum(1.0 / k for k in range(1, leaves + 1))
    return 2 * leaves * h - 1


# ------------------------------------------------------------------ probes


@dataclass
class TailReport:
    lambdas: list
    empirical: list
    stderr: list
    bound: list
    threshold: list
    runs: int
    resistance_diameter: float

    @property
    def passed(self) -> bool:
        return all(p <= b + 4 * s for p, b, s in zip(self.empirical, self.bound, self.stderr))


def inverse_local_time_tails(
    net: Network, t: float, runs: int, seed: int, lambdas=(1, 2, 4, 8), backend: str = "excursion", workers: int = 1
) -> TailReport:
    """Empirical ``P(|tau(t) - 2t|E|| >= (sqrt(l t R) + l R)|E|)`` against ``6 e^{-l/16}``.

    ``|E|`` is half the total conductance, which is the edge count under the
    unit convention and keeps ``E tau(t) = 2|E| t`` exact for weighted networks.
    """
    edges = net.total_conductance / 2
    R = resistance_diameter(net)
    tau = sample_local_times(net, t, runs, seed, backend, workers).tau
    dev = np.abs(tau - 2 * t * edges)
    emp, se, bnd, thr = [], [], [], []
    for lam in lambdas:
        th = (math.sqrt(lam * t * R) + lam * R) * edges
        p = float(np.mean(dev >= th))
        emp.append(p)
        se.append(math.sqrt(max(p * (1 - p), 1 / runs) / runs))
        bnd.append(6 * math.exp(-lam / 16))
        thr.append(th)
    return TailReport(list(lambdas), emp, se, bnd, thr, runs, R)


@dataclass
class SprinklingReport:
    epsilon: float
    thin_threshold: int
    runs: int
    thin_found: int
    late_fraction: float  # runs where every excursion reaching the thin vertex starts late
    predicted: float  # mean of eps^|I| over the same runs
    stderr: float
    by_size: dict  # |I| -> (runs, empirical, eps^|I|)


def sprinkling_probe(
    net: Network, t: float, epsilon: float, thin_threshold: int, runs: int, seed: int, backend: str = "excursion"
) -> SprinklingReport:
    """Check that excursions reaching a thin vertex start late with probability ``eps^|I|``.

    A vertex is thin when it has at most ``thin_threshold`` arrivals by
    ``tau(t)``.  In each run the non-root thin vertex with the fewest
    arrivals (lowest index on ties) is used; this rule only depends on the
    multiset of excursions, so the marks of its excursions are i.i.d. uniform.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    cut = (1 - epsilon) * t
    found = 0
    hits, preds = [], []
    by = {}
    others = np.array([v for v in range(net.n) if v != net.root])
    for tr in iter_traces(net, t, runs, seed, backend):
        ks = path_stats(tr, net.n).visit_counts[others]
        j = int(np.argmin(ks))
        if ks[j] > thin_threshold:
            continue
        v = others[j]
        found += 1
        p = tr.embedded_path
        I = [i for i, (s, e) in enumerate(tr.excursions) if np.any(p[s:e] == v)]
        late = bool(np.all(tr.marks[I] >= cut)) if I else True
        hits.append(late)
        preds.append(epsilon ** len(I))
        row = by.setdefault(len(I), [0, 0])
        row[0] += 1
        row[1] += late
    hits_a = np.array(hits, dtype=float)
    m = len(hits)
    frac = float(hits_a.mean()) if m else float("nan")
    se = float(math.sqrt(max(frac * (1 - frac), 1 / max(m, 1)) / max(m, 1))) if m else float("nan")
    table = {k: (c, h / c, epsilon**k) for k, (c, h) in sorted(by.items())}
    return SprinklingReport(epsilon, thin_threshold, runs, found, frac, float(np.mean(preds)) if m else float("nan"),
                            se, table)


def thin_vertex_probability(net: Network, t: float, threshold: int, runs: int, seed: int) -> tuple[float, float]:
    """Empirical ``P(some v has at most threshold arrivals by tau(t))`` and its stderr."""
    vis = sample_local_times(net, t, runs, seed).visits
    p = float(np.mean((vis <= threshold).any(axis=1)))
    return p, math.sqrt(max(p * (1 - p), 1 / runs) / runs)
