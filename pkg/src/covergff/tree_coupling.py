"""Local times on trees: recursive sampling and the monotone coupling with the GFF.

On a unit-conductance tree the local time at ``v`` given its parent's local
time ``l`` is a compound Poisson-exponential variable: a sum of ``N ~
Poisson(l)`` independent Exp(1) terms.  Its CDF is evaluated through

    P(sum Y <= x) = sum_k P(N = k) P(Pois(x) >= k)

using Poisson masses in log space, so large rates do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np
from scipy import special

from . import rng as rngmod
from .gff import GffSample, _bfs, estimate_sup
from .network import Network, tree_parents
from .spectral import max_hitting_time, resistance_diameter
from .walk import cover_times

QUANTILE_TOL = 1e-10


# ------------------------------------------------------------------ CPE law


@nb.njit(cache=True, nogil=True)
def _pois_range(lam):
    # index range outside of which Poisson(lam) has mass well below 1e-14
    if lam <= 0:
        return 0, 1
    s = math.sqrt(lam)
    lo = max(0, int(lam - 10 * s - 35))
    hi = int(lam + 10 * s + 35) + 1
    return lo, hi


@nb.njit(cache=True, nogil=True)
def _pmf_table(lam, lo, hi):
    # Poisson(lam) masses on lo..hi, by recursion from a log-space start
    out = np.zeros(hi - lo + 1)
    if lam <= 0:
        if lo == 0:
            out[0] = 1.0
        return out
    p = math.exp(lo * math.log(lam) - lam - math.lgamma(lo + 1.0))
    for j in range(lo, hi + 1):
        out[j - lo] = p
        p *= lam / (j + 1)
    return out


@nb.njit(cache=True, nogil=True)
def _cpe_both(ell, x):
    """(cdf, sf) of the compound Poisson-exponential law with rate ``ell`` at ``x``."""
    if x < 0:
        return 0.0, 1.0
    if x == 0 or ell <= 0:
        return math.exp(-ell), -math.expm1(-ell)
    klo, khi = _pois_range(ell)
    xlo, xhi = _pois_range(x)
    top = max(khi, xhi)
    px = _pmf_table(x, xlo, top)
    # upper[k] = P(Pois(x) >= k), lower[k] = P(Pois(x) <= k - 1); sums of positives only
    upper = np.zeros(top + 2)
    for j in range(top, -1, -1):
        upper[j] = upper[j + 1] + (px[j - xlo] if j >= xlo else 0.0)
    lower = np.zeros(top + 1)
    for j in range(1, top + 1):
        lower[j] = lower[j - 1] + (px[j - 1 - xlo] if j - 1 >= xlo else 0.0)
    pk = _pmf_table(ell, klo, khi)
    cdf = 0.0
    sf = 0.0
    for k in range(klo, khi + 1):
        w = pk[k - klo]
        if k == 0:
            cdf += w
        else:
            cdf += w * min(upper[k], 1.0)
            sf += w * min(lower[k], 1.0)
    return min(cdf, 1.0), min(sf, 1.0)


@nb.njit(cache=True, nogil=True)
def _cpe_many(ell, x, cdf, sf):
    for i in range(ell.shape[0]):
        cdf[i], sf[i] = _cpe_both(ell[i], x[i])


def _broadcast(ell, x):
    e, xx = np.broadcast_arrays(np.asarray(ell, float), np.asarray(x, float))
    if np.any(e < 0):
        raise ValueError("rate must be nonnegative")
    shape = e.shape
    e, xx = np.ascontiguousarray(e.ravel()), np.ascontiguousarray(xx.ravel())
    cdf, sf = np.empty_like(e), np.empty_like(e)
    _cpe_many(e, xx, cdf, sf)
    return cdf.reshape(shape), sf.reshape(shape)


def cpexp_cdf(ell, x):
    """CDF of ``sum_{i <= N} Y_i`` with ``N ~ Poisson(ell)`` and ``Y_i ~ Exp(1)``."""
    out = _broadcast(ell, x)[0]
    return float(out) if out.ndim == 0 else out


def cpexp_sf(ell, x):
    """Upper tail of the same law, accurate where the CDF is close to 1."""
    out = _broadcast(ell, x)[1]
    return float(out) if out.ndim == 0 else out


@nb.njit(cache=True, nogil=True)
def _cpe_quantile(ell, u, hi):
    """Smallest x >= 0 with CDF(x) >= u, to QUANTILE_TOL; u in (0, 1).

    ``hi`` is a starting upper bracket; it is doubled until it brackets.
    Returns the upper end of the final bracket.
    """
    if ell <= 0:
        return 0.0
    upper_tail = u > 0.5
    v = 1.0 - u
    c0, s0 = _cpe_both(ell, 0.0)
    if (s0 <= v) if upper_tail else (c0 >= u):
        return 0.0
    hi = max(hi, 1e-3)
    for _ in range(200):
        c, s = _cpe_both(ell, hi)
        if (s <= v) if upper_tail else (c >= u):
            break
        hi *= 2.0
    lo = 0.0
    while hi - lo > QUANTILE_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        c, s = _cpe_both(ell, mid)
        if (s <= v) if upper_tail else (c >= u):
            hi = mid
        else:
            lo = mid
    return hi


@nb.njit(cache=True, nogil=True)
def _cpe_quantiles(ell, u, hi, out):
    for i in range(u.shape[0]):
        out[i] = _cpe_quantile(ell[i], u[i], hi[i])


def cpexp_quantile(ell, u):
    """Quantile function of the compound Poisson-exponential law."""
    e, uu = np.broadcast_arrays(np.asarray(ell, float), np.asarray(u, float))
    shape = e.shape
    e, uu = np.ascontiguousarray(e.ravel()), np.ascontiguousarray(uu.ravel())
    if np.any((uu <= 0) | (uu >= 1)):
        raise ValueError("u must lie in (0, 1)")
    out = np.empty_like(e)
    _cpe_quantiles(e, uu, e + 1.0, out)
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


# ------------------------------------------------------------------ samplers


@dataclass(frozen=True)
class LocalTimeField:
    ell: np.ndarray
    t: float


def _unit_tree(tree: Network) -> tuple[np.ndarray, list]:
    parent = tree_parents(tree)
    c = tree.conductance
    if not np.all(c[c > 0] == 1.0):
        raise ValueError("tree sampling needs unit conductances")
    return parent, list(_bfs(parent, tree.root))


def recursive_local_times(tree: Network, t: float, count: int, seed: int) -> np.ndarray:
    """``count`` local-time fields at ``tau(t)`` drawn parent to child, ``(count, n)``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    parent, order = _unit_tree(tree)

    def draw(g, size):
        L = np.zeros((size, tree.n))
        L[:, tree.root] = t
        for v in order[1:]:
            N = g.poisson(L[:, parent[v]])
            pos = N > 0
            val = np.zeros(size)
            val[pos] = g.gamma(N[pos])
            L[:, v] = val
        return L

    return np.concatenate(rngmod.map_blocks(draw, count, seed, (rngmod.RECURSIVE,)))


def recursive_local_time_sampler(tree: Network, t: float, seed: int) -> LocalTimeField:
    return LocalTimeField(recursive_local_times(tree, t, 1, seed)[0], float(t))


@nb.njit(cache=True, nogil=True)
def _couple_block(U, X, order, parent, t, L, H):
    size = U.shape[0]
    for i in range(size):
        for j in range(1, order.shape[0]):
            v = order[j]
            u = parent[v]
            u_ = U[i, j]
            x = X[i, j]
            H[i, v] = H[i, u] + x
            lu = L[i, u]
            if lu <= 0:
                L[i, v] = 0.0
                continue
            # the bracket starts above the dominating value, so the order
            # sqrt(L_v) <= bound is a consequence and not an input
            w = max(x + math.sqrt(2 * lu), 0.0) / math.sqrt(2.0)
            L[i, v] = _cpe_quantile(lu, u_, w * w + 1.0)


def coupled_samples(tree: Network, t: float, count: int, seed: int, workers: int = 1):
    """Jointly sample local times and the GFF on a unit tree.

    Each child uses one uniform ``U``: the field increment is ``Phi^-1(U)`` and
    the local time is the CPE quantile at ``U``, so ``sqrt(L_v)`` never exceeds
    ``max((eta_v + sqrt(2t)) / sqrt(2), 0)``.  Returns ``(L, H)``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    parent, order = _unit_tree(tree)
    order_a = np.array(order, dtype=np.int64)
    parent_a = parent.astype(np.int64)

    def block(g, size):
        U = g.random((size, tree.n))
        U[U == 0.0] = np.nextafter(0.0, 1.0)
        L = np.zeros((size, tree.n))
        H = np.zeros((size, tree.n))
        L[:, tree.root] = t
        _couple_block(U, special.ndtri(U), order_a, parent_a, float(t), L, H)
        return L, H

    parts = rngmod.map_blocks(block, count, seed, (rngmod.COUPLING,), workers)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def coupled_sampler(tree: Network, t: float, seed: int):
    L, H = coupled_samples(tree, t, 1, seed)
    return LocalTimeField(L[0], float(t)), GffSample(H[0], seed)


def domination_violations(L: np.ndarray, H: np.ndarray, t: float) -> int:
    """Pointwise count of ``sqrt(L_v) > max((eta_v + sqrt(2t))/sqrt(2), 0)``."""
    bound = np.maximum((H + math.sqrt(2 * t)) / math.sqrt(2), 0.0)
    return int(np.sum(np.sqrt(L) > bound))


# ------------------------------------------------------------------ concentration


@dataclass
class TreeConcentrationReport:
    lambdas: list
    tails: list
    tail_stderr: list
    slope: float  # least-squares slope of log tail against lambda
    mean_sup: float
    resistance_diameter: float
    edges: float
    estimate: float  # |E| (E sup eta)^2
    mean_cover: float
    t_hit: float
    normalized_tails: list  # P(|tau - mean| >= lambda sqrt(t_cov t_hit))
    normalized_sd: float
    runs: int

    @property
    def nonincreasing(self) -> bool:
        return all(a >= b for a, b in zip(self.tails, self.tails[1:]))


def tree_concentration_experiment(
    tree: Network, runs: int, seed: int, sup_samples: int = 10_000, lambdas=(1, 2, 4, 8), workers: int = 1
) -> TreeConcentrationReport:
    """Cover-time deviations from ``|E| (E sup eta)^2`` on the scale ``|E| sqrt(R) E sup eta``."""
    tree_parents(tree)
    sup = estimate_sup(tree, sup_samples, seed, bootstrap=0, workers=workers)
    R = resistance_diameter(tree)
    edges = tree.total_conductance / 2
    S = sup.mean_sup
    est = edges * S * S
    tau, _ = cover_times(tree, tree.root, runs, seed, workers)
    dev = np.abs(tau - est)
    tails, ses = [], []
    for lam in lambdas:
        p = float(np.mean(dev >= lam * edges * math.sqrt(R) * S))
        tails.append(p)
        ses.append(math.sqrt(p * (1 - p) / runs))
    pos = [(lam, math.log(p)) for lam, p in zip(lambdas, tails) if p > 0]
    slope = float(np.polyfit(*zip(*pos), 1)[0]) if len(pos) >= 2 else float("nan")
    thit = max_hitting_time(tree)
    tcov = float(tau.mean())
    scale = math.sqrt(tcov * thit)
    ndev = np.abs(tau - tcov) / scale
    return TreeConcentrationReport(
        lambdas=list(lambdas),
        tails=tails,
        tail_stderr=ses,
        slope=slope,
        mean_sup=S,
        resistance_diameter=R,
        edges=edges,
        estimate=est,
        mean_cover=tcov,
        t_hit=thit,
        normalized_tails=[float(np.mean(ndev >= lam)) for lam in lambdas],
        normalized_sd=float(tau.std(ddof=1) / scale),
        runs=runs,
    )
