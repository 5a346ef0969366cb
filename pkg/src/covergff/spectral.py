"""Exact linear algebra on networks.

Laplacian convention: ``L[u, u] = c_u - c_uu`` and ``L[u, v] = -c_uv``.  Every
quantity here comes from solves against the Laplacian grounded at a vertex
set, which is positive definite for a connected network.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .network import Network, NetworkError

log = logging.getLogger(__name__)

JITTER_START = 1e-12
JITTER_MAX = 1e-8


class SpectralError(RuntimeError):
    """A grounded system could not be solved or factorised."""


def laplacian(net: Network) -> np.ndarray:
    c = net.conductance
    return np.diag(c.sum(axis=1)) - c


@dataclass(frozen=True)
class GroundedLaplacian:
    matrix: np.ndarray
    ground: tuple[int, ...]
    free: np.ndarray  # vertex index of each row


def grounded_laplacian(net: Network, ground) -> GroundedLaplacian:
    ground = tuple(sorted({int(g) for g in np.atleast_1d(ground)}))
    if not ground:
        raise ValueError("ground set must be nonempty")
    mask = np.ones(net.n, dtype=bool)
    mask[list(ground)] = False
    free = np.flatnonzero(mask)
    L = laplacian(net)
    return GroundedLaplacian(L[np.ix_(free, free)], ground, free)


def _solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        return sla.solve(a, b, assume_a="pos")
    except (sla.LinAlgError, ValueError) as exc:
        raise SpectralError(f"grounded system is singular: {exc}") from exc


def effective_resistance(net: Network, u: int, v: int) -> float:
    """R_eff(u, v) from the Laplacian grounded at ``v``."""
    if u == v:
        return 0.0
    g = grounded_laplacian(net, v)
    rhs = (g.free == u).astype(float)
    x = _solve(g.matrix, rhs)
    return float(x[np.searchsorted(g.free, u)])


def effective_resistance_to_set(net: Network, v: int, S) -> float:
    """R_eff(v, S); equals Var(eta_v | eta_S)."""
    S = {int(s) for s in np.atleast_1d(S)}
    if not S:
        raise ValueError("S must be nonempty")
    if v in S:
        raise ValueError("v lies in S; the conditional variance is 0")
    g = grounded_laplacian(net, sorted(S))
    rhs = (g.free == v).astype(float)
    x = _solve(g.matrix, rhs)
    return float(x[np.searchsorted(g.free, v)])


def green_function(net: Network) -> np.ndarray:
    """Inverse of the Laplacian grounded at the root, zero-padded on the root."""
    cache = net._cache
    if "green" not in cache:
        g = grounded_laplacian(net, net.root)
        inv = _solve(g.matrix, np.eye(len(g.free)))
        inv = 0.5 * (inv + inv.T)
        full = np.zeros((net.n, net.n))
        full[np.ix_(g.free, g.free)] = inv
        full.setflags(write=False)
        cache["green"] = full
    return cache["green"]


def resistance_matrix(net: Network) -> np.ndarray:
    cache = net._cache
    if "resist" not in cache:
        G = green_function(net)
        d = np.diag(G)
        R = d[:, None] + d[None, :] - 2.0 * G
        np.fill_diagonal(R, 0.0)
        R = np.maximum(R, 0.0)
        R.setflags(write=False)
        cache["resist"] = R
    return cache["resist"]


def resistance_diameter(net: Network) -> float:
    return float(resistance_matrix(net).max())


def reduce_network(net: Network, keep) -> Network:
    """Schur-complement reduction onto ``keep``.

    Vertices of the result are ``sorted(keep)`` relabelled ``0..k-1``.  Total
    conductances ``c_v`` are preserved; what the eliminated vertices route
    back to ``v`` becomes a self-loop.
    """
    keep = sorted({int(k) for k in keep})
    if net.root not in keep:
        raise NetworkError("keep must contain the root")
    if len(keep) < 2:
        raise NetworkError("keep must have at least two vertices")
    L = laplacian(net)
    mask = np.zeros(net.n, dtype=bool)
    mask[keep] = True
    K, E = np.flatnonzero(mask), np.flatnonzero(~mask)
    S = L[np.ix_(K, K)]
    if len(E):
        S = S - L[np.ix_(K, E)] @ _solve(L[np.ix_(E, E)], L[np.ix_(E, K)])
    S = 0.5 * (S + S.T)
    c_red = -S
    np.fill_diagonal(c_red, 0.0)
    scale = max(float(np.abs(S).max()), 1.0)
    c_red[np.abs(c_red) < 1e-14 * scale] = 0.0
    c_keep = net.vertex_conductance[K]
    loops = c_keep - c_red.sum(axis=1)
    loops[np.abs(loops) < 1e-12 * np.maximum(c_keep, 1.0)] = 0.0
    if np.any(loops < 0):
        raise SpectralError("reduction produced a negative self-loop")
    c_red[np.diag_indices_from(c_red)] = loops
    return Network(c_red, keep.index(net.root))


def hitting_times_to(net: Network, v: int) -> np.ndarray:
    """Expected hitting times of ``v`` from every vertex.

    First-step equations ``h = 1 + P h`` off ``v`` become ``L_v h = c`` after
    multiplying row ``x`` by ``c_x``.  Holding times are Exp(1), so the
    continuous-time value equals the expected number of discrete steps.
    """
    g = grounded_laplacian(net, v)
    h = np.zeros(net.n)
    h[g.free] = _solve(g.matrix, net.vertex_conductance[g.free])
    return h


def hitting_time(net: Network, u: int, v: int) -> float:
    if u == v:
        return 0.0
    return float(hitting_times_to(net, v)[u])


def hitting_time_matrix(net: Network) -> np.ndarray:
    """All-pairs ``H[u, v] = E_u T_v`` via Tetali's formula.

    ``H[u, v] = (c_tot R[u, v] + r_v - r_u) / 2`` with ``r_x = sum_y c_y R[x, y]``.
    """
    R = resistance_matrix(net)
    r = R @ net.vertex_conductance
    H = 0.5 * (net.total_conductance * R + r[None, :] - r[:, None])
    np.fill_diagonal(H, 0.0)
    return H


def max_hitting_time(net: Network) -> float:
    return float(hitting_time_matrix(net).max())


def commute_time(net: Network, u: int, v: int) -> float:
    return hitting_time(net, u, v) + hitting_time(net, v, u)


@dataclass(frozen=True)
class GffCovariance:
    cov: np.ndarray
    factor: np.ndarray  # lower triangular, factor @ factor.T == cov
    jitter: float = 0.0


def _cholesky_with_jitter(a: np.ndarray) -> tuple[np.ndarray, float]:
    try:
        return sla.cholesky(a, lower=True), 0.0
    except sla.LinAlgError:
        pass
    base = float(np.trace(a)) / a.shape[0]
    eps = JITTER_START
    while eps <= JITTER_MAX * (1 + 1e-9):
        try:
            f = sla.cholesky(a + eps * base * np.eye(a.shape[0]), lower=True)
            log.warning("covariance factorised with diagonal jitter %.1e x trace/n", eps)
            return f, eps * base
        except sla.LinAlgError:
            eps *= 10
    cond = np.linalg.cond(a)
    raise SpectralError(f"covariance not factorisable up to jitter {JITTER_MAX:g}; condition number {cond:.3e}")


def gff_covariance(net: Network) -> GffCovariance:
    """Covariance of the free field pinned at the root and its Cholesky factor."""
    cache = net._cache
    if "gffcov" not in cache:
        G = green_function(net)
        free = np.array([v for v in range(net.n) if v != net.root])
        factor = np.zeros_like(G)
        if len(free):
            f, jitter = _cholesky_with_jitter(G[np.ix_(free, free)])
            factor[np.ix_(free, free)] = f
        else:
            jitter = 0.0
        factor.setflags(write=False)
        cache["gffcov"] = GffCovariance(G, factor, jitter)
    return cache["gffcov"]
