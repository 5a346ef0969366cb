"""Gaussian free field sampling, conditional laws and supremum statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import rng as rngmod
from .network import Network, tree_parents
from .spectral import _solve, effective_resistance_to_set, gff_covariance, grounded_laplacian


@dataclass(frozen=True)
class GffSample:
    values: np.ndarray
    seed: int


def _gff_block(net: Network):
    factor = gff_covariance(net).factor
    free = np.array([v for v in range(net.n) if v != net.root], dtype=int)
    F = factor[:, free]  # n x (n-1)

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        z = rng.standard_normal((size, len(free)))
        out = z @ F.T
        out[:, net.root] = 0.0
        return out

    return draw


def sample_gff_matrix(net: Network, count: int, seed: int, workers: int = 1, key=(rngmod.GFF,)) -> np.ndarray:
    """``count`` independent fields as a ``(count, n)`` array; root column is 0."""
    blocks = rngmod.map_blocks(_gff_block(net), count, seed, key, workers)
    return np.concatenate(blocks) if blocks else np.zeros((0, net.n))


def sample_gff(net: Network, seed: int) -> GffSample:
    """One field ``factor @ z`` with ``z`` standard normal."""
    return GffSample(sample_gff_matrix(net, 1, seed)[0], seed)


def sample_gff_tree_matrix(net: Network, count: int, seed: int, key=(rngmod.GFF_TREE,)) -> np.ndarray:
    """Tree fields built from independent edge increments N(0, 1/c_e)."""
    parent = tree_parents(net)
    order = [v for v in _bfs(parent, net.root)]
    scale = np.ones(net.n)
    for v in order[1:]:
        scale[v] = 1.0 / math.sqrt(net.conductance[v, parent[v]])

    def draw(rng, size):
        inc = rng.standard_normal((size, net.n)) * scale
        out = np.zeros((size, net.n))
        for v in order[1:]:
            out[:, v] = out[:, parent[v]] + inc[:, v]
        return out

    blocks = rngmod.map_blocks(draw, count, seed, key)
    return np.concatenate(blocks)


def sample_gff_tree(net: Network, seed: int) -> GffSample:
    return GffSample(sample_gff_tree_matrix(net, 1, seed)[0], seed)


def _bfs(parent: np.ndarray, root: int):
    children = [[] for _ in parent]
    for v, p in enumerate(parent):
        if p >= 0:
            children[p].append(v)
    queue = [root]
    for v in queue:
        yield v
        queue.extend(children[v])


# ------------------------------------------------------------ conditional law


@dataclass(frozen=True)
class ConditionalLaw:
    mean: float
    variance: float
    weights: dict


def harmonic_weights(net: Network, v: int, S) -> dict:
    """``a_u = P_v(X at first hit of S = u)`` for ``u`` in ``S``."""
    S = sorted({int(s) for s in S})
    if v in S:
        raise ValueError("v must lie outside S")
    g = grounded_laplacian(net, S)
    c = net.conductance
    # (L_UU) h = c_{U,S} gives the hitting distribution of every free vertex
    rhs = c[np.ix_(g.free, S)]
    h = _solve(g.matrix, rhs)
    row = h[np.searchsorted(g.free, v)]
    return {u: float(a) for u, a in zip(S, row)}


def conditional_law(net: Network, v: int, S, values_on_S) -> ConditionalLaw:
    """Law of ``eta_v`` given ``eta_u = values_on_S[u]`` for ``u`` in ``S``."""
    S = sorted({int(s) for s in S})
    if net.root not in S:
        raise ValueError("S must contain the root")
    weights = harmonic_weights(net, v, S)
    vals = values_on_S if isinstance(values_on_S, dict) else dict(zip(S, values_on_S))
    mean = sum(a * float(vals[u]) for u, a in weights.items())
    return ConditionalLaw(mean, effective_resistance_to_set(net, v, S), weights)


# ------------------------------------------------------------- supremum


@dataclass(frozen=True)
class SupStatistics:
    mean_sup: float
    median_sup: float
    stderr: float
    sample_count: int
    sigma_max: float
    median_stderr: float = float("nan")
    tail_fraction: float = 0.0  # share of samples with |sup - mean| > 5 sigma_max

    @property
    def concentration_ok(self) -> bool:
        return self.tail_fraction <= 1e-4


def sup_samples(net: Network, count: int, seed: int, key=(rngmod.GFF,), workers: int = 1) -> np.ndarray:
    draw = _gff_block(net)
    blocks = rngmod.map_blocks(lambda r, s: draw(r, s).max(axis=1), count, seed, key, workers)
    return np.concatenate(blocks)


def estimate_sup(
    net: Network, sample_count: int, seed: int, bootstrap: int = 200, workers: int = 1, key=(rngmod.GFF,)
) -> SupStatistics:
    if sample_count < 100:
        raise ValueError("sample_count must be at least 100")
    s = sup_samples(net, sample_count, seed, key, workers)
    return summarize_sup(net, s, seed, bootstrap)


def summarize_sup(net: Network, s: np.ndarray, seed: int, bootstrap: int = 200) -> SupStatistics:
    mean = float(s.mean())
    sigma_max = float(np.sqrt(np.diag(gff_covariance(net).cov).max()))
    med_se = float("nan")
    if bootstrap:
        rng = rngmod.stream(seed, rngmod.BOOTSTRAP)
        meds = [np.median(s[rng.integers(0, len(s), len(s))]) for _ in range(bootstrap)]
        med_se = float(np.std(meds, ddof=1))
    return SupStatistics(
        mean_sup=mean,
        median_sup=float(np.median(s)),
        stderr=float(s.std(ddof=1) / math.sqrt(len(s))),
        sample_count=len(s),
        sigma_max=sigma_max,
        median_stderr=med_se,
        tail_fraction=float(np.mean(np.abs(s - mean) > 5 * sigma_max)),
    )


# ------------------------------------------------------------- detection


@dataclass
class DetectionReport:
    epsilon: float
    M: float
    max_degree: int
    sample_count: int
    empirical_probability: float
    stderr: float
    bound: float
    prob_sup_at_least_M: float
    general_bound: float  # 2 eps / 10^Delta * P(sup >= M), window eps as stated
    proof_window_probability: float  # window 2 eps, the event used inside the proof
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.empirical_probability >= self.bound - 4 * self.stderr


def window_events(H: np.ndarray, adj: np.ndarray, M: float, width_scale: float, delta: int) -> np.ndarray:
    """Per sample: does some vertex sit in ``[M, M + width_scale * (1 ^ D/sum|M - eta_u|)]``?"""
    dist = np.abs(M - H) @ adj.T.astype(float)
    with np.errstate(divide="ignore"):
        ratio = np.where(dist > 0, delta / dist, np.inf)
    width = width_scale * np.minimum(1.0, ratio)
    hit = (H >= M) & (H <= M + width)
    return hit.any(axis=1)


def detection_experiment(
    net: Network,
    epsilon: float,
    sample_count: int,
    seed: int,
    M: float | None = None,
    median_samples: int = 100_000,
    workers: int = 1,
) -> DetectionReport:
    """Empirical probability that the field lands in the adaptive window above ``M``.

    ``M`` defaults to the empirical median of the supremum from a separate
    pre-pass.  The window uses the global maximum degree.
    """
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    delta = net.max_degree
    notes = []
    if M is None:
        M = estimate_sup(net, median_samples, seed, bootstrap=0, key=(rngmod.MEDIAN,)).median_sup
        notes.append("M is the empirical median from an independent pre-pass")
    bound = epsilon / 10**delta
    if epsilon == 0:
        return DetectionReport(0.0, M, delta, sample_count, 0.0, 0.0, 0.0, float("nan"), 0.0, 0.0,
                               ["degenerate window: probability 0"])
    draw = _gff_block(net)
    adj = net.adjacency

    def block(rng, size):
        H = draw(rng, size)
        return np.array([
            window_events(H, adj, M, epsilon, delta).sum(),
            window_events(H, adj, M, 2 * epsilon, delta).sum(),
            (H.max(axis=1) >= M).sum(),
        ])

    counts = np.sum(rngmod.map_blocks(block, sample_count, seed, (rngmod.GFF,), workers), axis=0)
    p = counts[0] / sample_count
    p_sup = counts[2] / sample_count
    return DetectionReport(
        epsilon=epsilon,
        M=float(M),
        max_degree=delta,
        sample_count=sample_count,
        empirical_probability=float(p),
        stderr=float(math.sqrt(max(p * (1 - p), 1.0 / sample_count) / sample_count)),
        bound=bound,
        prob_sup_at_least_M=float(p_sup),
        general_bound=float(2 * epsilon / 10**delta * p_sup),
        proof_window_probability=float(counts[1] / sample_count),
        notes=notes + ["general form: window eps vs 2eps/10^D P(sup>=M); proof form uses window 2eps"],
    )


def overshoot_check(mu: float, sigma: float, epsilon: float) -> tuple[float, float]:
    """For X ~ N(-mu, sigma^2): P(0 <= X <= eps (sigma ^ sigma^2/mu)) and eps/5 P(X >= 0)."""
    width = epsilon * (sigma if mu == 0 else min(sigma, sigma**2 / mu))
    a, b = mu / sigma, (width + mu) / sigma
    # upper-tail form keeps precision when mu / sigma is large
    log_a = stats.norm.logsf(a)
    lhs = math.exp(log_a) * -math.expm1(stats.norm.logsf(b) - log_a)
    rhs = epsilon / 5 * math.exp(log_a)
    return float(lhs), float(rhs)
