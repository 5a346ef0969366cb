"""Statistical checks of the local time / Gaussian free field identities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import rng as rngmod
from .gff import sample_gff_matrix
from .network import Network
from .spectral import gff_covariance
from .tree_coupling import cpexp_quantile, cpexp_sf
from .walk import sample_local_times

# verdict thresholds shared by every check in this module
KS_LEVEL = 1e-3
MOMENT_SE = 5.0
LAPLACE_SE = 4.0
DOMINATION_SE = 4.0


def _se_mean(a, b):
    return math.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b))


def _se_var(a):
    c = a - a.mean()
    return math.sqrt(max(np.mean(c**4) - np.mean(c**2) ** 2, 0.0) / len(a))


def _se_cov(a, b):
    p = (a - a.mean()) * (b - b.mean())
    return p.std(ddof=1) / math.sqrt(len(a))


@dataclass
class TwoSampleReport:
    t: float
    sample_count: int
    vertices: list
    ks_stat: list
    ks_pvalue: list
    mean_gap: list  # |mean difference| / stderr
    var_gap: list
    cov_gap_max: float
    laplace_gap: dict  # lambda -> list of |difference| / stderr
    lhs_mean: list
    theory_mean: list
    theory_var: list
    local_time_mean: list
    local_time_stderr: list
    notes: list = field(default_factory=list)

    @property
    def ks_pass(self) -> bool:
        m = max(len(self.vertices), 1)
        return all(p >= KS_LEVEL / m for p in self.ks_pvalue)

    @property
    def moments_pass(self) -> bool:
        gaps = self.mean_gap + self.var_gap + [self.cov_gap_max]
        for v in self.laplace_gap.values():
            gaps += v
        return all(g <= MOMENT_SE for g in gaps)

    @property
    def local_time_mean_pass(self) -> bool:
        return all(abs(m - self.t) <= 4 * s for m, s in zip(self.local_time_mean, self.local_time_stderr))

    @property
    def passed(self) -> bool:
        return self.ks_pass and self.moments_pass


def ray_knight_samples(net: Network, t: float, count: int, seed: int, backend: str = "excursion", workers: int = 1):
    """``(L, lhs, rhs)``: local times, ``L + eta^2/2`` and ``(eta' + sqrt(2t))^2/2``.

    The walk and the two fields use disjoint random streams.
    """
    L = sample_local_times(net, t, count, seed, backend, workers).local_times
    eta = sample_gff_matrix(net, count, seed, workers, key=(rngmod.GFF, 1))
    eta2 = sample_gff_matrix(net, count, seed, workers, key=(rngmod.GFF, 2))
    return L, L + eta**2 / 2, (eta2 + math.sqrt(2 * t)) ** 2 / 2


def ray_knight_two_sample(
    net: Network, t: float, sample_count: int, seed: int, lambdas=(0.5, 1.0), backend: str = "excursion",
    workers: int = 1,
) -> TwoSampleReport:
    """Compare ``{L^x + eta_x^2/2}`` and ``{(eta_x + sqrt(2t))^2/2}`` vertex by vertex.

    The root is skipped: both sides equal ``t`` there.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    L, A, B = ray_knight_samples(net, t, sample_count, seed, backend, workers)
    verts = [v for v in range(net.n) if v != net.root]
    R = np.diag(gff_covariance(net).cov)
    rep = TwoSampleReport(t, sample_count, verts, [], [], [], [], 0.0, {lam: [] for lam in lambdas}, [], [], [], [], [])
    for v in verts:
        a, b = A[:, v], B[:, v]
        ks = stats.ks_2samp(a, b, method="asymp")
        rep.ks_stat.append(float(ks.statistic))
        rep.ks_pvalue.append(float(ks.pvalue))
        rep.mean_gap.append(abs(a.mean() - b.mean()) / _se_mean(a, b))
        rep.var_gap.append(abs(a.var(ddof=1) - b.var(ddof=1)) / math.hypot(_se_var(a), _se_var(b)))
        rep.lhs_mean.append(float(a.mean()))
        rep.theory_mean.append(t + R[v] / 2)
        rep.theory_var.append(2 * t * R[v] + R[v] ** 2 / 2)
        rep.local_time_mean.append(float(L[:, v].mean()))
        rep.local_time_stderr.append(float(L[:, v].std(ddof=1) / math.sqrt(sample_count)))
        for lam in lambdas:
            ea, eb = np.exp(-lam * a), np.exp(-lam * b)
            rep.laplace_gap[lam].append(abs(ea.mean() - eb.mean()) / max(_se_mean(ea, eb), 1e-300))
    worst = 0.0
    for i, u in enumerate(verts):
        for w in verts[i + 1 :]:
            ca = np.cov(A[:, u], A[:, w])[0, 1]
            cb = np.cov(B[:, u], B[:, w])[0, 1]
            se = math.hypot(_se_cov(A[:, u], A[:, w]), _se_cov(B[:, u], B[:, w]))
            worst = max(worst, abs(ca - cb) / se)
    rep.cov_gap_max = worst
    return rep


# ---------------------------------------------------------------- one vertex


def baby_laplace(ell: float, lam: float) -> float:
    """``E exp(-lam (sum_{i<=N} Y_i + X^2/2))`` with ``N ~ Poisson(ell)``."""
    return (1 + lam) ** -0.5 * math.exp(-lam * ell / (1 + lam))


@dataclass
class BabyIsoReport:
    ell: float
    lambdas: list
    closed_form: list
    lhs: list
    lhs_stderr: list
    rhs: list
    rhs_stderr: list

    @property
    def passed(self) -> bool:
        for c, a, sa, b, sb in zip(self.closed_form, self.lhs, self.lhs_stderr, self.rhs, self.rhs_stderr):
            if abs(a - c) > LAPLACE_SE * sa or abs(b - c) > LAPLACE_SE * sb:
                return False
            if abs(a - b) > LAPLACE_SE * math.hypot(sa, sb):
                return False
        return True


def _compound(g: np.random.Generator, ell: float, size: int) -> np.ndarray:
    N = g.poisson(ell, size)
    out = np.zeros(size)
    pos = N > 0
    out[pos] = g.gamma(N[pos])
    return out


def baby_iso_samples(ell: float, count: int, seed: int):
    """Draws of ``sum Y + X^2/2`` and ``(X' + sqrt(2 ell))^2/2``."""
    if ell < 0:
        raise ValueError("ell must be nonnegative")

    def block(g, size):
        lhs = _compound(g, ell, size) + g.standard_normal(size) ** 2 / 2
        rhs = (g.standard_normal(size) + math.sqrt(2 * ell)) ** 2 / 2
        return lhs, rhs

    parts = rngmod.map_blocks(block, count, seed, (rngmod.BABY,))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def baby_iso_check(ell: float, lambdas, sample_count: int, seed: int) -> BabyIsoReport:
    lhs, rhs = baby_iso_samples(ell, sample_count, seed)
    rep = BabyIsoReport(ell, list(lambdas), [], [], [], [], [])
    root_n = math.sqrt(sample_count)
    for lam in lambdas:
        if not lam > 0:
            raise ValueError("lambda must be positive")
        ea, eb = np.exp(-lam * lhs), np.exp(-lam * rhs)
        rep.closed_form.append(baby_laplace(ell, lam))
        rep.lhs.append(float(ea.mean()))
        rep.lhs_stderr.append(float(ea.std(ddof=1) / root_n))
        rep.rhs.append(float(eb.mean()))
        rep.rhs_stderr.append(float(eb.std(ddof=1) / root_n))
    return rep


@dataclass
class DominationReport:
    ell: float
    grid: np.ndarray
    lhs_tail: np.ndarray  # empirical P(sqrt(sum Y) >= x)
    rhs_tail: np.ndarray  # empirical P(max(X + sqrt(2 ell), 0)/sqrt(2) >= x)
    slack: np.ndarray
    exact_gap: float  # max over the grid of exact lhs tail minus exact rhs tail
    coupling_violations: int
    sample_count: int

    @property
    def violations(self) -> int:
        return int(np.sum(self.lhs_tail > self.rhs_tail + self.slack))

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.coupling_violations == 0 and self.exact_gap <= 1e-12


def domination_check(ell: float, sample_count: int, seed: int, grid_points: int = 200) -> DominationReport:
    """Tail comparison on a grid plus a pointwise check of the quantile coupling."""
    if ell < 0:
        raise ValueError("ell must be nonnegative")

    def block(g, size):
        lhs = np.sqrt(_compound(g, ell, size))
        u = g.random(size)
        u[u == 0] = np.nextafter(0.0, 1.0)
        x = stats.norm.ppf(u)
        rhs = np.maximum(x + math.sqrt(2 * ell), 0.0) / math.sqrt(2)
        # coupled pair from the same uniform
        q = cpexp_quantile(ell, u)
        return lhs, rhs, int(np.sum(np.sqrt(q) > rhs))

    parts = rngmod.map_blocks(block, sample_count, seed, (rngmod.MISC, 1))
    lhs = np.sort(np.concatenate([p[0] for p in parts]))
    rhs = np.sort(np.concatenate([p[1] for p in parts]))
    coupled_bad = sum(p[2] for p in parts)
    top = max(lhs[-1], rhs[-1])
    grid = np.linspace(0.0, top, grid_points)
    n = len(lhs)
    pl = 1 - np.searchsorted(lhs, grid, side="left") / n
    pr = 1 - np.searchsorted(rhs, grid, side="left") / n
    slack = DOMINATION_SE * np.sqrt((pl * (1 - pl) + pr * (1 - pr)) / n)
    # exact tails: P(sqrt(S) >= x) = P(S >= x^2); for x > 0 the rhs is a normal tail
    ex_l = np.where(grid > 0, cpexp_sf(ell, grid**2), 1.0)
    ex_r = np.where(grid > 0, stats.norm.sf(math.sqrt(2) * grid - math.sqrt(2 * ell)), 1.0)
    return DominationReport(ell, grid, pl, pr, slack, float(np.max(ex_l - ex_r)), coupled_bad, n)


@dataclass
class SquareTailReport:
    lambdas: list
    empirical: list
    stderr: list
    bound: list
    weight_sum: float
    sigma2: float

    @property
    def passed(self) -> bool:
        return all(p <= b + 4 * s for p, b, s in zip(self.empirical, self.bound, self.stderr))


def gaussian_square_tail_check(
    weights, cov: np.ndarray, lambdas, sample_count: int, seed: int, sigma2: float | None = None
) -> SquareTailReport:
    """``P(sum a_i X_i^2 >= lam A sigma^2) <= 2 exp(-lam/4)`` for a centred Gaussian vector."""
    a = np.asarray(weights, float)
    if np.any(a <= 0):
        raise ValueError("weights must be positive")
    cov = np.atleast_2d(np.asarray(cov, float))
    s2 = float(np.max(np.diag(cov))) if sigma2 is None else float(sigma2)
    w, V = np.linalg.eigh(cov)
    F = V * np.sqrt(np.clip(w, 0, None))

    def block(g, size):
        X = g.standard_normal((size, len(a))) @ F.T
        return (X**2) @ a

    S = np.concatenate(rngmod.map_blocks(block, sample_count, seed, (rngmod.MISC, 2)))
    A = float(a.sum())
    emp, se, bnd = [], [], []
    for lam in lambdas:
        p = float(np.mean(S >= lam * A * s2))
        emp.append(p)
        se.append(math.sqrt(p * (1 - p) / sample_count))
        bnd.append(2 * math.exp(-lam / 4))
    return SquareTailReport(list(lambdas), emp, se, bnd, A, s2)
