import math

import numpy as np
import pytest
from hypothesis import given, settings
from scipy import stats

from covergff import network as nw
from covergff import walk

from .conftest import networks


def test_small_t_gives_empty_path():
    tr = walk.simulate_to_inverse_local_time(nw.single_edge(), 1e-9, seed=1)
    assert tr.excursion_count == 0
    assert list(tr.embedded_path) == [0]
    assert tr.local_times[0] == 1e-9 and tr.local_times[1] == 0


def test_bad_t():
    with pytest.raises(ValueError):
        walk.simulate_to_inverse_local_time(nw.single_edge(), 0.0, seed=1)


@pytest.mark.parametrize("backend", walk.BACKENDS)
def test_single_edge_excursion_count_is_poisson(backend):
    b = walk.sample_local_times(nw.single_edge(), 1.0, 100_000, seed=2, backend=backend)
    N = b.excursion_counts
    se = math.sqrt(1 / len(N))
    assert abs(N.mean() - 1) < 3 * se
    # Var of the sample variance for Poisson(1): (mu4 - s^4)/n with mu4 = 1 + 3
    assert abs(N.var() - 1) < 3 * math.sqrt(3 / len(N))


@pytest.mark.parametrize("backend", walk.BACKENDS)
@pytest.mark.parametrize("net", [nw.path_graph(4), nw.cycle_graph(5), nw.from_edges([(0, 0), (0, 1), (1, 2), (2, 2)])])
def test_mean_local_time_is_t(net, backend):
    t = 1.5
    b = walk.sample_local_times(net, t, 10_000, seed=3, backend=backend)
    L = b.local_times
    assert np.all(L[:, net.root] == t)
    se = L.std(axis=0, ddof=1) / math.sqrt(len(L))
    for v in range(net.n):
        if v != net.root:
            assert abs(L[:, v].mean() - t) <= 4 * se[v]
    # E tau(t) = t * sum_v c_v = 2|E| t under the unit convention
    tse = b.tau.std(ddof=1) / math.sqrt(len(L))
    assert abs(b.tau.mean() - t * net.total_conductance) <= 4 * tse


def test_backends_agree_in_law():
    net = nw.from_edges([(0, 1), (1, 2), (2, 0), (2, 3), (0, 0)])
    a = walk.sample_local_times(net, 1.0, 20_000, seed=4, backend="excursion")
    b = walk.sample_local_times(net, 1.0, 20_000, seed=5, backend="full")
    for v in range(1, net.n):
        assert stats.ks_2samp(a.local_times[:, v], b.local_times[:, v]).pvalue > 0.001 / 3
    assert stats.ks_2samp(a.tau, b.tau).pvalue > 0.001


@pytest.mark.parametrize("backend", walk.BACKENDS)
@given(net=networks(max_n=6))
@settings(max_examples=25, deadline=None)
def test_trace_invariants(net, backend):
    for tr in walk.iter_traces(net, 0.8, 20, seed=6, backend=backend):
        p, h = tr.embedded_path, tr.holding_times
        assert p[0] == net.root and p[-1] == net.root
        L = np.bincount(p, weights=h, minlength=net.n) / net.vertex_conductance
        L[net.root] = 0.8
        assert np.allclose(tr.local_times, L)
        assert tr.total_time == pytest.approx(float(net.vertex_conductance @ tr.local_times))
        ps = walk.path_stats(tr, net.n)
        k = ps.traverse_counts
        assert np.array_equal(k.sum(axis=0), k.sum(axis=1))
        assert np.array_equal(ps.visit_counts, k.sum(axis=0))
        assert ps.visit_counts[net.root] == tr.excursion_count
        m = walk.excursion_marks(tr)
        assert np.all(np.diff(m) >= 0) and np.all((m >= 0) & (m <= 0.8))
        for s, e in tr.excursions:
            assert p[s] == net.root and p[e] == net.root
            assert np.all(p[s + 1 : e] != net.root)


def test_path_stats_departure_convention():
    tr = walk.WalkTrace(np.array([0, 1, 0]), np.ones(3), np.zeros(2), 3.0, [(0, 2)], np.array([0.2]), 1.0, 0)
    ps = walk.path_stats(tr)
    assert ps.traverse_counts[0, 1] == ps.traverse_counts[1, 0] == 1
    assert list(ps.visit_counts) == [1, 1]
    empty = walk.WalkTrace(np.array([0]), np.ones(1), np.zeros(2), 1.0, [], np.array([]), 1.0, 0)
    assert walk.path_stats(empty).traverse_counts.sum() == 0


def test_marks_are_uniform():
    marks = np.concatenate([walk.excursion_marks(tr) for tr in walk.iter_traces(nw.single_edge(), 5.0, 10_000, 7)])
    assert stats.kstest(marks, stats.uniform(0, 5).cdf).pvalue > 0.01


def test_unanchored_trace_rejected():
    tr = walk.WalkTrace(np.array([0, 1]), np.ones(2), np.zeros(2), 2.0, [], np.array([0.0]), 1.0, 0)
    with pytest.raises(ValueError):
        walk.excursion_marks(tr)


def test_single_edge_cover_time_is_exp1():
    tc, tr = walk.cover_times(nw.single_edge(), 0, 50_000, seed=8)
    assert abs(tc.mean() - 1) < 4 * tc.std() / math.sqrt(len(tc))
    assert np.all(tr > tc)


def test_exact_cover_oracle_examples():
    # from the middle: one step to an end, then the 0 -> 2 hitting time 4
    assert walk.exact_cover_time(nw.path_graph(3), 1) == pytest.approx(5.0)
    assert walk.exact_cover_time(nw.single_edge(), 0) == pytest.approx(1.0)
    for leaves in (2, 3, 5):
        assert walk.exact_cover_time(nw.star_graph(leaves), 0) == pytest.approx(walk.star_cover_time(leaves))


def test_cover_matches_exact_on_three_path():
    tc, _ = walk.cover_times(nw.path_graph(3), 1, 100_000, seed=9)
    assert abs(tc.mean() - 5.0) < 3 * tc.std() / math.sqrt(len(tc))


@pytest.mark.slow
def test_line_cover_from_middle():
    n = 100
    tc, _ = walk.cover_times(nw.path_graph(n), n // 2, 2000, seed=10)
    assert 0.9 <= tc.mean() / (5 * n * n / 4) <= 1.1


def test_cover_reproducible_across_workers():
    net = nw.cycle_graph(7)
    a = walk.cover_times(net, 0, 9000, seed=11)
    b = walk.cover_times(net, 0, 9000, seed=11, workers=4)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_sprinkling_single_excursion_and_eps_one():
    net = nw.path_graph(3)
    rep = walk.sprinkling_probe(net, 0.5, 0.3, 1, 20_000, seed=12)
    size, emp, pred = rep.by_size[1]
    assert pred == pytest.approx(0.3)
    assert abs(emp - 0.3) < 4 * math.sqrt(0.21 / size)
    assert abs(rep.late_fraction - rep.predicted) < 4 * rep.stderr
    assert walk.sprinkling_probe(net, 0.5, 1.0, 5, 500, seed=12).late_fraction == 1.0


def test_inverse_local_time_tails_small_net():
    rep = walk.inverse_local_time_tails(nw.binary_tree(3), 2.0, 5000, seed=13)
    assert rep.resistance_diameter == pytest.approx(6.0)
    assert all(a >= b for a, b in zip(rep.empirical, rep.empirical[1:]))
    assert rep.passed


def test_thin_vertex_probability_range():
    p, se = walk.thin_vertex_probability(nw.ladder_graph(5), 1.0, 3, 2000, seed=14)
    assert 0 <= p <= 1 and se > 0
