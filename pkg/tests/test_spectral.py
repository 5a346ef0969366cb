import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from covergff import network as nw
from covergff import spectral as sp

from .conftest import networks


def pinv_resistance(net, u, v):
    """Oracle: quadratic form of the Laplacian pseudo-inverse."""
    if u == v:
        return 0.0
    Lp = np.linalg.pinv(sp.laplacian(net))
    e = np.zeros(net.n)
    e[u], e[v] = 1.0, -1.0
    return float(e @ Lp @ e)


def step_hitting(net, u, v):
    """Oracle: h = 1 + P h on V minus v, using the transition matrix."""
    P = net.conductance / net.vertex_conductance[:, None]
    free = [x for x in range(net.n) if x != v]
    A = np.eye(len(free)) - P[np.ix_(free, free)]
    h = np.linalg.solve(A, np.ones(len(free)))
    return 0.0 if u == v else float(h[free.index(u)])


@pytest.mark.parametrize("k", [1, 2, 5])
def test_series_law(k):
    assert sp.effective_resistance(nw.path_graph(k + 1), 0, k) == pytest.approx(k, rel=1e-12)


def test_parallel_law():
    net = nw.load_network("0 1 1\n0 1 1")
    assert sp.effective_resistance(net, 0, 1) == pytest.approx(0.5)


def test_triangle_resistance(triangle):
    # hand solve: direct edge 1 in parallel with 2 in series -> 2/3
    assert pinv_resistance(triangle, 0, 1) == pytest.approx(2 / 3)
    for u, v in itertools.combinations(range(3), 2):
        assert sp.effective_resistance(triangle, u, v) == pytest.approx(2 / 3, rel=1e-12)


@given(networks())
@settings(max_examples=50, deadline=None)
def test_resistance_matches_pinv_and_is_metric(net):
    R = sp.resistance_matrix(net)
    for u in range(net.n):
        for v in range(net.n):
            assert R[u, v] == pytest.approx(pinv_resistance(net, u, v), abs=1e-9)
            assert R[u, v] == pytest.approx(R[v, u], abs=1e-12)
            assert (R[u, v] > 0) == (u != v)
            for w in range(net.n):
                assert R[u, w] <= R[u, v] + R[v, w] + 1e-9


def test_resistance_to_set_examples():
    star = nw.star_graph(3)
    assert sp.effective_resistance_to_set(star, 0, [1, 2, 3]) == pytest.approx(1 / 3)
    p = nw.path_graph(3)
    assert sp.effective_resistance_to_set(p, 2, [0]) == pytest.approx(2.0)
    assert sp.effective_resistance_to_set(p, 1, [0, 2]) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        sp.effective_resistance_to_set(p, 1, [1])


def test_reduce_examples(triangle):
    red = sp.reduce_network(nw.path_graph(3), [0, 2])
    assert red.conductance[0, 1] == pytest.approx(0.5)
    red = sp.reduce_network(triangle, [0, 1])
    assert red.conductance[0, 1] == pytest.approx(1.5)
    net = nw.cycle_graph(5)
    same = sp.reduce_network(net, range(5))
    assert np.allclose(same.conductance, net.conductance)
    with pytest.raises(nw.NetworkError):
        sp.reduce_network(net, [1, 2])
    with pytest.raises(nw.NetworkError):
        sp.reduce_network(net, [0])


@given(networks(min_n=3, max_n=7))
@settings(max_examples=50, deadline=None)
def test_reduction_preserves_resistance_and_conductance(net):
    keep = sorted({net.root, *range(0, net.n, 2)})
    if len(keep) < 2:
        keep = [net.root, (net.root + 1) % net.n]
        keep.sort()
    red = sp.reduce_network(net, keep)
    R, Rr = sp.resistance_matrix(net), sp.resistance_matrix(red)
    for i, u in enumerate(keep):
        assert red.vertex_conductance[i] == pytest.approx(net.vertex_conductance[u], rel=1e-12)
        for j, v in enumerate(keep):
            assert abs(Rr[i, j] - R[u, v]) <= 1e-9


def test_hitting_examples():
    assert sp.hitting_time(nw.single_edge(), 0, 1) == pytest.approx(1.0)
    assert sp.hitting_time(nw.path_graph(3), 0, 2) == pytest.approx(4.0)
    assert sp.max_hitting_time(nw.single_edge()) == pytest.approx(1.0)
    assert sp.max_hitting_time(nw.path_graph(3)) == pytest.approx(4.0)
    assert sp.max_hitting_time(nw.complete_graph(4)) == pytest.approx(3.0)


@given(networks())
@settings(max_examples=50, deadline=None)
def test_hitting_and_commute_identity(net):
    H = sp.hitting_time_matrix(net)
    R = sp.resistance_matrix(net)
    for u in range(net.n):
        for v in range(net.n):
            h = sp.hitting_time(net, u, v)
            assert h == pytest.approx(step_hitting(net, u, v), rel=1e-9, abs=1e-9)
            assert H[u, v] == pytest.approx(h, rel=1e-9, abs=1e-9)
            kappa = sp.commute_time(net, u, v)
            assert kappa == pytest.approx(net.total_conductance * R[u, v], rel=1e-9, abs=1e-12)


def test_commute_identity_unit_graph_uses_edge_count():
    net = nw.from_edges([(0, 1), (1, 2), (2, 0), (2, 3), (3, 3)])
    R = sp.resistance_matrix(net)
    for u, v in itertools.permutations(range(4), 2):
        assert sp.commute_time(net, u, v) == pytest.approx(2 * net.edge_count * R[u, v], rel=1e-9)


def test_gff_covariance_examples():
    cov = sp.gff_covariance(nw.single_edge())
    assert cov.cov[1, 1] == pytest.approx(1.0)
    p = sp.gff_covariance(nw.path_graph(6)).cov
    i, j = np.meshgrid(range(6), range(6), indexing="ij")
    assert np.allclose(p, np.minimum(i, j), atol=1e-10)


@given(networks())
@settings(max_examples=50, deadline=None)
def test_gff_covariance_invariants(net):
    g = sp.gff_covariance(net)
    R = sp.resistance_matrix(net)
    assert np.all(g.cov[net.root] == 0) and np.all(g.cov[:, net.root] == 0)
    d = np.diag(g.cov)
    for v in range(net.n):
        assert abs(d[v] - sp.effective_resistance(net, net.root, v)) <= 1e-10
    assert np.allclose(d[:, None] + d[None, :] - 2 * g.cov, R, atol=1e-10)
    assert np.allclose(g.factor @ g.factor.T, g.cov, atol=1e-10)
    assert np.allclose(g.factor, np.tril(g.factor))


def test_jitter_escalation_then_failure():
    a = np.array([[1.0, 1.0], [1.0, 1.0 - 1e-6]])
    with pytest.raises(sp.SpectralError):
        sp._cholesky_with_jitter(a)
    b = np.array([[1.0, 1.0], [1.0, 1.0]])
    f, jit = sp._cholesky_with_jitter(b)
    assert jit > 0 and np.allclose(f @ f.T, b, atol=1e-7)
