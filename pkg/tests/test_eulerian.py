import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from covergff import eulerian as eu
from covergff import network as nw
from covergff import walk

G = eu.EulerianMultigraph.from_matrix
TWO_CYCLE = G([[0, 1], [1, 0]])
DOUBLED = G([[0, 2], [2, 0]])
K3 = G([[0, 1, 1], [1, 0, 1], [1, 1, 0]])


def canonical_circuits(g):
    """Oracle: set of labelled circuits, each stored as its lexicographically smallest rotation."""
    labelled = [(u, v, i) for u, v, k in g.edges() for i in range(k)]
    out = set()

    def rec(x, used, seq):
        if len(seq) == len(labelled):
            if seq[0][0] == x:
                rots = [tuple(seq[i:] + seq[:i]) for i in range(len(seq))]
                out.add(min(rots))
            return
        for e in labelled:
            if e[0] == x and e not in used:
                used.add(e)
                seq.append(e)
                rec(e[1], used, seq)
                seq.pop()
                used.discard(e)

    start = labelled[0][0]
    rec(start, set(), [])
    return len(out)


@pytest.fixture(scope="module")
def sweep():
    return list(eu.eulerian_sweep(4, 8))


def test_small_examples():
    assert eu.best_circuit_count(TWO_CYCLE).ec == 1
    k3 = eu.best_circuit_count(K3)
    assert (k3.arborescences, k3.ec) == (3, 3)
    d = eu.best_circuit_count(DOUBLED)
    assert (d.arborescences, d.ec, d.ec_v[0]) == (2, 2, 4)
    assert eu.path_count(TWO_CYCLE, 0) == 1
    assert eu.path_count(DOUBLED, 0) == 1
    assert eu.path_count(K3, 1) == 6
    for g in (TWO_CYCLE, DOUBLED, K3):
        assert eu.brute_force_circuits(g) == eu.best_circuit_count(g).ec == canonical_circuits(g)
        for v in range(g.n):
            assert eu.brute_force_paths(g, v) == eu.path_count(g, v)


def test_not_eulerian_and_caps():
    with pytest.raises(eu.NotEulerianError):
        eu.best_circuit_count(G([[0]]))
    with pytest.raises(eu.NotEulerianError):
        eu.best_circuit_count(G([[0, 1], [0, 0]]))
    with pytest.raises(eu.NotEulerianError):
        eu.best_circuit_count(G([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]))
    with pytest.raises(eu.CapExceededError):
        eu.brute_force_circuits(G([[0, 7], [7, 0]]))
    with pytest.raises(ValueError):
        G([[1, 0], [0, 0]])


def test_parse_multigraph():
    g = eu.load_multigraph("0 1 2\n1 0 1\n# c\n1 0 1\n")
    assert g == DOUBLED
    with pytest.raises(ValueError):
        eu.load_multigraph("0 1")


def test_sweep_is_complete_for_two_vertices():
    two = [g for g in eu.eulerian_sweep(2, 8) if g.n == 2]
    assert [g.j[0][1] for g in two] == [1, 2, 3, 4]


def test_sweep_best_matches_brute_force(sweep):
    for g in sweep:
        best = eu.best_circuit_count(g)  # asserts root independence internally
        assert best.ec == eu.brute_force_circuits(g)
        ars = {eu.arborescence_count(g, w) for w in range(g.n)}
        assert len(ars) == 1


def test_sweep_path_counts(sweep):
    for g in sweep:
        for v in range(g.n):
            assert eu.path_count(g, v) == eu.brute_force_paths(g, v)


def test_canonical_rotation_oracle_on_sample(sweep):
    for g in sweep[::25]:
        if g.total <= 7:
            assert canonical_circuits(g) == eu.brute_force_circuits(g)


def test_nested_pairs(sweep):
    checked, bad = eu.nested_pairs_check(sweep)
    assert checked > 100 and not bad


# ---------------------------------------------------------------- path weights


def test_path_weight_unit_value():
    net = nw.single_edge()
    assert eu.path_weight([0, 1, 0], [1.0, 1.0], net).value == pytest.approx(1.0)
    assert eu.path_weight([0, 1, 1, 0], [1.0, 1.0], net).value == pytest.approx(1.0)


def test_path_weight_errors():
    net = nw.path_graph(3)
    with pytest.raises(ValueError):
        eu.path_weight([0, 1, 0], [1, 1, 1], net)
    with pytest.raises(ValueError):
        eu.path_weight([0, 1, 2, 1], [1, 1, 1], net)
    with pytest.raises(ValueError):
        eu.path_weight([0, 1, 2, 1, 0], [1, 0, 1], net)


@given(hst.floats(0.1, 10))
@settings(max_examples=30, deadline=None)
def test_path_weight_conductance_scaling(alpha):
    net = nw.cycle_graph(4)
    scaled = nw.Network(net.conductance * alpha, net.root)
    path = [0, 1, 2, 3, 0, 3, 2, 1, 0]
    ell = [1.0, 0.5, 2.0, 0.7]
    gap = eu.path_weight(path, ell, scaled).log_value - eu.path_weight(path, ell, net).log_value
    assert gap == pytest.approx(8 * math.log(alpha), abs=1e-9)


def test_forms_differ_by_constant():
    net = nw.complete_graph(4)
    ell = [0.8, 0.3, 1.7, 0.9]
    dist = eu.conditioned_path_distribution(net, ell, 7)
    gaps = [eu.path_weight(p, ell, net, "full").log_value - eu.path_weight(p, ell, net, "reduced").log_value
            for p in dist.paths]
    assert np.allclose(gaps, math.log(0.3 * 1.7 * 0.9), atol=1e-12)
    reduced = eu.conditioned_path_distribution(net, ell, 7, form="reduced")
    assert np.allclose(reduced.probabilities, dist.probabilities, atol=1e-14)


def test_reverse_internal_cycle():
    assert eu.reverse_internal_cycle([0, 1, 2, 3, 1, 0], 1, 4) == [0, 1, 3, 2, 1, 0]
    with pytest.raises(ValueError):
        eu.reverse_internal_cycle([0, 1, 2, 0], 1, 2)


def test_cycle_reversal_invariance_on_simulated_paths():
    net = nw.load_network("0 1 1.0\n1 2 2.0\n2 3 0.5\n3 0 1.5\n0 2 0.7\n1 1 1.0")
    paths, fields = [], []
    for tr in walk.iter_traces(net, 3.0, 3000, seed=21):
        if np.all(tr.local_times > 0):
            paths.append(tr.embedded_path)
            fields.append(tr.local_times)
        if len(paths) == 1000:
            break
    assert len(paths) == 1000
    g = np.random.default_rng(22)
    for p, ell in zip(paths, fields):
        q = eu.strip_self_jumps(p)
        pairs = [(i, j) for i in range(len(q)) for j in range(i + 2, len(q)) if q[i] == q[j]]
        i, j = pairs[g.integers(len(pairs))]
        r = eu.reverse_internal_cycle(q, i, j)
        assert abs(eu.path_weight(q, ell, net).log_value - eu.path_weight(r, ell, net).log_value) <= 1e-9


# ---------------------------------------------------------------- conditioned law


def test_two_vertex_distribution_explicit():
    net = nw.single_edge()
    t, ell = 0.7, 1.3
    d = eu.conditioned_path_distribution(net, [t, ell], 12)
    m = np.array([len(p) // 2 for p in d.paths])
    w = np.array([(t * ell) ** k / (math.factorial(k) * math.factorial(k - 1)) for k in m])
    assert np.allclose(d.probabilities, w / w.sum(), rtol=1e-12)
    assert d.probabilities.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("net", [nw.single_edge(), nw.cycle_graph(3), nw.load_network("0 1 1\n1 2 2\n2 0 0.5\n0 2 0.5\n3 1 1.5")])
def test_class_aggregation_matches_eulerian_weight(net):
    ell = np.linspace(0.6, 1.4, net.n)
    d = eu.conditioned_path_distribution(net, ell, 8)
    for g, total in d.by_class(net.n).items():
        assert total == pytest.approx(eu.eulerian_class_weight(g, ell, net), rel=1e-10)
        assert sum(1 for p in d.paths if eu.EulerianMultigraph.from_matrix(eu.traverse_counts(p, net.n)) == g) \
            == eu.path_count(g, net.root)


def test_decay_two_vertex():
    rep = eu.traverse_decay_report(nw.single_edge(), [1 / 8, 1 / 8], cap=8)
    assert rep.condition_holds
    assert set(rep.imbalance) == {0}
    assert all(r < 1 for k, r in rep.decay_ratio.items() if k >= 3)
    assert rep.k_values == [2, 4, 6, 8, 10, 12, 14, 16]


def test_decay_triangle_imbalance():
    rep = eu.traverse_decay_report(nw.cycle_graph(3), [1 / 8] * 3, cap=5)
    assert rep.imbalance.get(1, 0) > 0
    assert sum(rep.mass) == pytest.approx(1.0)


def test_walk_path_law_two_vertex():
    cmp = eu.walk_path_law(nw.single_edge(), [2.0, 2.0], 30_000, seed=23)
    assert cmp.accepted > 1000
    assert cmp.passed, cmp.max_gap


# ---------------------------------------------------------------- random model


def test_random_model_two_vertices():
    model = eu.random_eulerian_model([[0, 1.5], [1.5, 0]], cap=8)
    ks = [g.j[0][1] for g in model.graphs]
    mass = np.array([k * 1.5 ** (2 * k) / math.factorial(k) ** 2 for k in ks])
    assert np.allclose(model.probabilities, mass / mass.sum(), rtol=1e-12)


def test_random_model_sampler_frequencies():
    w = np.array([[0, 1.0, 0.5], [0.8, 0, 1.2], [0.6, 0.9, 0]])
    model = eu.random_eulerian_model(w, cap=6)
    assert model.probabilities.sum() == pytest.approx(1.0)
    idx = model.sample_indices(100_000, seed=24)
    freq = np.bincount(idx, minlength=len(model.graphs)) / len(idx)
    se = np.sqrt(model.probabilities * (1 - model.probabilities) / len(idx))
    assert np.all(np.abs(freq - model.probabilities) <= 4 * se + 1e-12)
    g = eu.random_eulerian_sampler(w, 6, seed=24)
    assert g.is_eulerian()


def test_random_model_caps():
    with pytest.raises(eu.CapExceededError):
        eu.random_eulerian_model(np.ones((5, 5)) - np.eye(5), 4)
    with pytest.raises(ValueError):
        eu.random_eulerian_model([[0, 0], [0, 0]], 4)


# ---------------------------------------------------------------- thin points


def test_thin_point_consistency():
    rep = eu.thin_point_consistency(nw.path_graph(5), 0.05, 20_000, seed=25)
    assert sum(rep.eligible) > 0
    assert rep.passed
    assert all(p == 1.0 for p, e in zip(rep.probability, rep.eligible) if e)
    assert eu.THIN_CONSTANT * 1 == 1118
