import numpy as np
import pytest
from hypothesis import given, settings

from covergff import network as nw
from covergff.network import (
    DisconnectedError,
    NonPositiveConductanceError,
    ParseError,
    RootOutOfRangeError,
    connected_ordering,
    dumps,
    is_tree,
    load_network,
    tree_parents,
)

from .conftest import networks


def test_single_edge():
    net = load_network("0 1 1.0")
    assert net.n == 2 and net.edge_count == 1
    assert list(net.vertex_conductance) == [1.0, 1.0]


def test_self_loop_counts_in_vertex_conductance():
    net = load_network("0 0 2.0\n0 1 1.0")
    assert net.conductance[0, 0] == 2.0
    assert net.vertex_conductance[0] == 3.0
    assert net.edge_count == 2


def test_duplicate_lines_sum():
    net = load_network("# parallel\n0 1 1.0\n1 0 1.0\n")
    assert net.conductance[0, 1] == 2.0 == net.conductance[1, 0]


@pytest.mark.parametrize(
    "text, root, exc",
    [
        ("0 1 1.0\n2 3 1.0", 0, DisconnectedError),
        ("0 1", 0, ParseError),
        ("0 x 1.0", 0, ParseError),
        ("0 1 0.0", 0, NonPositiveConductanceError),
        ("0 1 -2", 0, NonPositiveConductanceError),
        ("0 1 1.0", 5, RootOutOfRangeError),
    ],
)
def test_load_errors(text, root, exc):
    with pytest.raises(exc):
        load_network(text, root)


def test_error_types_are_distinct():
    kinds = {DisconnectedError, ParseError, NonPositiveConductanceError, RootOutOfRangeError}
    assert len(kinds) == 4
    for k in kinds:
        assert issubclass(k, nw.NetworkError)


@given(networks())
@settings(max_examples=60, deadline=None)
def test_round_trip_is_bit_identical(net):
    again = load_network(dumps(net), net.root)
    assert np.array_equal(again.conductance, net.conductance)


def test_unit_convention_self_loop():
    net = nw.from_edges([(0, 0), (0, 1)])
    assert net.conductance[0, 0] == 2.0


@pytest.mark.parametrize(
    "net, expected",
    [
        (nw.path_graph(3), [0, 1, 2]),
        (nw.star_graph(3), [0, 1, 2, 3]),
        (nw.path_graph(3, root=1), [1, 0, 2]),
    ],
)
def test_connected_ordering_examples(net, expected):
    assert connected_ordering(net) == expected


@given(networks(max_n=9))
@settings(max_examples=60, deadline=None)
def test_connected_ordering_invariant(net):
    order = connected_ordering(net)
    assert sorted(order) == list(range(net.n)) and order[0] == net.root
    adj = net.adjacency
    for k in range(1, len(order)):
        assert any(adj[order[k], order[j]] for j in range(k))


@given(networks(max_n=9))
@settings(max_examples=60, deadline=None)
def test_max_degree_counts_distinct_neighbours(net):
    c = net.conductance
    direct = max(sum(1 for u in range(net.n) if u != v and c[u, v] > 0) for v in range(net.n))
    assert net.max_degree == direct


def test_is_tree():
    assert is_tree(nw.path_graph(3))
    assert not is_tree(nw.complete_graph(3))
    assert not is_tree(nw.from_edges([(0, 1), (1, 1)]))


def test_tree_parents_point_to_root():
    net = nw.binary_tree(2)
    parent = tree_parents(net)
    assert parent[0] == -1
    assert list(parent[1:]) == [0, 0, 1, 1, 2, 2]
    with pytest.raises(nw.NotATreeError):
        tree_parents(nw.cycle_graph(4))


def test_families():
    assert nw.binary_tree(3).n == 15
    assert nw.ladder_graph(15).max_degree == 3
    t = nw.random_tree(50, seed=3)
    assert is_tree(t) and t.n == 50
    assert nw.hop_diameter(nw.path_graph(6)) == 5
    assert nw.resolve_network("path:5").n == 5
