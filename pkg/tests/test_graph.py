import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pignn.graph import (
    Graph,
    GraphGenerationError,
    GsetParseError,
    degree_stats,
    generate_random_regular,
    parse_gset,
    serialize_gset,
)


def edge_set(g):
    u, v, _ = g.edges()
    return set(zip(u.tolist(), v.tolist()))


def test_k4_is_only_cubic_graph_on_four_nodes():
    for seed in range(5):
        g = generate_random_regular(4, 3, seed)
        assert g.m == 6
        assert edge_set(g) == set(itertools.combinations(range(4), 2))


def test_small_regular():
    g = generate_random_regular(10, 3, seed=1)
    g.check()
    assert g.m == 15
    assert np.all(g.degrees == 3)


def test_twenty_large_instances_valid_and_distinct():
    graphs = [generate_random_regular(10_000, 3, s) for s in range(20)]
    hashes = set()
    for g in graphs:
        g.check()
        assert g.row_offsets[0] == 0 and g.row_offsets[-1] == 2 * g.m == 3 * 10_000
        assert np.all(g.degrees == 3)
        hashes.add(g.instance_hash)
    assert len(hashes) == 20


def test_matches_networkx_view():
    g = generate_random_regular(200, 4, 3)
    G = nx.Graph()
    u, v, _ = g.edges()
    G.add_edges_from(zip(u.tolist(), v.tolist()))
    assert nx.number_of_selfloops(G) == 0
    assert G.number_of_edges() == g.m == 400
    assert all(deg == 4 for _, deg in G.degree())


def test_seed_determinism():
    a = generate_random_regular(500, 3, 42)
    b = generate_random_regular(500, 3, 42)
    c = generate_random_regular(500, 3, 43)
    assert a == b
    assert edge_set(a) != edge_set(c)


@pytest.mark.parametrize("n,d", [(5, 3), (4, 4), (4, 0), (3, 5)])
def test_generation_preconditions(n, d):
    with pytest.raises(ValueError):
        generate_random_regular(n, d, 0)


def test_generation_restart_cap():
    # dense regime where a simple pairing is rare
    with pytest.raises(GraphGenerationError):
        generate_random_regular(12, 10, 0, max_restarts=3)


def test_parse_triangle():
    g = parse_gset("3 3\n1 2 1\n2 3 1\n1 3 1")
    g.check()
    assert g.n == 3 and g.m == 3
    assert np.all(g.weights == 1.0)
    assert edge_set(g) == {(0, 1), (1, 2), (0, 2)}


def test_parse_negative_weight():
    g = parse_gset("2 1\n1 2 -1")
    assert g.m == 1
    assert g.edges()[2].tolist() == [-1.0]


def test_parse_real_weight_and_blank_lines():
    g = parse_gset("\n3 2\n\n1 2 0.25\n3 2 2.5\n\n")
    assert sorted(g.edges()[2].tolist()) == [0.25, 2.5]


@pytest.mark.parametrize(
    "text,line",
    [
        ("2 1\n1 3 1", 2),
        ("2 1\n0 1 1", 2),
        ("3 2\n1 2 1\n2 1 1", 3),
        ("3 1\n2 2 1", 2),
        ("3 1\n1 2", 2),
        ("3 1\n1 2 x", 2),
        ("3 2\n1 2 1", 2),
        ("3 x\n1 2 1", 1),
        ("3 1\n1 2 1\n2 3 1", 3),
    ],
)
def test_parse_errors_name_line(text, line):
    with pytest.raises(GsetParseError) as err:
        parse_gset(text)
    assert err.value.lineno == line
    assert f"line {line}" in str(err.value)


def test_parse_error_names_source():
    with pytest.raises(GsetParseError, match="G99.txt:line 2"):
        parse_gset("2 1\n1 3 1", source="G99.txt")


def test_serialize_format():
    g = parse_gset("3 3\n1 2 1\n2 3 -1\n1 3 0.5")
    assert serialize_gset(g) == "3 3\n1 2 1\n1 3 0.5\n2 3 -1\n"


@st.composite
def weighted_graphs(draw):
    n = draw(st.integers(1, 12))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True) if pairs else st.just([]))
    w = draw(st.lists(
        st.one_of(st.integers(-5, 5).map(float), st.floats(-10, 10, allow_nan=False)),
        min_size=len(chosen), max_size=len(chosen)))
    u = [a for a, _ in chosen]
    v = [b for _, b in chosen]
    return Graph.from_edges(n, u, v, w)


@given(weighted_graphs())
@settings(max_examples=200, deadline=None)
def test_gset_round_trip(g):
    g.check()
    again = parse_gset(serialize_gset(g))
    assert again == g
    assert serialize_gset(again) == serialize_gset(g)


def test_degree_stats():
    k4 = generate_random_regular(4, 3, 0)
    assert degree_stats(k4) == (3, 3, True, 3)
    path = Graph.from_edges(3, [0, 1], [1, 2])
    assert degree_stats(path) == (1, 2, False, None)
    tri = parse_gset("3 3\n1 2 1\n2 3 1\n1 3 1")
    assert degree_stats(tri) == (2, 2, True, 2)


def test_graph_is_read_only():
    g = generate_random_regular(10, 3, 0)
    with pytest.raises(ValueError):
        g.neighbors[0] = 5
    with pytest.raises(AttributeError):
        g.n = 3


def test_from_edges_rejects_bad_input():
    with pytest.raises(ValueError):
        Graph.from_edges(3, [0, 1], [1, 0])
    with pytest.raises(ValueError):
        Graph.from_edges(3, [0], [0])
    with pytest.raises(ValueError):
        Graph.from_edges(2, [0], [2])
