import itertools

import numpy as np
import pytest

from pignn.graph import Graph, generate_random_regular, parse_gset
from pignn.heuristics import (
    EoConfig,
    extremal_optimization,
    flip_gains,
    greedy_construct,
    greedy_local,
    local_search_1flip,
)
from pignn.qubo import evaluate_cut

TRIANGLE = parse_gset("3 3\n1 2 1\n2 3 1\n1 3 1")


def brute_max(g):
    return max(evaluate_cut(g, x) for x in itertools.product([0, 1], repeat=g.n))


def random_graph(rng, n, p=0.35, signed=False):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    w = rng.choice([-1.0, 1.0, 2.0], len(pairs)) if signed else None
    return Graph.from_edges(n, [a for a, _ in pairs], [b for _, b in pairs], w)


def is_one_flip_optimal(g, x):
    base = evaluate_cut(g, x)
    for i in range(g.n):
        y = x.copy()
        y[i] ^= 1
        if evaluate_cut(g, y) > base:
            return False
    return True


def test_greedy_single_edge():
    g = Graph.from_edges(2, [0], [1])
    x = greedy_construct(g, [0, 1])
    assert x.tolist() == [0, 1]
    assert evaluate_cut(g, x) == 1


def test_greedy_triangle_any_order_optimal():
    assert brute_max(TRIANGLE) == 2
    for order in itertools.permutations(range(3)):
        assert evaluate_cut(TRIANGLE, greedy_construct(TRIANGLE, list(order))) == 2


def test_greedy_star_center_first():
    star = Graph.from_edges(5, [0, 0, 0, 0], [1, 2, 3, 4])
    x = greedy_construct(star, [0, 1, 2, 3, 4])
    assert x.tolist() == [0, 1, 1, 1, 1]
    assert evaluate_cut(star, x) == 4 == brute_max(star)


def test_greedy_ties_go_to_side_zero():
    g = Graph.from_edges(4, [0, 1], [2, 2])  # node 3 isolated
    x = greedy_construct(g, [0, 1, 3, 2])
    assert x[0] == 0 and x[3] == 0
    # node 1 has no placed neighbour when placed
    assert x[1] == 0


def test_greedy_rejects_bad_order():
    with pytest.raises(ValueError):
        greedy_construct(TRIANGLE, [0, 0, 1])
    with pytest.raises(ValueError):
        greedy_construct(TRIANGLE, [0, 1])


def test_greedy_beats_random_on_cubic_graphs():
    gammas = []
    for seed in range(100):
        g = generate_random_regular(1000, 3, seed)
        gammas.append(evaluate_cut(g, greedy_construct(g, seed=seed)) / g.n)
    assert np.mean(gammas) > 0.80


def test_flip_gains_match_recount():
    rng = np.random.default_rng(0)
    g = random_graph(rng, 10, signed=True)
    x = rng.integers(0, 2, 10)
    gains = flip_gains(g, x)
    base = evaluate_cut(g, x)
    for i in range(10):
        y = x.copy()
        y[i] ^= 1
        assert gains[i] == pytest.approx(evaluate_cut(g, y) - base)


def test_local_search_fixed_point_on_optimal_k4():
    g = generate_random_regular(4, 3, 0)
    x = np.array([0, 0, 1, 1])
    assert local_search_1flip(g, x).tolist() == x.tolist()


def test_local_search_single_edge():
    g = Graph.from_edges(2, [0], [1])
    y = local_search_1flip(g, [0, 0])
    assert evaluate_cut(g, y) == 1
    assert y.tolist() == [1, 0]  # lowest index flips first


def test_local_search_best_improvement_order():
    # star centred on node 1: the centre gains 3, each leaf 1; flipping the
    # centre first ends the search, flipping leaf 0 first would not
    g = Graph.from_edges(4, [1, 1, 1], [0, 2, 3])
    y = local_search_1flip(g, np.zeros(4, dtype=int))
    assert y.tolist() == [0, 1, 0, 0]


def test_local_search_random_starts():
    rng = np.random.default_rng(1)
    for _ in range(100):
        g = random_graph(rng, 14, signed=bool(rng.integers(2)))
        x = rng.integers(0, 2, 14)
        y = local_search_1flip(g, x)
        assert evaluate_cut(g, y) >= evaluate_cut(g, x)
        assert is_one_flip_optimal(g, y)


def test_local_search_one_flip_optimal_on_200_nodes():
    g = generate_random_regular(200, 3, 5)
    y = greedy_local(g, seed=5)
    assert np.all(flip_gains(g, y) <= 0)
    assert is_one_flip_optimal(g, y)


def test_eo_zero_steps_returns_start():
    g = generate_random_regular(20, 3, 0)
    x0 = np.random.default_rng(0).integers(0, 2, 20)
    assert np.array_equal(extremal_optimization(g, x0, EoConfig(steps=0)), x0)


def test_eo_triangle_reaches_optimum():
    x = extremal_optimization(TRIANGLE, [0, 0, 0], EoConfig(tau=1.4, steps=100, seed=0))
    assert evaluate_cut(TRIANGLE, x) == 2 == brute_max(TRIANGLE)


def test_eo_best_ever_never_below_start():
    rng = np.random.default_rng(2)
    for k in range(30):
        g = random_graph(rng, 12, signed=k % 2 == 0)
        x0 = rng.integers(0, 2, 12)
        x = extremal_optimization(g, x0, EoConfig(steps=50, seed=k))
        assert evaluate_cut(g, x) >= evaluate_cut(g, x0)


def test_eo_prefix_property():
    g = generate_random_regular(300, 3, 7)
    x0 = np.random.default_rng(7).integers(0, 2, 300)
    prev = -np.inf
    for steps in (100, 200, 400, 800, 5000, 10000):
        cut = evaluate_cut(g, extremal_optimization(g, x0, EoConfig(steps=steps, seed=3)))
        assert cut >= prev
        prev = cut


def test_eo_deterministic_and_improves():
    g = generate_random_regular(200, 3, 1)
    x0 = np.zeros(200, dtype=int)
    a = extremal_optimization(g, x0, EoConfig(steps=20000, seed=4))
    b = extremal_optimization(g, x0, EoConfig(steps=20000, seed=4))
    assert np.array_equal(a, b)
    assert evaluate_cut(g, a) / 200 > 1.25


def test_eo_isolated_nodes():
    g = Graph.from_edges(4, [0], [1])
    x = extremal_optimization(g, [0, 0, 0, 0], EoConfig(steps=50, seed=0))
    assert evaluate_cut(g, x) == 1


def test_eo_config_validation():
    with pytest.raises(ValueError):
        EoConfig(tau=1.0)
    with pytest.raises(ValueError):
        EoConfig(steps=-1)
    assert EoConfig().steps_for(50) == 10_000


def test_heuristics_deterministic():
    g = generate_random_regular(500, 3, 11)
    assert np.array_equal(greedy_construct(g, seed=3), greedy_construct(g, seed=3))
    assert np.array_equal(greedy_local(g, seed=3), greedy_local(g, seed=3))
