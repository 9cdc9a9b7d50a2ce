"""Sequential baselines: greedy construction, 1-flip local search, tau-EO."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

import numpy as np
from sortedcontainers import SortedList

from pignn.graph import Graph
from pignn.qubo import as_cut_assignment

_EO_CHUNK = 4096


@dataclass(frozen=True)
class EoConfig:
    tau: float = 1.4
    steps: int | None = None  # None: 200 * n
    seed: int = 0

    def __post_init__(self):
        if not self.tau > 1.0:
            raise ValueError("tau must exceed 1")
        if self.steps is not None and self.steps < 0:
            raise ValueError("steps must be non-negative")

    def steps_for(self, n: int) -> int:
        return 200 * n if self.steps is None else self.steps


def _rows(g: Graph) -> tuple[list[list[int]], list[list[float]]]:
    ro = g.row_offsets.tolist()
    nb = g.neighbors.tolist()
    w = g.weights.tolist()
    return [nb[ro[i]:ro[i + 1]] for i in range(g.n)], [w[ro[i]:ro[i + 1]] for i in range(g.n)]


def random_order(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).permutation(n)


def greedy_construct(g: Graph, order=None, seed: int = 0) -> np.ndarray:
    """Place nodes one at a time on the side that cuts more already-placed weight.

    Ties, including nodes with no placed neighbours, go to side 0. Without an
    explicit ``order`` a random permutation drawn from ``seed`` is used.
    """
    order = random_order(g.n, seed) if order is None else np.asarray(order)
    if order.shape != (g.n,) or not np.array_equal(np.sort(order), np.arange(g.n)):
        raise ValueError("order must be a permutation of range(n)")
    nbrs, wts = _rows(g)
    side = [-1] * g.n
    for i in order.tolist():
        to0 = to1 = 0.0
        for j, w in zip(nbrs[i], wts[i]):
            s = side[j]
            if s == 0:
                to0 += w
            elif s == 1:
                to1 += w
        # side 1 cuts the weight towards side 0 and vice versa
        side[i] = 1 if to0 > to1 else 0
    return np.asarray(side, dtype=np.int8)


def flip_gains(g: Graph, x) -> np.ndarray:
    """Change in cut weight from flipping each node alone."""
    x = as_cut_assignment(g, x)
    same = x[g.sources] == x[g.neighbors]
    return np.bincount(g.sources, weights=np.where(same, g.weights, -g.weights), minlength=g.n)


def local_search_1flip(g: Graph, x) -> np.ndarray:
    """Best-improvement single-flip descent until no flip raises the cut.

    The node with the largest positive gain is flipped each step, lowest
    index first on ties.
    """
    return _local_search(g, x)[0]


def _local_search(g: Graph, x) -> tuple[np.ndarray, int]:
    x = as_cut_assignment(g, x).tolist()
    nbrs, wts = _rows(g)

    def gain(i: int) -> float:
        xi = x[i]
        return sum(w if x[j] == xi else -w for j, w in zip(nbrs[i], wts[i]))

    gains = [gain(i) for i in range(g.n)]
    heap = [(-gi, i) for i, gi in enumerate(gains) if gi > 0]
    heapq.heapify(heap)
    flips = 0
    while heap:
        neg, i = heapq.heappop(heap)
        if -neg != gains[i] or gains[i] <= 0:
            continue  # stale entry
        x[i] ^= 1
        flips += 1
        for k in (i, *nbrs[i]):
            gains[k] = gain(k)
            if gains[k] > 0:
                heapq.heappush(heap, (-gains[k], k))
    return np.asarray(x, dtype=np.int8), flips


def greedy_local(g: Graph, order=None, seed: int = 0) -> np.ndarray:
    return local_search_1flip(g, greedy_construct(g, order, seed))


def _rank_cdf(n: int, tau: float) -> np.ndarray:
    p = np.arange(1, n + 1, dtype=np.float64) ** -tau
    cdf = np.cumsum(p)
    return cdf / cdf[-1]


def extremal_optimization(g: Graph, x0, cfg: EoConfig = EoConfig(),
                          on_flip: Callable[[int], None] | None = None) -> np.ndarray:
    """tau-EO: flip a node of rank k (worst fitness first) with P(k) ~ k^-tau.

    Fitness is the incident cut weight over the total absolute incident
    weight; isolated nodes have fitness 1. Ties in fitness rank by node
    index. Every flip is accepted; the best assignment seen is returned.
    ``on_flip`` receives each flipped node in order.
    """
    x = as_cut_assignment(g, x0).tolist()
    steps = cfg.steps_for(g.n)
    if steps == 0 or g.n == 0:
        return np.asarray(x, dtype=np.int8)
    nbrs, wts = _rows(g)
    norm = [sum(abs(w) for w in ws) for ws in wts]

    def cut_at(i: int) -> float:
        xi = x[i]
        return sum(w for j, w in zip(nbrs[i], wts[i]) if x[j] != xi)

    def fitness(i: int) -> float:
        return cut_at(i) / norm[i] if norm[i] > 0 else 1.0

    fit = [fitness(i) for i in range(g.n)]
    ranked = SortedList((f, i) for i, f in enumerate(fit))
    cut = sum(cut_at(i) for i in range(g.n)) / 2.0
    best_cut = cut
    since_best: list[int] = []

    cdf = _rank_cdf(g.n, cfg.tau)
    rng = np.random.default_rng(cfg.seed)
    done = 0
    while done < steps:
        draws = np.searchsorted(cdf, rng.random(_EO_CHUNK), side="right")
        for k in draws[: steps - done].tolist():
            _, i = ranked[min(k, g.n - 1)]
            before = cut_at(i)
            x[i] ^= 1
            cut += sum(wts[i]) - 2.0 * before
            for v in (i, *nbrs[i]):
                ranked.remove((fit[v], v))
                fit[v] = fitness(v)
                ranked.add((fit[v], v))
            since_best.append(i)
            if on_flip is not None:
                on_flip(i)
            if cut > best_cut:
                best_cut = cut
                since_best.clear()
        done += min(_EO_CHUNK, steps - done)
    for i in since_best:
        x[i] ^= 1
    return np.asarray(x, dtype=np.int8)
