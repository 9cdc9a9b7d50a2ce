"""MaxCut objective, its probabilistic relaxation, and energy-density metrics.

With spins s = 2x - 1 the Ising energy of an unweighted d-regular graph is
H = sum_edges s_i s_j = m - 2 cut, so the energy per node is
e = d/2 - 2 gamma where gamma = cut / n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from pignn.graph import Graph, degree_stats


def _check_length(g: Graph, x: np.ndarray, what: str) -> None:
    if x.ndim != 1 or len(x) != g.n:
        raise ValueError(f"{what} has shape {x.shape}, expected ({g.n},)")


def as_cut_assignment(g: Graph, x) -> np.ndarray:
    """Validate a 0/1 vector and return it as int8."""
    x = np.asarray(x)
    _check_length(g, x, "assignment")
    if not np.all((x == 0) | (x == 1)):
        raise ValueError("assignment entries must be 0 or 1")
    return x.astype(np.int8)


def as_soft_assignment(g: Graph, p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    _check_length(g, p, "probabilities")
    if not np.all((p >= 0.0) & (p <= 1.0)):
        raise ValueError("probabilities must lie in [0, 1]")
    return p


def evaluate_cut(g: Graph, x) -> float:
    """Total weight of edges whose endpoints sit on different sides."""
    x = as_cut_assignment(g, x)
    u, v, w = g.edges()
    return float(np.sum(w * (x[u] != x[v])))


def soft_loss(g: Graph, p) -> float:
    """Relaxed MaxCut Hamiltonian sum_edges w (2 p_i p_j - p_i - p_j).

    Equals ``-evaluate_cut`` exactly when ``p`` is binary.
    """
    p = as_soft_assignment(g, p)
    u, v, w = g.edges()
    pu, pv = p[u], p[v]
    return float(np.sum(w * (2.0 * pu * pv - pu - pv)))


def soft_loss_grad(g: Graph, p) -> np.ndarray:
    p = as_soft_assignment(g, p)
    return g.adjacency @ (2.0 * p - 1.0)


def energy_density(gamma: float, d: int) -> float:
    return d / 2.0 - 2.0 * gamma


def figure_of_merit(gamma: float, d: int) -> float:
    """Energy per node scaled by 1/sqrt(d)."""
    return energy_density(gamma, d) / math.sqrt(d)


def gamma_from_figure_of_merit(fom: float, d: int) -> float:
    return (d / 2.0 - fom * math.sqrt(d)) / 2.0


def improvement_ratio(a: float, b: float) -> float:
    if b == 0:
        raise ZeroDivisionError("reference figure of merit is zero")
    return abs(a - b) / abs(b)


@dataclass(frozen=True)
class CutMetrics:
    cut: float
    gamma: float
    n: int
    d: int | None = None
    energy_density: float | None = None
    figure_of_merit: float | None = None

    @property
    def energy_defined(self) -> bool:
        return self.energy_density is not None


def cut_metrics(g: Graph, x) -> CutMetrics:
    """Cut value and densities; energy fields are None unless ``g`` is unit-weight regular."""
    cut = evaluate_cut(g, x)
    gamma = cut / g.n
    stats = degree_stats(g)
    if stats.is_regular and g.is_unweighted and stats.d:
        d = stats.d
        return CutMetrics(cut, gamma, g.n, d, energy_density(gamma, d), figure_of_merit(gamma, d))
    return CutMetrics(cut, gamma, g.n)
