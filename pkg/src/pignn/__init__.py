"""Physics-inspired GNN heuristics and classical baselines for MaxCut."""

from pignn.graph import (
    Graph,
    GraphGenerationError,
    GsetParseError,
    degree_stats,
    generate_random_regular,
    parse_gset,
    serialize_gset,
)
from pignn.qubo import (
    CutMetrics,
    cut_metrics,
    energy_density,
    evaluate_cut,
    gamma_from_figure_of_merit,
    figure_of_merit,
    improvement_ratio,
    soft_loss,
    soft_loss_grad,
)
from pignn.gnn import (
    ModelParams,
    NumericFailure,
    TrainConfig,
    backward,
    forward,
    init_params,
    round_assignment,
    solve_pignn,
    train,
)
from pignn.heuristics import (
    EoConfig,
    extremal_optimization,
    greedy_construct,
    local_search_1flip,
)

__version__ = "0.1.0"

__all__ = [
    "CutMetrics",
    "EoConfig",
    "Graph",
    "GraphGenerationError",
    "GsetParseError",
    "ModelParams",
    "NumericFailure",
    "TrainConfig",
    "backward",
    "cut_metrics",
    "degree_stats",
    "energy_density",
    "evaluate_cut",
    "extremal_optimization",
    "figure_of_merit",
    "forward",
    "gamma_from_figure_of_merit",
    "generate_random_regular",
    "greedy_construct",
    "improvement_ratio",
    "init_params",
    "local_search_1flip",
    "parse_gset",
    "round_assignment",
    "serialize_gset",
    "soft_loss",
    "soft_loss_grad",
    "solve_pignn",
    "train",
]
