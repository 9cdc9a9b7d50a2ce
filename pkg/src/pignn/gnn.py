"""Two-layer GCN / GraphSAGE solver trained against the relaxed MaxCut loss.

The stack is embeddings -> layer1 (ReLU) -> layer2 (width 1) -> sigmoid, with
per-node embeddings trained jointly with the layer weights. Gradients are
written out by hand; every arithmetic step runs in float64.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, fields, replace
from typing import Callable, NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from pignn.graph import Graph
from pignn.qubo import CutMetrics, cut_metrics

KINDS = ("gcn", "sage")


class NumericFailure(FloatingPointError):
    def __init__(self, message: str, epoch: int | None = None):
        self.epoch = epoch
        if epoch is not None:
            message = f"epoch {epoch}: {message}"
        super().__init__(message)


# -- message-passing operators ------------------------------------------------

def gcn_operator(g: Graph) -> sp.csr_matrix:
    """D^-1/2 (A + I) D^-1/2 over the unweighted structure of ``g``."""
    a_hat = g.structure + sp.identity(g.n, format="csr")
    dinv = 1.0 / np.sqrt(np.asarray(a_hat.sum(axis=1)).ravel())
    return sp.csr_matrix(sp.diags(dinv) @ a_hat @ sp.diags(dinv))


def mean_operator(g: Graph) -> sp.csr_matrix:
    """Row-normalised adjacency; rows of isolated nodes are zero."""
    deg = g.degrees.astype(np.float64)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    return sp.csr_matrix(sp.diags(inv) @ g.structure)


@dataclass(frozen=True)
class Operators:
    gcn: sp.csr_matrix
    mean: sp.csr_matrix
    mean_t: sp.csr_matrix
    loss: sp.csr_matrix

    @classmethod
    def for_graph(cls, g: Graph, kind: str) -> Operators:
        if kind == "gcn":
            gcn = gcn_operator(g)
            mean = mean_t = None
        else:
            gcn = None
            mean = mean_operator(g)
            mean_t = mean.T.tocsr()
        return cls(gcn, mean, mean_t, g.adjacency)


# -- activations ----------------------------------------------------------------

def _relu(z):
    return np.maximum(z, 0.0)


def _identity(z):
    return z


ACTIVATIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "relu": _relu,
    "linear": _identity,
    "identity": _identity,
    "sigmoid": expit,
}


def _activation(act) -> Callable[[np.ndarray], np.ndarray]:
    if callable(act):
        return act
    try:
        return ACTIVATIONS[act]
    except KeyError:
        raise ValueError(f"unknown activation {act!r}") from None


def _check_features(g: Graph, H: np.ndarray, W: np.ndarray, b: np.ndarray) -> None:
    if H.ndim != 2 or H.shape[0] != g.n:
        raise ValueError(f"features have shape {H.shape}, expected ({g.n}, k)")
    if W.ndim != 2 or W.shape[0] != H.shape[1]:
        raise ValueError(f"weight shape {W.shape} does not match feature width {H.shape[1]}")
    if b.shape != (W.shape[1],):
        raise ValueError(f"bias shape {b.shape}, expected ({W.shape[1]},)")
    if not np.all(np.isfinite(H)):
        raise NumericFailure("non-finite layer input")


# -- layers -------------------------------------------------------------------
#
# A layer maps (operators, H, params) -> (pre-activation Z, cache) and back
# (operators, cache, dZ, params) -> (dH, param grads). The model stack does not
# know which kind it holds.

class GCNLayer:
    kind = "gcn"

    @staticmethod
    def init(rng: np.random.Generator, d_in: int, d_out: int) -> dict[str, np.ndarray]:
        bound = 1.0 / math.sqrt(d_in)
        return {
            "W": rng.uniform(-bound, bound, (d_in, d_out)),
            "b": rng.uniform(-bound, bound, d_out),
        }

    @staticmethod
    def forward(ops: Operators, H, p):
        # A (H W) is cheaper than (A H) W when the layer narrows.
        msg = ops.gcn @ (H @ p["W"])
        return msg + p["b"], (H, msg)

    @staticmethod
    def backward(ops: Operators, cache, dZ, p):
        H, _ = cache
        g_agg = ops.gcn.T @ dZ
        grads = {"W": H.T @ g_agg, "b": dZ.sum(axis=0)}
        return g_agg @ p["W"].T, grads


class SAGELayer:
    kind = "sage"

    @staticmethod
    def init(rng: np.random.Generator, d_in: int, d_out: int) -> dict[str, np.ndarray]:
        bound = 1.0 / math.sqrt(d_in)
        return {
            "W_self": rng.uniform(-bound, bound, (d_in, d_out)),
            "W_neigh": rng.uniform(-bound, bound, (d_in, d_out)),
            "b": rng.uniform(-bound, bound, d_out),
        }

    @staticmethod
    def forward(ops: Operators, H, p):
        msg = ops.mean @ (H @ p["W_neigh"])
        return H @ p["W_self"] + msg + p["b"], (H, msg)

    @staticmethod
    def backward(ops: Operators, cache, dZ, p):
        H, _ = cache
        g_neigh = ops.mean_t @ dZ
        grads = {
            "W_self": H.T @ dZ,
            "W_neigh": H.T @ g_neigh,
            "b": dZ.sum(axis=0),
        }
        return dZ @ p["W_self"].T + g_neigh @ p["W_neigh"].T, grads


LAYERS = {"gcn": GCNLayer, "sage": SAGELayer}


def gcn_layer_forward(g: Graph, H, W, b, activation="linear") -> np.ndarray:
    H, W, b = (np.asarray(a, dtype=np.float64) for a in (H, W, b))
    _check_features(g, H, W, b)
    ops = Operators(gcn_operator(g), None, None, g.adjacency)
    Z, _ = GCNLayer.forward(ops, H, {"W": W, "b": b})
    return _activation(activation)(Z)


def sage_layer_forward(g: Graph, H, W_self, W_neigh, b, activation="linear") -> np.ndarray:
    H, W_self, W_neigh, b = (np.asarray(a, dtype=np.float64) for a in (H, W_self, W_neigh, b))
    _check_features(g, H, W_self, b)
    if W_neigh.shape != W_self.shape:
        raise ValueError(f"W_neigh shape {W_neigh.shape} differs from W_self {W_self.shape}")
    mean = mean_operator(g)
    ops = Operators(None, mean, None, g.adjacency)
    Z, _ = SAGELayer.forward(ops, H, {"W_self": W_self, "W_neigh": W_neigh, "b": b})
    return _activation(activation)(Z)


# -- model ----------------------------------------------------------------------

@dataclass
class TrainConfig:
    kind: str = "gcn"
    embedding_dim: int | None = None  # None: ceil(sqrt(n)) clipped to [10, 100]
    hidden_dim: int | None = None  # None: ceil(embedding_dim / 2)
    learning_rate: float = 1e-3
    max_epochs: int = 100_000
    patience: int = 500
    tolerance: float = 1e-4
    rounding_threshold: float = 0.5
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    restarts: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        for name in ("embedding_dim", "hidden_dim"):
            val = getattr(self, name)
            if val is not None and val < 1:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0 or self.max_epochs < 1 or self.patience < 1 or self.restarts < 1:
            raise ValueError("learning_rate, max_epochs, patience and restarts must be positive")
        if self.patience > self.max_epochs:
            raise ValueError("patience may not exceed max_epochs")
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")
        if not 0.0 < self.rounding_threshold < 1.0:
            raise ValueError("rounding_threshold must lie in (0, 1)")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0 and self.eps > 0):
            raise ValueError("invalid Adam constants")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def dims(self, n: int) -> tuple[int, int]:
        d0 = self.embedding_dim or min(max(math.ceil(math.sqrt(n)), 10), 100)
        h = self.hidden_dim or math.ceil(d0 / 2)
        return d0, h

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class ModelParams:
    kind: str
    embeddings: np.ndarray
    layer1: dict[str, np.ndarray]
    layer2: dict[str, np.ndarray]

    def named_tensors(self) -> dict[str, np.ndarray]:
        out = {"embeddings": self.embeddings}
        for lname in ("layer1", "layer2"):
            for k, v in getattr(self, lname).items():
                out[f"{lname}.{k}"] = v
        return out

    def copy(self) -> ModelParams:
        return ModelParams(
            self.kind,
            self.embeddings.copy(),
            {k: v.copy() for k, v in self.layer1.items()},
            {k: v.copy() for k, v in self.layer2.items()},
        )

    def zeros_like(self) -> ModelParams:
        return ModelParams(
            self.kind,
            np.zeros_like(self.embeddings),
            {k: np.zeros_like(v) for k, v in self.layer1.items()},
            {k: np.zeros_like(v) for k, v in self.layer2.items()},
        )

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(t)) for t in self.named_tensors().values())


def init_params(g: Graph, cfg: TrainConfig) -> ModelParams:
    """Uniform +-1/sqrt(fan_in) initialisation, deterministic in ``cfg.seed``.

    Embedding rows are the network inputs, so their fan-in is taken as the
    embedding width.
    """
    d0, h = cfg.dims(g.n)
    rng = np.random.default_rng(cfg.seed)
    layer = LAYERS[cfg.kind]
    bound = 1.0 / math.sqrt(d0)
    emb = rng.uniform(-bound, bound, (g.n, d0))
    l1 = layer.init(rng, d0, h)
    l2 = layer.init(rng, h, 1)
    params = ModelParams(cfg.kind, emb, l1, l2)
    flat = np.concatenate([t.ravel() for t in params.named_tensors().values()])
    if np.all(flat == flat[0]):  # pragma: no cover - measure-zero event
        raise RuntimeError("degenerate initialisation")
    return params


@dataclass
class ForwardTrace:
    kind: str
    cache1: tuple
    z1: np.ndarray
    h1: np.ndarray
    cache2: tuple
    z2: np.ndarray
    p: np.ndarray
    ops: Operators = field(repr=False)


def _ops_for(g: Graph, kind: str, ops: Operators | None) -> Operators:
    return ops if ops is not None else Operators.for_graph(g, kind)


def forward(g: Graph, params: ModelParams, ops: Operators | None = None, epoch: int | None = None):
    """Return (p, trace) with p = sigmoid(layer2(relu(layer1(embeddings))))."""
    if params.embeddings.shape[0] != g.n:
        raise ValueError(f"model has {params.embeddings.shape[0]} embeddings, graph has {g.n} nodes")
    ops = _ops_for(g, params.kind, ops)
    layer = LAYERS[params.kind]
    z1, c1 = layer.forward(ops, params.embeddings, params.layer1)
    h1 = _relu(z1)
    z2, c2 = layer.forward(ops, h1, params.layer2)
    if not np.all(np.isfinite(z2)):
        raise NumericFailure("non-finite activations", epoch)
    p = expit(z2[:, 0])
    return p, ForwardTrace(params.kind, c1, z1, h1, c2, z2, p, ops)


def backward(g: Graph, params: ModelParams, trace: ForwardTrace, dL_dp) -> ModelParams:
    """Gradients of a scalar loss w.r.t. every tensor in ``params``."""
    dL_dp = np.asarray(dL_dp, dtype=np.float64)
    if trace.kind != params.kind or trace.p.shape != (g.n,) or trace.z1.shape[0] != g.n:
        raise ValueError("trace does not belong to this graph and model")
    if dL_dp.shape != (g.n,):
        raise ValueError(f"upstream gradient has shape {dL_dp.shape}, expected ({g.n},)")
    layer = LAYERS[params.kind]
    p = trace.p
    dz2 = (dL_dp * p * (1.0 - p))[:, None]
    dh1, g2 = layer.backward(trace.ops, trace.cache2, dz2, params.layer2)
    dz1 = dh1 * (trace.z1 > 0)
    demb, g1 = layer.backward(trace.ops, trace.cache1, dz1, params.layer1)
    return ModelParams(params.kind, demb, g1, g2)


def _loss_and_grad(g: Graph, ops: Operators, p: np.ndarray) -> tuple[float, np.ndarray]:
    u, v, w = g.edges()
    pu, pv = p[u], p[v]
    loss = float(np.sum(w * (2.0 * pu * pv - pu - pv)))
    return loss, ops.loss @ (2.0 * p - 1.0)


class Adam:
    def __init__(self, params: ModelParams, lr: float, beta1: float, beta2: float, eps: float):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.named_tensors().items()}
        self.v = {k: np.zeros_like(v) for k, v in params.named_tensors().items()}
        self.t = 0

    def step(self, params: ModelParams, grads: ModelParams) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        gt = grads.named_tensors()
        for k, theta in params.named_tensors().items():
            gk = gt[k]
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * gk
            v *= self.beta2
            v += (1.0 - self.beta2) * gk * gk
            theta -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class TrainResult(NamedTuple):
    params: ModelParams
    p: np.ndarray
    loss_history: np.ndarray


def train(g: Graph, cfg: TrainConfig) -> TrainResult:
    """Full-batch Adam on the relaxed loss; returns the best state visited.

    Stops after ``max_epochs`` or once ``patience`` consecutive epochs fail
    to beat the best loss so far by more than ``tolerance``.
    """
    params = init_params(g, cfg)
    ops = Operators.for_graph(g, cfg.kind)
    opt = Adam(params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    history = []
    best_loss = math.inf
    best_params, best_p = params.copy(), None
    plateau_ref = math.inf
    stale = 0
    for epoch in range(cfg.max_epochs):
        p, trace = forward(g, params, ops, epoch)
        loss, dp = _loss_and_grad(g, ops, p)
        if not math.isfinite(loss):
            raise NumericFailure(f"loss is {loss}", epoch)
        history.append(loss)
        if loss < best_loss:
            best_loss = loss
            best_params, best_p = params.copy(), p
        if loss < plateau_ref - cfg.tolerance:
            plateau_ref = loss
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
        grads = backward(g, params, trace, dp)
        opt.step(params, grads)
    return TrainResult(best_params, best_p, np.asarray(history))


def round_assignment(p, threshold: float = 0.5) -> np.ndarray:
    """x_i = 1 iff p_i >= threshold."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    return (np.asarray(p) >= threshold).astype(np.int8)


class PignnResult(NamedTuple):
    assignment: np.ndarray
    metrics: CutMetrics
    runtime: float  # seconds, training included
    epochs: int


def restart_seed(seed: int, k: int) -> int:
    if k == 0:
        return seed
    return int(np.random.SeedSequence([seed, k]).generate_state(1, np.uint64)[0])


def solve_pignn(g: Graph, cfg: TrainConfig) -> PignnResult:
    """Train, round and score; with ``restarts > 1`` keep the best cut."""
    t0 = time.perf_counter()
    best = None
    epochs = 0
    for k in range(cfg.restarts):
        res = train(g, replace(cfg, seed=restart_seed(cfg.seed, k)))
        epochs += len(res.loss_history)
        x = round_assignment(res.p, cfg.rounding_threshold)
        m = cut_metrics(g, x)
        if best is None or m.cut > best[1].cut:
            best = (x, m)
    runtime = time.perf_counter() - t0
    return PignnResult(best[0], best[1], runtime, epochs)
