"""Problem instances: an immutable CSR graph, random regular sampling, Gset I/O."""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, TextIO

import numpy as np
import scipy.sparse as sp

DEFAULT_MAX_RESTARTS = 10_000


class GraphGenerationError(RuntimeError):
    pass


class GsetParseError(ValueError):
    """Malformed Gset text. ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int | None = None, source: str | None = None):
        self.lineno = lineno
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if lineno is not None:
            where += f"line {lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected weighted simple graph stored in CSR form.

    Every undirected edge appears twice, once in each endpoint's row, and
    each row is sorted by neighbor index. Arrays are read-only.
    """

    n: int
    row_offsets: np.ndarray
    neighbors: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_offsets", _frozen(np.asarray(self.row_offsets, dtype=np.int64)))
        object.__setattr__(self, "neighbors", _frozen(np.asarray(self.neighbors, dtype=np.int64)))
        object.__setattr__(self, "weights", _frozen(np.asarray(self.weights, dtype=np.float64)))

    @classmethod
    def from_edges(cls, n: int, u, v, w=None) -> Graph:
        """Build from an undirected edge list, each edge given once."""
        if n <= 0:
            raise ValueError(f"node count must be positive, got {n}")
        u = np.asarray(u, dtype=np.int64).ravel()
        v = np.asarray(v, dtype=np.int64).ravel()
        if u.shape != v.shape:
            raise ValueError("edge endpoint arrays differ in length")
        w = np.ones(len(u)) if w is None else np.asarray(w, dtype=np.float64).ravel()
        if w.shape != u.shape:
            raise ValueError("weight array length does not match edge count")
        if len(u) and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= n):
            raise ValueError("node index out of range")
        if np.any(u == v):
            raise ValueError("self-loops are not allowed")
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        ww = np.concatenate([w, w])
        order = np.lexsort((dst, src))
        src, dst, ww = src[order], dst[order], ww[order]
        if len(src) > 1 and np.any((src[1:] == src[:-1]) & (dst[1:] == dst[:-1])):
            raise ValueError("duplicate edge")
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
        return cls(n, offsets, dst, ww)

    @property
    def m(self) -> int:
        return len(self.neighbors) // 2

    @cached_property
    def degrees(self) -> np.ndarray:
        return _frozen(np.diff(self.row_offsets))

    @cached_property
    def sources(self) -> np.ndarray:
        """Row index of every stored (directed) entry."""
        return _frozen(np.repeat(np.arange(self.n, dtype=np.int64), self.degrees))

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        a = sp.csr_matrix((self.weights, self.neighbors, self.row_offsets), shape=(self.n, self.n))
        a.data.setflags(write=False)
        return a

    @cached_property
    def structure(self) -> sp.csr_matrix:
        """Unweighted 0/1 adjacency, used for message passing."""
        ones = np.ones(len(self.neighbors))
        return sp.csr_matrix((ones, self.neighbors, self.row_offsets), shape=(self.n, self.n))

    @cached_property
    def _edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        mask = self.sources < self.neighbors
        return _frozen(self.sources[mask]), _frozen(self.neighbors[mask]), _frozen(self.weights[mask])

    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Each undirected edge once as (u, v, w) with u < v, sorted."""
        return self._edge_arrays

    @property
    def is_unweighted(self) -> bool:
        return bool(np.all(self.weights == 1.0))

    @cached_property
    def instance_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.int64(self.n).tobytes())
        for arr in (self.row_offsets, self.neighbors, self.weights):
            h.update(arr.tobytes())
        return h.hexdigest()[:16]

    def check(self) -> None:
        """Raise AssertionError if any structural invariant is broken."""
        ro, nb, w = self.row_offsets, self.neighbors, self.weights
        assert len(ro) == self.n + 1 and ro[0] == 0 and ro[-1] == len(nb) == len(w)
        assert np.all(np.diff(ro) >= 0)
        assert len(nb) % 2 == 0
        if len(nb):
            assert nb.min() >= 0 and nb.max() < self.n
        src = self.sources
        assert not np.any(src == nb), "self-loop"
        for i in range(self.n):
            row = nb[ro[i]:ro[i + 1]]
            assert np.all(np.diff(row) > 0), f"row {i} unsorted or duplicated"
        a = self.adjacency
        assert (a != a.T).nnz == 0, "asymmetric"

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.neighbors, other.neighbors)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def generate_random_regular(n: int, d: int, seed: int, max_restarts: int = DEFAULT_MAX_RESTARTS) -> Graph:
    """Sample a simple d-regular graph with the pairing model.

    Stubs are shuffled and paired; any self-loop or repeated pair throws the
    whole pairing away and the process restarts.
    """
    if not 0 < d < n:
        raise ValueError(f"need 0 < d < n, got n={n}, d={d}")
    if (n * d) % 2:
        raise ValueError(f"n*d must be even, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    for _ in range(max_restarts + 1):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        u = pairs.min(axis=1)
        v = pairs.max(axis=1)
        if np.any(u == v):
            continue
        keys = u * n + v
        if len(np.unique(keys)) != len(keys):
            continue
        return Graph.from_edges(n, u, v)
    raise GraphGenerationError(f"no simple pairing for n={n}, d={d} after {max_restarts} restarts")


class DegreeStats(NamedTuple):
    min_degree: int
    max_degree: int
    is_regular: bool
    d: int | None


def degree_stats(g: Graph) -> DegreeStats:
    deg = g.degrees
    lo, hi = int(deg.min()), int(deg.max())
    return DegreeStats(lo, hi, lo == hi, lo if lo == hi else None)


def _number(tok: str, lineno: int, source: str | None) -> float:
    try:
        return float(int(tok))
    except ValueError:
        pass
    try:
        val = float(tok)
    except ValueError:
        raise GsetParseError(f"bad weight {tok!r}", lineno, source) from None
    if not np.isfinite(val):
        raise GsetParseError(f"non-finite weight {tok!r}", lineno, source)
    return val


def _index(tok: str, n: int, lineno: int, source: str | None) -> int:
    try:
        k = int(tok)
    except ValueError:
        raise GsetParseError(f"bad node index {tok!r}", lineno, source) from None
    if not 1 <= k <= n:
        raise GsetParseError(f"node index {k} out of range 1..{n}", lineno, source)
    return k - 1


def parse_gset(text: str | TextIO, source: str | None = None) -> Graph:
    """Parse the Gset format: header ``n m`` then ``m`` lines of ``u v w``."""
    if not isinstance(text, str):
        text = text.read()
    lines = [(i, ln.split()) for i, ln in enumerate(text.splitlines(), start=1)]
    lines = [(i, toks) for i, toks in lines if toks]
    if not lines:
        raise GsetParseError("empty input", None, source)
    lineno, header = lines[0]
    if len(header) != 2:
        raise GsetParseError("header must be 'n m'", lineno, source)
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError:
        raise GsetParseError("header must hold two integers", lineno, source) from None
    if n <= 0 or m < 0:
        raise GsetParseError(f"invalid header n={n} m={m}", lineno, source)
    body = lines[1:]
    if len(body) != m:
        at = body[m][0] if len(body) > m else (body[-1][0] if body else lineno)
        raise GsetParseError(f"header declares {m} edges, found {len(body)}", at, source)

    u = np.empty(m, dtype=np.int64)
    v = np.empty(m, dtype=np.int64)
    w = np.empty(m, dtype=np.float64)
    seen: dict[tuple[int, int], int] = {}
    for k, (lineno, toks) in enumerate(body):
        if len(toks) != 3:
            raise GsetParseError(f"expected 'u v w', got {len(toks)} fields", lineno, source)
        a = _index(toks[0], n, lineno, source)
        b = _index(toks[1], n, lineno, source)
        if a == b:
            raise GsetParseError(f"self-loop on node {a + 1}", lineno, source)
        key = (min(a, b), max(a, b))
        if key in seen:
            raise GsetParseError(f"duplicate edge {a + 1}-{b + 1} (first on line {seen[key]})", lineno, source)
        seen[key] = lineno
        u[k], v[k], w[k] = a, b, _number(toks[2], lineno, source)
    return Graph.from_edges(n, u, v, w)


def _fmt_weight(x: float) -> str:
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def serialize_gset(g: Graph, out: TextIO | None = None) -> str | None:
    """Write ``g`` in Gset format. Returns the text when ``out`` is None."""
    buf = io.StringIO() if out is None else out
    u, v, w = g.edges()
    buf.write(f"{g.n} {g.m}\n")
    for a, b, c in zip(u.tolist(), v.tolist(), w.tolist()):
        buf.write(f"{a + 1} {b + 1} {_fmt_weight(c)}\n")
    return buf.getvalue() if out is None else None
