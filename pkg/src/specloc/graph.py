"""Undirected weighted graphs: ingestion, generators, degree statistics, Laplacians."""
from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ._rng import check_seed, rng_for
from .errors import DegenerateDegreeError, GenerationError, ParseError, ValidationError

log = logging.getLogger(__name__)

GENERATOR_KINDS = (
    "ring",
    "path",
    "complete",
    "star",
    "grid2d",
    "erdos_renyi",
    "barabasi_albert",
)
RANDOM_KINDS = ("erdos_renyi", "barabasi_albert")


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph on nodes ``0..n_nodes-1``.

    Edges are stored once per unordered pair as ``(u, v, w)`` with ``u < v``,
    sorted lexicographically. Use :meth:`from_edges` to merge duplicates.
    """

    n_nodes: int
    edges: tuple = ()

    def __post_init__(self):
        if isinstance(self.n_nodes, bool) or not isinstance(self.n_nodes, (int, np.integer)):
            raise ValidationError(f"n_nodes must be an integer, got {self.n_nodes!r}")
        if self.n_nodes < 1:
            raise ValidationError(f"n_nodes must be positive, got {self.n_nodes}")
        canon = []
        for edge in self.edges:
            if len(edge) != 3:
                raise ValidationError(f"edge must be (u, v, w), got {edge!r}")
            u, v, w = int(edge[0]), int(edge[1]), float(edge[2])
            if u == v:
                raise ValidationError(f"self-loop on node {u}")
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise ValidationError(f"edge ({u}, {v}) out of range for {self.n_nodes} nodes")
            if not (math.isfinite(w) and w > 0):
                raise ValidationError(f"edge ({u}, {v}) weight must be positive and finite, got {w}")
            canon.append((min(u, v), max(u, v), w))
        canon.sort()
        for a, b in zip(canon, canon[1:]):
            if a[:2] == b[:2]:
                raise ValidationError(f"duplicate edge ({a[0]}, {a[1]})")
        object.__setattr__(self, "n_nodes", int(self.n_nodes))
        object.__setattr__(self, "edges", tuple(canon))

    @classmethod
    def from_edges(cls, n_nodes: int, edges) -> "Graph":
        """Build a graph, merging repeated unordered pairs by summing weights."""
        merged: dict[tuple[int, int], float] = {}
        for edge in edges:
            u, v = int(edge[0]), int(edge[1])
            w = float(edge[2]) if len(edge) > 2 else 1.0
            key = (min(u, v), max(u, v))
            merged[key] = merged.get(key, 0.0) + w
        return cls(n_nodes, tuple((u, v, w) for (u, v), w in merged.items()))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_array(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.edges:
            return (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0))
        arr = np.array(self.edges, dtype=float)
        u = arr[:, 0].astype(np.int64)
        v = arr[:, 1].astype(np.int64)
        w = arr[:, 2].copy()
        for a in (u, v, w):
            a.flags.writeable = False
        return u, v, w

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Dense symmetric weighted adjacency (read-only)."""
        a = np.zeros((self.n_nodes, self.n_nodes))
        u, v, w = self.edge_array
        a[u, v] = w
        a[v, u] = w
        a.flags.writeable = False
        return a

    @cached_property
    def degrees(self) -> np.ndarray:
        """Weighted degrees ``k_i = sum_j w_ij`` (read-only)."""
        k = np.zeros(self.n_nodes)
        u, v, w = self.edge_array
        np.add.at(k, u, w)
        np.add.at(k, v, w)
        k.flags.writeable = False
        return k

    @cached_property
    def neighbors(self) -> tuple[frozenset, ...]:
        nbrs: list[set] = [set() for _ in range(self.n_nodes)]
        for u, v, _ in self.edges:
            nbrs[u].add(v)
            nbrs[v].add(u)
        return tuple(frozenset(s) for s in nbrs)

    @property
    def is_weighted(self) -> bool:
        return any(w != 1.0 for _, _, w in self.edges)

    def is_connected(self) -> bool:
        return _is_connected(self.n_nodes, *self.edge_array[:2])

    def to_dict(self) -> dict:
        return {"n": self.n_nodes, "edges": [[u, v, w] for u, v, w in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        try:
            return cls.from_edges(int(data["n"]), [tuple(e) for e in data["edges"]])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed graph JSON: {exc}") from exc


@dataclass(frozen=True)
class DegreeStats:
    degrees: np.ndarray
    mean_degree: float
    fluctuation: float
    stddev: float

    def to_dict(self) -> dict:
        return {
            "degrees": [float(k) for k in self.degrees],
            "mean_degree": self.mean_degree,
            "fluctuation": self.fluctuation,
            "stddev": self.stddev,
        }


# ---------------------------------------------------------------- ingestion

_SPLITTERS = {"whitespace": re.compile(r"\s+"), "csv": re.compile(r"\s*,\s*")}


def parse_edge_list(text: str, format: str = "whitespace", path=None) -> Graph:
    if format not in _SPLITTERS:
        raise ValidationError(f"unknown edge-list format {format!r}")
    splitter = _SPLITTERS[format]
    edges = []
    max_index = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = splitter.split(line)
        if len(fields) not in (2, 3):
            raise ParseError(f"expected 'u v' or 'u v w', got {raw!r}", lineno, path)
        try:
            u, v = int(fields[0]), int(fields[1])
        except ValueError:
            raise ParseError(f"node ids must be integers, got {raw!r}", lineno, path) from None
        if u < 0 or v < 0:
            raise ParseError(f"node ids must be nonnegative, got {raw!r}", lineno, path)
        w = 1.0
        if len(fields) == 3:
            try:
                w = float(fields[2])
            except ValueError:
                raise ParseError(f"weight is not a number: {fields[2]!r}", lineno, path) from None
        if u == v:
            raise ValidationError(f"{_where(path, lineno)}self-loop on node {u}")
        if not (math.isfinite(w) and w > 0):
            raise ValidationError(f"{_where(path, lineno)}weight must be positive and finite, got {w}")
        edges.append((u, v, w))
        max_index = max(max_index, u, v)
    if not edges:
        raise ValidationError(f"{_where(path, None)}edge list contains no edges")
    return Graph.from_edges(max_index + 1, edges)


def _where(path, lineno) -> str:
    parts = [str(p) for p in (path, lineno) if p is not None]
    return ":".join(parts) + ": " if parts else ""


def load_edge_list(path, format: str = "whitespace") -> Graph:
    """Read an edge list with one ``u v [w]`` edge per line.

    Lines starting with ``#`` are comments. Repeated undirected pairs are
    merged by summing their weights; a missing weight defaults to 1.0.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_edge_list(text, format=format, path=path)


def write_edge_list(g: Graph, path, format: str = "whitespace") -> None:
    sep = "," if format == "csv" else " "
    lines = [f"{u}{sep}{v}{sep}{w!r}" for u, v, w in g.edges]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_graph_json(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return Graph.from_dict(json.load(fh))


def load_graph(path, format: str | None = None) -> Graph:
    """Load by extension: ``.json`` graph export, ``.csv`` comma list, else whitespace list."""
    path = Path(path)
    if format is None:
        suffix = path.suffix.lower()
        if suffix == ".json":
            return load_graph_json(path)
        format = "csv" if suffix == ".csv" else "whitespace"
    return load_edge_list(path, format=format)


# --------------------------------------------------------------- generators


def _is_connected(n, u, v) -> bool:
    if n == 1:
        return True
    m = coo_matrix((np.ones(len(u)), (u, v)), shape=(n, n))
    ncomp, _ = connected_components(m, directed=False)
    return ncomp == 1


def _require_int(params, name, minimum):
    if name not in params:
        raise ValidationError(f"missing generator parameter {name!r}")
    val = params[name]
    if isinstance(val, bool) or not isinstance(val, (int, np.integer)) or val < minimum:
        raise ValidationError(f"{name} must be an integer >= {minimum}, got {val!r}")
    return int(val)


def generate(kind: str, seed=None, **params) -> Graph:
    """Construct a synthetic graph.

    Deterministic kinds: ``ring(n)``, ``path(n)``, ``complete(n)``,
    ``star(n)`` (``n`` total nodes, node 0 is the hub), ``grid2d(rows, cols)``.
    Random kinds require ``seed``: ``erdos_renyi(n, p, connected=True,
    max_retries=100)`` and ``barabasi_albert(n, m)``.
    """
    if kind not in GENERATOR_KINDS:
        raise ValidationError(f"unknown generator kind {kind!r}; expected one of {GENERATOR_KINDS}")
    if kind in RANDOM_KINDS:
        if seed is None:
            raise ValidationError(f"generator {kind!r} requires a seed")
        seed = check_seed(seed)

    if kind == "ring":
        n = _require_int(params, "n", 3)
        return Graph(n, tuple((i, (i + 1) % n, 1.0) for i in range(n)))
    if kind == "path":
        n = _require_int(params, "n", 2)
        return Graph(n, tuple((i, i + 1, 1.0) for i in range(n - 1)))
    if kind == "complete":
        n = _require_int(params, "n", 2)
        return Graph(n, tuple((i, j, 1.0) for i in range(n) for j in range(i + 1, n)))
    if kind == "star":
        n = _require_int(params, "n", 2)
        return Graph(n, tuple((0, i, 1.0) for i in range(1, n)))
    if kind == "grid2d":
        rows = _require_int(params, "rows", 1)
        cols = _require_int(params, "cols", 1)
        if rows * cols < 2:
            raise ValidationError("grid2d needs at least 2 nodes")
        edges = []
        for r in range(rows):
            for c in range(cols):
                i = r * cols + c
                if c + 1 < cols:
                    edges.append((i, i + 1, 1.0))
                if r + 1 < rows:
                    edges.append((i, i + cols, 1.0))
        return Graph(rows * cols, tuple(edges))
    if kind == "erdos_renyi":
        return _erdos_renyi(seed, **params)
    return _barabasi_albert(seed, **params)


def _erdos_renyi(seed, n=None, p=None, connected=True, max_retries=100) -> Graph:
    n = _require_int({"n": n}, "n", 2)
    if p is None or not (0.0 < float(p) <= 1.0):
        raise ValidationError(f"erdos_renyi needs p in (0, 1], got {p!r}")
    p = float(p)
    if max_retries < 1:
        raise ValidationError("max_retries must be >= 1")
    rng = rng_for(seed)
    iu, ju = np.triu_indices(n, k=1)
    for attempt in range(max_retries):
        keep = rng.random(iu.size) < p
        u, v = iu[keep], ju[keep]
        if u.size == 0 or (connected and not _is_connected(n, u, v)):
            continue
        if attempt:
            log.debug("erdos_renyi(n=%d, p=%g) connected after %d retries", n, p, attempt)
        return Graph(n, tuple(zip(u.tolist(), v.tolist(), [1.0] * u.size)))
    raise GenerationError(
        f"erdos_renyi(n={n}, p={p}) not connected after {max_retries} attempts"
    )


def _barabasi_albert(seed, n=None, m=None) -> Graph:
    n = _require_int({"n": n}, "n", 2)
    m = _require_int({"m": m}, "m", 1)
    if m >= n:
        raise ValidationError(f"barabasi_albert needs m < n, got m={m}, n={n}")
    rng = rng_for(seed)
    # seed graph: star on the first m+1 nodes
    edges = [(0, i, 1.0) for i in range(1, m + 1)]
    repeated = [0] * m + list(range(1, m + 1))
    for new in range(m + 1, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(repeated[int(rng.integers(len(repeated)))])
        for t in sorted(targets):
            edges.append((t, new, 1.0))
            repeated.extend((t, new))
    return Graph(n, tuple(edges))


# ---------------------------------------------------------- degree and Laplacians


def degree_stats(g: Graph) -> DegreeStats:
    k = np.asarray(g.degrees, dtype=float)
    n = k.size
    mean = float(k.sum() / n)
    if np.all(k == k[0]):
        spread = 0.0
    else:
        spread = float(np.sqrt(np.sum((k - mean) ** 2)))
    return DegreeStats(degrees=g.degrees, mean_degree=mean, fluctuation=spread / n,
                       stddev=spread / math.sqrt(n))


def degree_fluctuation(g: Graph) -> float:
    """``(1/N) * sqrt(sum_i (k_i - <k>)^2)``.

    This is the population standard deviation divided by ``sqrt(N)``; the
    plain standard deviation is available as ``degree_stats(g).stddev``.
    """
    return degree_stats(g).fluctuation


def laplacian(g: Graph) -> np.ndarray:
    """Combinatorial Laplacian ``D - A``."""
    return np.diag(np.asarray(g.degrees)) - g.adjacency


def normalized_adjacency(g: Graph) -> np.ndarray:
    """``D^{-1/2} A D^{-1/2}``, exactly symmetrized."""
    k = np.asarray(g.degrees)
    zero = np.flatnonzero(k <= 0)
    if zero.size:
        raise DegenerateDegreeError(int(zero[0]))
    # one rounding per entry; exact for regular unweighted graphs
    m = g.adjacency / np.sqrt(np.outer(k, k))
    return 0.5 * (m + m.T)


def normalized_laplacian(g: Graph) -> np.ndarray:
    """``I - D^{-1/2} A D^{-1/2}``. Raises :class:`DegenerateDegreeError` on isolated nodes."""
    return np.eye(g.n_nodes) - normalized_adjacency(g)
