"""Finite weighted graphs over a measure space.

A graph here is a symmetric edge weight ``b`` on a finite vertex set together
with a strictly positive vertex measure ``m``.  Vertex ids are arbitrary
strings; internally every vertex has a dense index in ``0..N-1`` following the
order in which ids were first seen.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph


class GraphError(ValueError):
    """Invalid graph input (topology, weights or measure)."""


class MeasureMode(str, enum.Enum):
    NORMALIZING = "normalizing"
    COUNTING = "counting"
    CUSTOM = "custom"

    @classmethod
    def parse(cls, value: "MeasureMode | str") -> "MeasureMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise GraphError(f"unknown measure mode {value!r}") from None


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Immutable weighted graph ``b`` over ``(X, m)``.

    Edges are stored once per unordered pair in ``edge_u < edge_v`` index
    order; ``adjacency`` is the symmetric sparse matrix of ``b``.
    """

    ids: tuple[str, ...]
    m: np.ndarray
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_b: np.ndarray
    mode: MeasureMode = MeasureMode.CUSTOM
    adjacency: sparse.csr_matrix = field(init=False, repr=False)
    deg: np.ndarray = field(init=False, repr=False)
    Deg: np.ndarray = field(init=False, repr=False)
    index: Mapping[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = len(self.ids)
        adj = sparse.coo_matrix(
            (np.concatenate([self.edge_b, self.edge_b]),
             (np.concatenate([self.edge_u, self.edge_v]),
              np.concatenate([self.edge_v, self.edge_u]))),
            shape=(n, n),
        ).tocsr()
        deg = np.zeros(n)
        np.add.at(deg, self.edge_u, self.edge_b)
        np.add.at(deg, self.edge_v, self.edge_b)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "deg", _readonly(deg))
        object.__setattr__(self, "Deg", _readonly(deg / self.m))
        object.__setattr__(self, "index", {v: i for i, v in enumerate(self.ids)})
        for a in (self.m, self.edge_u, self.edge_v, self.edge_b):
            a.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.ids)

    @property
    def n_edges(self) -> int:
        return len(self.edge_b)

    def idx(self, x: str | int) -> int:
        """Dense index of vertex ``x`` (an id, or already an index)."""
        if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
            if 0 <= x < self.n_vertices:
                return int(x)
            raise KeyError(f"vertex index {x} out of range")
        try:
            return self.index[str(x)]
        except KeyError:
            raise KeyError(f"unknown vertex id {x!r}") from None

    def weight(self, x: str | int, y: str | int) -> float:
        return float(self.adjacency[self.idx(x), self.idx(y)])

    def neighbors(self, x: str | int) -> np.ndarray:
        i = self.idx(x)
        row = self.adjacency.indptr
        return self.adjacency.indices[row[i]:row[i + 1]]

    def total_measure(self) -> float:
        return float(self.m.sum())

    def edges(self) -> list[tuple[str, str, float]]:
        return [(self.ids[u], self.ids[v], float(b))
                for u, v, b in zip(self.edge_u, self.edge_v, self.edge_b)]

    def same_as(self, other: "WeightedGraph") -> bool:
        """Bit-exact equality of ids, measures, edge lists and mode."""
        return (
            self.ids == other.ids
            and self.mode == other.mode
            and np.array_equal(self.m, other.m)
            and np.array_equal(self.edge_u, other.edge_u)
            and np.array_equal(self.edge_v, other.edge_v)
            and np.array_equal(self.edge_b, other.edge_b)
        )


def weighted_degree(g: WeightedGraph, x: str | int) -> float:
    """``Deg_x = deg_x / m(x)``."""
    i = g.idx(x)
    return float(g.deg[i] / g.m[i])


def build_graph(
    edges: Iterable[tuple[object, object, float]],
    mode: MeasureMode | str = MeasureMode.COUNTING,
    measure: Mapping[object, float] | None = None,
    vertices: Sequence[object] | None = None,
) -> WeightedGraph:
    """Validate an edge list and build a :class:`WeightedGraph`.

    ``measure`` is required in custom mode and must be omitted otherwise.
    ``vertices`` fixes the vertex order (and allows the one-vertex graph);
    ids not listed there are appended in order of first appearance.
    A pair listed twice must carry the same weight both times.
    """
    mode = MeasureMode.parse(mode)
    order: dict[str, int] = {}
    if vertices is not None:
        for v in vertices:
            key = _check_id(v)
            if key in order:
                raise GraphError(f"duplicate vertex id {key!r}")
            order[key] = len(order)

    pairs: dict[tuple[int, int], float] = {}
    for item in edges:
        try:
            a, b_, w = item
        except (TypeError, ValueError):
            raise GraphError(f"edge {item!r} is not a (u, v, weight) triple") from None
        ka, kb = _check_id(a), _check_id(b_)
        if ka == kb:
            raise GraphError(f"self-loop at vertex {ka!r}")
        w = float(w)
        if not np.isfinite(w) or w <= 0:
            raise GraphError(f"edge ({ka}, {kb}) has nonpositive or non-finite weight {w!r}")
        for k in (ka, kb):
            if k not in order:
                order[k] = len(order)
        ia, ib = order[ka], order[kb]
        key = (ia, ib) if ia < ib else (ib, ia)
        if key in pairs and pairs[key] != w:
            raise GraphError(
                f"edge ({ka}, {kb}) listed with conflicting weights {pairs[key]!r} and {w!r}"
            )
        pairs[key] = w

    ids = tuple(order)
    n = len(ids)
    if n == 0:
        raise GraphError("graph has no vertices")
    keys = sorted(pairs)
    eu = np.array([k[0] for k in keys], dtype=np.int64)
    ev = np.array([k[1] for k in keys], dtype=np.int64)
    eb = np.array([pairs[k] for k in keys], dtype=float)

    deg = np.zeros(n)
    np.add.at(deg, eu, eb)
    np.add.at(deg, ev, eb)
    if n > 1:
        _check_connected(ids, eu, ev)

    if mode is MeasureMode.CUSTOM:
        if measure is None:
            raise GraphError("custom measure mode needs an explicit measure")
        m = np.empty(n)
        given = {str(k): v for k, v in measure.items()}
        for k, i in order.items():
            if k not in given:
                raise GraphError(f"no measure given for vertex {k!r}")
            m[i] = float(given[k])
        extra = set(given) - set(order)
        if extra:
            raise GraphError(f"measure given for unknown vertices {sorted(extra)!r}")
    else:
        if measure is not None:
            raise GraphError(f"{mode.value} mode derives the measure; do not pass one")
        m = deg.copy() if mode is MeasureMode.NORMALIZING else np.ones(n)
    bad = np.flatnonzero(~(np.isfinite(m) & (m > 0)))
    if bad.size:
        raise GraphError(f"nonpositive measure {m[bad[0]]!r} at vertex {ids[bad[0]]!r}")
    return WeightedGraph(ids=ids, m=m, edge_u=eu, edge_v=ev, edge_b=eb, mode=mode)


def with_measure(g: WeightedGraph, mode: MeasureMode | str,
                 measure: Mapping[object, float] | None = None) -> WeightedGraph:
    """Same edges and vertex order, different measure."""
    return build_graph(g.edges(), mode, measure=measure, vertices=g.ids)


def _check_id(v: object) -> str:
    key = str(v)
    if not key or any(c.isspace() for c in key) or "#" in key:
        raise GraphError(f"malformed vertex id {v!r} (empty, whitespace or '#')")
    return key


def _check_connected(ids: Sequence[str], eu: np.ndarray, ev: np.ndarray) -> None:
    n = len(ids)
    adj = sparse.coo_matrix((np.ones(len(eu)), (eu, ev)), shape=(n, n))
    ncomp, labels = csgraph.connected_components(adj, directed=False)
    if ncomp > 1:
        a = int(np.flatnonzero(labels == labels[0])[0])
        b = int(np.flatnonzero(labels != labels[0])[0])
        raise GraphError(
            f"graph is disconnected: {ids[a]!r} and {ids[b]!r} are not reachable "
            f"from each other ({ncomp} components)"
        )
