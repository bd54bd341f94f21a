"""Deterministic graph families.

Family names (case-insensitive):

``path_N``
    vertices ``0..N-1``, unit edges ``(k, k+1)``.
``cycle_N``
    ``path_N`` plus the closing edge ``(N-1, 0)``; needs ``N >= 3``.
``grid_AxB``
    vertices ``"i,j"`` in row-major order, unit nearest-neighbour edges.
``binary_tree_depth_D`` (alias ``binary_tree_D``)
    heap-indexed complete binary tree with ``2^(D+1) - 1`` vertices.
``star_N``
    center ``0`` joined to leaves ``1..N``.
``polyline_N_ALPHA``
    ``path_N`` with ``b(k, k+1) = (k+1)^ALPHA``.
"""

from __future__ import annotations

import math
import re

from .graph import GraphError, MeasureMode, WeightedGraph, build_graph

_PATTERNS = [
    (re.compile(r"path_(\d+)$"), "path"),
    (re.compile(r"cycle_(\d+)$"), "cycle"),
    (re.compile(r"grid_(\d+)[x×](\d+)$"), "grid"),
    (re.compile(r"binary_tree(?:_depth)?_(\d+)$"), "tree"),
    (re.compile(r"star_(\d+)$"), "star"),
    (re.compile(r"polyline_(\d+)_([-+]?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)$"), "polyline"),
]


def family_edges(spec: str) -> tuple[list[str], list[tuple[str, str, float]]]:
    """Vertex order and edge list of a named family."""
    name = spec.strip().lower()
    for pat, kind in _PATTERNS:
        mt = pat.match(name)
        if mt:
            return _BUILDERS[kind](*mt.groups())
    raise GraphError(f"unknown graph family {spec!r}")


def generate_family(spec: str, mode: MeasureMode | str = MeasureMode.COUNTING) -> WeightedGraph:
    verts, edges = family_edges(spec)
    return build_graph(edges, mode, vertices=verts)


def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise GraphError(msg)


def _path(n: str):
    n = int(n)
    _need(n >= 2, f"path needs N >= 2, got {n}")
    v = [str(k) for k in range(n)]
    return v, [(v[k], v[k + 1], 1.0) for k in range(n - 1)]


def _cycle(n: str):
    n = int(n)
    _need(n >= 3, f"cycle needs N >= 3, got {n}")
    v, e = _path(str(n))
    return v, e + [(v[n - 1], v[0], 1.0)]


def _grid(a: str, b: str):
    a, b = int(a), int(b)
    _need(a >= 1 and b >= 1 and a * b >= 2, f"grid needs at least two vertices, got {a}x{b}")
    v = [f"{i},{j}" for i in range(a) for j in range(b)]
    e = []
    for i in range(a):
        for j in range(b):
            if j + 1 < b:
                e.append((f"{i},{j}", f"{i},{j + 1}", 1.0))
            if i + 1 < a:
                e.append((f"{i},{j}", f"{i + 1},{j}", 1.0))
    return v, e


def _tree(d: str):
    d = int(d)
    _need(d >= 1, f"binary tree needs depth >= 1, got {d}")
    n = 2 ** (d + 1) - 1
    v = [str(k) for k in range(n)]
    return v, [(v[(k - 1) // 2], v[k], 1.0) for k in range(1, n)]


def _star(n: str):
    n = int(n)
    _need(n >= 1, f"star needs at least one leaf, got {n}")
    v = [str(k) for k in range(n + 1)]
    return v, [(v[0], v[k], 1.0) for k in range(1, n + 1)]


def _polyline(n: str, alpha: str):
    n, alpha = int(n), float(alpha)
    _need(n >= 2, f"polyline needs N >= 2, got {n}")
    v = [str(k) for k in range(n)]
    e = []
    for k in range(n - 1):
        try:
            w = math.pow(k + 1, alpha)
        except OverflowError:
            w = math.inf
        _need(math.isfinite(w) and w > 0,
              f"polyline weight ({k}+1)^{alpha} overflows or underflows")
        e.append((v[k], v[k + 1], w))
    return v, e


_BUILDERS = {
    "path": _path, "cycle": _cycle, "grid": _grid,
    "tree": _tree, "star": _star, "polyline": _polyline,
}
