"""Text formats for graphs and metric overrides.

Graph file grammar (UTF-8, one record per line, ``#`` starts a comment)::

    graph v1
    measure <normalizing|counting|custom>     # optional, default custom
    vertex <id> <m>
    edge <id> <id> <b>

All ``vertex`` lines come before ``edge`` lines.  Numbers are written with
``repr`` so a save/load round trip is bit-exact.  An unordered pair may be
listed in both directions only with identical weights.

Metric override grammar::

    metric v1
    w <id> <id> <value>

Every graph edge needs exactly one weight (either orientation).
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .graph import GraphError, MeasureMode, WeightedGraph, build_graph


class FormatError(GraphError):
    """Malformed input file; the message carries ``path:line``."""


def _records(text: str, src: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _number(tok: str, where: str, field: str) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise FormatError(f"{where}: {field} {tok!r} is not a number") from None
    if not math.isfinite(val):
        raise FormatError(f"{where}: {field} {tok!r} is not finite")
    return val


def dumps_graph(g: WeightedGraph) -> str:
    lines = ["graph v1", f"measure {g.mode.value}"]
    lines += [f"vertex {v} {float(mv)!r}" for v, mv in zip(g.ids, g.m)]
    lines += [f"edge {u} {v} {b!r}" for u, v, b in g.edges()]
    return "\n".join(lines) + "\n"


def loads_graph(text: str, src: str = "<string>") -> WeightedGraph:
    recs = list(_records(text, src))
    if not recs or recs[0][1] != ["graph", "v1"]:
        where = f"{src}:{recs[0][0]}" if recs else src
        raise FormatError(f"{where}: expected header 'graph v1'")
    mode = MeasureMode.CUSTOM
    measure: dict[str, float] = {}
    order: list[str] = []
    weights: dict[tuple[str, str], tuple[float, int]] = {}
    seen_edge = False
    for lineno, tok in recs[1:]:
        where = f"{src}:{lineno}"
        kind = tok[0]
        if kind == "measure":
            if len(tok) != 2 or order or seen_edge:
                raise FormatError(f"{where}: 'measure <mode>' must precede vertices")
            try:
                mode = MeasureMode.parse(tok[1])
            except GraphError as exc:
                raise FormatError(f"{where}: {exc}") from None
        elif kind == "vertex":
            if len(tok) != 3:
                raise FormatError(f"{where}: expected 'vertex <id> <m>', got {len(tok) - 1} fields")
            if seen_edge:
                raise FormatError(f"{where}: vertex line after edge lines")
            vid = tok[1]
            if vid in measure:
                raise FormatError(f"{where}: duplicate vertex {vid!r}")
            m = _number(tok[2], where, "measure")
            if m <= 0:
                raise FormatError(f"{where}: nonpositive measure {m!r} at vertex {vid!r}")
            measure[vid] = m
            order.append(vid)
        elif kind == "edge":
            seen_edge = True
            if len(tok) != 4:
                raise FormatError(f"{where}: expected 'edge <id> <id> <b>', got {len(tok) - 1} fields")
            u, v = tok[1], tok[2]
            for x in (u, v):
                if x not in measure:
                    raise FormatError(f"{where}: edge endpoint {x!r} has no vertex line")
            if u == v:
                raise FormatError(f"{where}: self-loop at {u!r}")
            b = _number(tok[3], where, "weight")
            if b <= 0:
                raise FormatError(f"{where}: nonpositive weight {b!r} on edge ({u}, {v})")
            key = (u, v) if u <= v else (v, u)
            if key in weights and weights[key][0] != b:
                prev, pl = weights[key]
                raise FormatError(
                    f"{where}: asymmetry, b({u},{v}) = {b!r} but line {pl} gives {prev!r}"
                )
            weights.setdefault(key, (b, lineno))
        else:
            raise FormatError(f"{where}: unknown record {kind!r}")
    if not order:
        raise FormatError(f"{src}: no vertices")
    edges = [(u, v, b) for (u, v), (b, _) in weights.items()]
    try:
        g = build_graph(edges, MeasureMode.CUSTOM, measure=measure, vertices=order)
    except GraphError as exc:
        raise FormatError(f"{src}: {exc}") from None
    if mode is MeasureMode.NORMALIZING and not np.array_equal(g.m, g.deg):
        i = int(np.flatnonzero(g.m != g.deg)[0])
        raise FormatError(f"{src}: normalizing measure but m({g.ids[i]}) != deg")
    if mode is MeasureMode.COUNTING and not np.all(g.m == 1.0):
        raise FormatError(f"{src}: counting measure but some m != 1")
    return WeightedGraph(ids=g.ids, m=g.m, edge_u=g.edge_u, edge_v=g.edge_v,
                         edge_b=g.edge_b, mode=mode)


def save_graph(g: WeightedGraph, path: str | Path) -> None:
    Path(path).write_text(dumps_graph(g), encoding="utf-8")


def load_graph(path: str | Path) -> WeightedGraph:
    p = Path(path)
    return loads_graph(p.read_text(encoding="utf-8"), str(p))


def dumps_metric(g: WeightedGraph, w: np.ndarray) -> str:
    lines = ["metric v1"]
    lines += [f"w {u} {v} {float(x)!r}" for (u, v, _), x in zip(g.edges(), w)]
    return "\n".join(lines) + "\n"


def loads_metric(g: WeightedGraph, text: str, src: str = "<string>") -> np.ndarray:
    """Edge weights aligned with ``g``'s edge order."""
    recs = list(_records(text, src))
    if not recs or recs[0][1] != ["metric", "v1"]:
        raise FormatError(f"{src}: expected header 'metric v1'")
    pos = {}
    for k, (u, v) in enumerate(zip(g.edge_u, g.edge_v)):
        pos[(int(u), int(v))] = k
    w = np.full(g.n_edges, np.nan)
    for lineno, tok in recs[1:]:
        where = f"{src}:{lineno}"
        if tok[0] != "w" or len(tok) != 4:
            raise FormatError(f"{where}: expected 'w <id> <id> <value>'")
        try:
            a, b = g.idx(tok[1]), g.idx(tok[2])
        except KeyError as exc:
            raise FormatError(f"{where}: {exc.args[0]}") from None
        k = pos.get((min(a, b), max(a, b)))
        if k is None:
            raise FormatError(f"{where}: ({tok[1]}, {tok[2]}) is not an edge")
        if not np.isnan(w[k]):
            raise FormatError(f"{where}: duplicate weight for ({tok[1]}, {tok[2]})")
        val = _number(tok[3], where, "weight")
        if val <= 0:
            raise FormatError(f"{where}: nonpositive metric weight {val!r}")
        w[k] = val
    missing = np.flatnonzero(np.isnan(w))
    if missing.size:
        k = missing[0]
        raise FormatError(
            f"{src}: no metric weight for edge ({g.ids[g.edge_u[k]]}, {g.ids[g.edge_v[k]]})"
        )
    return w


def load_metric(g: WeightedGraph, path: str | Path) -> np.ndarray:
    p = Path(path)
    return loads_metric(g, p.read_text(encoding="utf-8"), str(p))
