"""Intrinsic path metrics, balls and jump sizes.

Balls are closed, ``B_x(r) = {y : rho(x, y) <= r}``.  Ball measures and jump
sizes are step functions of ``r`` that change only at the distances occurring
from the center (the *breakpoints*), so every supremum over a radius interval
reduces exactly to finitely many evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .graph import WeightedGraph

# cap on the number of floats materialized at once by jump tables
_CHUNK = 1 << 22


class MetricError(ValueError):
    pass


def default_intrinsic_weights(g: WeightedGraph) -> np.ndarray:
    """``w(x, y) = (Deg_x v Deg_y)^(-1/2)`` on every edge, in edge order."""
    return np.maximum(g.Deg[g.edge_u], g.Deg[g.edge_v]) ** -0.5


def combinatorial_weights(g: WeightedGraph) -> np.ndarray:
    return np.ones(g.n_edges)


@dataclass
class IntrinsicReport:
    passed: bool
    sums: np.ndarray  # sum_y b(x,y) rho(x,y)^2 per vertex
    worst_vertex: str
    worst_ratio: float  # max_x sums/m
    slack: float  # m - sums at the worst vertex


def verify_intrinsic(g: WeightedGraph, rho: np.ndarray, rtol: float = 1e-12) -> IntrinsicReport:
    """Check ``sum_y b(x,y) rho(x,y)^2 <= m(x)`` at every vertex.

    ``rtol`` absorbs the rounding of the summation only.
    """
    rho = np.asarray(rho, dtype=float)
    n = g.n_vertices
    if rho.shape != (n, n):
        raise MetricError(f"distance table has shape {rho.shape}, expected {(n, n)}")
    contrib = g.edge_b * rho[g.edge_u, g.edge_v] ** 2
    contrib_t = g.edge_b * rho[g.edge_v, g.edge_u] ** 2
    sums = np.zeros(n)
    np.add.at(sums, g.edge_u, contrib)
    np.add.at(sums, g.edge_v, contrib_t)
    ratio = sums / g.m
    i = int(np.argmax(ratio))
    return IntrinsicReport(
        passed=bool(np.all(sums <= g.m * (1 + rtol))),
        sums=sums,
        worst_vertex=g.ids[i],
        worst_ratio=float(ratio[i]),
        slack=float(g.m[i] - sums[i]),
    )


@dataclass(eq=False)
class MetricStructure:
    """Path metric induced by positive edge lengths ``w`` on ``g``.

    Attributes
    ----------
    dist : all-pairs distance table
    edge_rho : ``rho`` between the endpoints of each edge (at most ``w``)
    S : global jump size, the largest ``edge_rho``
    diameter : largest distance
    """

    g: WeightedGraph
    w: np.ndarray
    dist: np.ndarray = field(init=False, repr=False)
    edge_rho: np.ndarray = field(init=False, repr=False)
    S: float = field(init=False)
    diameter: float = field(init=False)

    def __post_init__(self) -> None:
        g = self.g
        w = np.asarray(self.w, dtype=float)
        if w.shape != (g.n_edges,):
            raise MetricError(f"expected {g.n_edges} edge weights, got shape {w.shape}")
        if np.any(~np.isfinite(w) | (w <= 0)):
            k = int(np.flatnonzero(~np.isfinite(w) | (w <= 0))[0])
            raise MetricError(
                f"nonpositive metric weight {w[k]!r} on edge "
                f"({g.ids[g.edge_u[k]]}, {g.ids[g.edge_v[k]]})"
            )
        self.w = w
        n = g.n_vertices
        if g.n_edges:
            mat = sparse.coo_matrix((w, (g.edge_u, g.edge_v)), shape=(n, n)).tocsr()
            dist = csgraph.shortest_path(mat, method="D", directed=False)
            dist = np.minimum(dist, dist.T)  # summation order differs per source
        else:
            dist = np.zeros((n, n))
        dist.setflags(write=False)
        self.dist = dist
        self.edge_rho = dist[g.edge_u, g.edge_v]
        self.S = float(self.edge_rho.max()) if g.n_edges else 0.0
        self.diameter = float(dist.max())
        self._rows: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._jumps: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        inc = np.zeros(n)
        np.maximum.at(inc, g.edge_u, self.edge_rho)
        np.maximum.at(inc, g.edge_v, self.edge_rho)
        self.incident_max = inc

    # -- balls -------------------------------------------------------------

    def _row(self, i: int):
        r = self._rows.get(i)
        if r is None:
            d = self.dist[i]
            order = np.argsort(d, kind="stable")
            ds = d[order]
            cm = np.cumsum(self.g.m[order])
            r = (ds, cm, order)
            self._rows[i] = r
        return r

    def breakpoints(self, x) -> np.ndarray:
        """Sorted distinct distances from ``x`` (starts with 0)."""
        ds, _, _ = self._row(self.g.idx(x))
        return np.unique(ds)

    def ball(self, x, r: float) -> np.ndarray:
        """Indices of the closed ball, ordered by distance."""
        _check_radius(r)
        ds, _, order = self._row(self.g.idx(x))
        return order[: np.searchsorted(ds, r, side="right")]

    def ball_ids(self, x, r: float) -> list[str]:
        return [self.g.ids[i] for i in sorted(self.ball(x, r))]

    def ball_measure(self, x, r):
        """``m(B_x(r))``; vectorized over ``r``."""
        ds, cm, _ = self._row(self.g.idx(x))
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise MetricError("negative radius")
        k = np.searchsorted(ds, r, side="right")
        out = cm[k - 1]
        return float(out) if out.ndim == 0 else out

    def ball_measure_left(self, x, r):
        """Left limit ``m({y : rho(x,y) < r})`` for ``r > 0``."""
        ds, cm, _ = self._row(self.g.idx(x))
        r = np.asarray(r, dtype=float)
        k = np.searchsorted(ds, r, side="left")
        out = np.where(k > 0, cm[np.maximum(k - 1, 0)], 0.0)
        return float(out) if out.ndim == 0 else out

    def relative_ball_measure(self, x, r):
        """``M_x(r) = m(B_x(r)) / m(x)``."""
        return self.ball_measure(x, r) / self.g.m[self.g.idx(x)]

    def max_over_ball(self, values: np.ndarray, x, r: float) -> float:
        return float(np.max(np.asarray(values)[self.ball(x, r)]))

    # -- jump sizes --------------------------------------------------------

    def _jump_table(self, i: int):
        tab = self._jumps.get(i)
        if tab is not None:
            return tab
        bp = self.breakpoints(i)
        d = self.dist[i]
        du, dv = d[self.g.edge_u], d[self.g.edge_v]
        klo = np.searchsorted(bp, np.minimum(du, dv), side="left")
        khi = np.searchsorted(bp, np.maximum(du, dv), side="left")
        L = len(bp)
        vals = np.zeros(L)
        E = len(klo)
        if E:
            step = max(1, _CHUNK // E)
            for start in range(0, L, step):
                k = np.arange(start, min(L, start + step))[:, None]
                cover = (klo[None, :] <= k) & (k < khi[None, :])
                vals[start:start + step] = np.where(cover, self.edge_rho[None, :], 0.0).max(axis=1)
        vals = np.maximum(vals, self.incident_max[i])
        tab = (bp, vals)
        self._jumps[i] = tab
        return tab

    def jump_size(self, x, r):
        """``s_x(r)``: longest edge leaving ``B_x(r)`` or touching ``x``."""
        bp, vals = self._jump_table(self.g.idx(x))
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise MetricError("negative radius")
        out = vals[np.searchsorted(bp, r, side="right") - 1]
        return float(out) if out.ndim == 0 else out

    def annulus_jump_sup(self, x, a: float, b: float) -> float:
        """``sup_{a <= r <= b} s_x(r)``, exact via breakpoints."""
        if a < 0 or b < 0:
            raise MetricError("negative radius")
        if a > b:
            raise MetricError(f"empty annulus: a = {a} > b = {b}")
        bp, vals = self._jump_table(self.g.idx(x))
        ka = np.searchsorted(bp, a, side="right") - 1
        kb = np.searchsorted(bp, b, side="right") - 1
        return float(vals[ka:kb + 1].max())

    def jump_sup_over_ball(self, o, R: float, r: float) -> float:
        """``||s(r)||_{B_o(R)} = max_{x in B_o(R)} s_x(r)``."""
        return max(self.jump_size(int(x), r) for x in self.ball(o, R))


def _check_radius(r: float) -> None:
    if r < 0:
        raise MetricError(f"negative radius {r}")


def build_metric(g: WeightedGraph, choice: str | np.ndarray = "default") -> MetricStructure:
    """``choice`` is ``"default"``, ``"combinatorial"`` or an edge-weight array."""
    if isinstance(choice, str):
        if choice == "default":
            w = default_intrinsic_weights(g)
        elif choice == "combinatorial":
            w = combinatorial_weights(g)
        else:
            raise MetricError(f"unknown metric {choice!r}")
    else:
        w = np.asarray(choice, dtype=float)
    return MetricStructure(g, w)


def all_pairs_distances(g: WeightedGraph, w: np.ndarray) -> MetricStructure:
    return MetricStructure(g, w)
