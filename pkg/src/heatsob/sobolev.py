"""Optimal Sobolev constants of balls.

For a ball ``B = B_x(r)`` and dimension ``n > 2`` (``q = 2n/(n-2)``) the
smallest admissible Sobolev constant is the supremum over nonzero ``u``
supported in ``B`` of

    m(B)^(2/n) ||u||_q^2 / (r^2 E(u) + ||u||_2^2),

where ``E(u) = sum_{x,y} b(x,y)(u(x)-u(y))^2`` runs over the whole graph, so
edges leaving the ball count.  With ``A = r^2 K + M_B`` the denominator is the
quadratic form ``u^T A u``.  ``A`` is a nonsingular M-matrix, hence ``A^-1``
is entrywise nonnegative, and replacing ``u`` by ``|u|`` never lowers the
ratio: the search runs over the nonnegative part of the sphere.

The ascent step is the fixed-point map ``u -> A^-1 (m u^(q-1))`` (suitably
scaled), which never decreases the ratio because ``||.||_q^q`` is convex.
It is used as the preconditioned gradient direction of a projected line
search; step ``1`` is the safeguard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import cho_factor, cho_solve
from scipy.sparse.linalg import splu

from .certificate import Certificate
from .graph import WeightedGraph
from .metric import MetricStructure
from .spectral import dirichlet_energy

DENSE_LIMIT = 300
STEPS = (1.0, 2.0, 4.0)


class SobolevError(ValueError):
    pass


@dataclass
class SobolevProblem:
    """Sobolev ratio maximization over functions supported in ``ball``."""

    g: WeightedGraph
    ball: np.ndarray
    r: float
    n: float
    center: int | None = None
    A: sparse.csr_matrix = field(init=False, repr=False)

    def __post_init__(self) -> None:
        ball = np.unique(np.asarray(self.ball, dtype=np.int64))
        if ball.size == 0:
            raise SobolevError("empty support set")
        if ball[0] < 0 or ball[-1] >= self.g.n_vertices:
            raise SobolevError("support set not contained in the vertex set")
        if not self.n > 2:
            raise SobolevError(f"dimension must exceed 2, got {self.n!r}")
        if not self.r > 0:
            raise SobolevError(f"radius must be positive, got {self.r!r}")
        self.ball = ball
        W = self.g.adjacency[ball][:, ball]
        K = 2.0 * (sparse.diags(self.g.deg[ball]) - W)
        self.A = (self.r**2 * K + sparse.diags(self.g.m[ball])).tocsr()

    @classmethod
    def from_ball(cls, metric: MetricStructure, x, r: float, n: float) -> "SobolevProblem":
        i = metric.g.idx(x)
        return cls(metric.g, metric.ball(i, r), r, n, center=i)

    @property
    def q(self) -> float:
        return 2.0 * self.n / (self.n - 2.0)

    @property
    def m(self) -> np.ndarray:
        return self.g.m[self.ball]

    @property
    def ball_measure(self) -> float:
        return float(self.m.sum())

    def restrict(self, u) -> np.ndarray:
        """Ball coordinates of ``u`` given on the ball or on the whole graph."""
        u = np.asarray(u, dtype=float)
        if u.shape[0] == len(self.ball):
            return u
        if u.shape[0] != self.g.n_vertices:
            raise SobolevError(f"function has {u.shape[0]} entries")
        outside = np.ones(self.g.n_vertices, dtype=bool)
        outside[self.ball] = False
        if np.any(u[outside] != 0):
            k = int(np.flatnonzero(outside & (u != 0))[0])
            raise SobolevError(f"support violation at vertex {self.g.ids[k]!r}")
        return u[self.ball]

    def extend(self, u_ball) -> np.ndarray:
        full = np.zeros(self.g.n_vertices)
        full[self.ball] = u_ball
        return full

    def log_ratio_columns(self, U: np.ndarray) -> np.ndarray:
        """Log Sobolev ratio of each column of ``U`` (ball coordinates)."""
        m = self.m[:, None]
        scale = np.abs(U).max(axis=0)
        scale[scale == 0] = 1.0
        V = U / scale
        lq = np.log(np.sum(m * np.abs(V) ** self.q, axis=0)) * (2.0 / self.q)
        den = np.sum(V * (self.A @ V), axis=0)
        return 2.0 / self.n * math.log(self.ball_measure) + lq - np.log(den)


def sobolev_ratio(problem: SobolevProblem, u) -> float:
    """``m(B)^(2/n) ||u||_q^2 / (r^2 (E(u) + r^-2 ||u||_2^2))``, computed directly."""
    ub = problem.restrict(u)
    if not np.any(ub != 0):
        raise SobolevError("zero function")
    full = problem.extend(ub)
    g, n, r, q = problem.g, problem.n, problem.r, problem.q
    s = np.abs(full).max()
    v = full / s
    norm_q2 = np.sum(g.m * np.abs(v) ** q) ** (2.0 / q)
    norm_22 = np.sum(g.m * v * v)
    energy = dirichlet_energy(g, v)
    return float(problem.ball_measure ** (2.0 / n) * norm_q2 / (r * r * (energy + norm_22 / (r * r))))


@dataclass
class Budget:
    restarts: int = 32
    max_iter: int = 3000
    tol: float = 1e-12
    seed: int = 0


@dataclass
class OptimizationResult:
    phi_star: float
    u: np.ndarray  # ball coordinates, ||u||_2 = 1 in the m-weighted norm
    certification: str
    restarts: int
    tolerance: float
    iterations: int
    stationary: bool
    best_restart: int
    trace: dict = field(default_factory=dict)
    grid_resolution: float | None = None

    def to_dict(self, problem: SobolevProblem) -> dict:
        g = problem.g
        return {
            "ball_center": None if problem.center is None else g.ids[problem.center],
            "radius": problem.r,
            "n": problem.n,
            "phi_star": self.phi_star,
            "certification": self.certification,
            "restarts": self.restarts,
            "tolerance": self.tolerance,
            "iterations": self.iterations,
            "stationary": self.stationary,
            "grid_resolution": self.grid_resolution,
            "u": {g.ids[i]: float(v) for i, v in zip(problem.ball, self.u)},
        }


class _Solver:
    def __init__(self, A: sparse.csr_matrix):
        if A.shape[0] <= DENSE_LIMIT:
            self._cho = cho_factor(A.toarray())
            self._lu = None
        else:
            self._cho = None
            self._lu = splu(A.tocsc())

    def __call__(self, Y: np.ndarray) -> np.ndarray:
        if self._cho is not None:
            return cho_solve(self._cho, Y)
        return self._lu.solve(Y)


def _seeds(problem: SobolevProblem, count: int, rng: np.random.Generator,
           metric: MetricStructure | None) -> np.ndarray:
    k = len(problem.ball)
    cols = []
    if problem.center is not None and metric is not None:
        d = metric.dist[problem.center, problem.ball]
        cols.append(np.maximum(problem.r / 2.0 - d, 0.0))
    cols.append(np.ones(k))
    for i in range(min(k, max(0, count - len(cols)))):
        e = np.zeros(k)
        e[i] = 1.0
        cols.append(e)
    cols = cols[:count]
    while len(cols) < count:
        cols.append(rng.random(k))
    return np.column_stack(cols)


def minimal_sobolev_constant(problem: SobolevProblem, budget: Budget | None = None,
                             metric: MetricStructure | None = None,
                             seeds: np.ndarray | None = None) -> OptimizationResult:
    """Multi-start ascent; ``phi_star`` is a lower bound on the optimal constant."""
    budget = budget or Budget()
    rng = np.random.default_rng(budget.seed)
    k = len(problem.ball)
    m = problem.m[:, None]
    U = _seeds(problem, budget.restarts, rng, metric) if seeds is None else np.asarray(seeds, float)
    U = _normalize(U, m)
    if k == 1:
        U = U[:, :1]
    solve = _Solver(problem.A)
    q = problem.q
    ratio = problem.log_ratio_columns(U)
    active = np.ones(U.shape[1], dtype=bool)
    stat = np.full(U.shape[1], np.inf)
    it = 0
    first = ratio.copy()
    while it < budget.max_iter and active.any() and k > 1:
        it += 1
        idx = np.flatnonzero(active)
        Ua = U[:, idx]
        AU = problem.A @ Ua
        quad = np.sum(Ua * AU, axis=0)
        Uq1 = Ua ** (q - 1)
        normqq = np.sum(m * Ua * Uq1, axis=0)
        Y = solve(m * Uq1) * (quad / normqq)
        D = Y - Ua
        stat[idx] = np.sqrt(np.sum(m * D * D, axis=0))
        best_r = np.full(len(idx), -np.inf)
        best_U = Ua.copy()
        for a in STEPS:
            cand = _normalize(np.maximum(Ua + a * D, 0.0), m)
            rc = problem.log_ratio_columns(cand)
            better = rc > best_r
            best_r = np.where(better, rc, best_r)
            best_U[:, better] = cand[:, better]
        improved = best_r >= ratio[idx]
        U[:, idx[improved]] = best_U[:, improved]
        gain = np.where(improved, best_r - ratio[idx], 0.0)
        ratio[idx] = np.maximum(ratio[idx], best_r)
        done = (gain <= budget.tol) & (stat[idx] <= math.sqrt(budget.tol) * 10)
        done |= ~improved
        active[idx[done]] = False
    best = int(np.argmax(ratio))
    u = U[:, best].copy()
    phi = sobolev_ratio(problem, u)
    stationary = k == 1 or bool(stat[best] <= 1e-4)
    return OptimizationResult(
        phi_star=phi, u=u, certification="heuristic-multistart",
        restarts=U.shape[1], tolerance=budget.tol, iterations=it,
        stationary=stationary, best_restart=best,
        trace={"initial_best": float(np.exp(first.max())), "final_best": phi,
               "stationarity": float(stat[best]) if k > 1 else 0.0},
    )


def _normalize(U: np.ndarray, m: np.ndarray) -> np.ndarray:
    nrm = np.sqrt(np.sum(m * U * U, axis=0))
    nrm[nrm == 0] = 1.0
    return U / nrm


# -- grid oracle -------------------------------------------------------------


def _sphere_points(angles: list[np.ndarray]) -> np.ndarray:
    """Hyperspherical coordinates to unit vectors; rows are points."""
    k = len(angles) + 1
    P = len(angles[0])
    out = np.empty((P, k))
    s = np.ones(P)
    for i, a in enumerate(angles):
        out[:, i] = s * np.cos(a)
        s = s * np.sin(a)
    out[:, k - 1] = s
    return out


def _eval_grid(problem: SobolevProblem, axes: list[np.ndarray], chunk: int = 1 << 18):
    """Best log ratio over the product grid of angle ``axes``."""
    sq = 1.0 / np.sqrt(problem.m)
    best, best_pt = -np.inf, None
    lead = axes[0]
    rest = np.meshgrid(*axes[1:], indexing="ij") if len(axes) > 1 else []
    rest = [a.ravel() for a in rest]
    per = max(1, chunk // max(1, len(rest[0]) if rest else 1))
    for s in range(0, len(lead), per):
        block = lead[s:s + per]
        if rest:
            A0 = np.repeat(block, len(rest[0]))
            others = [np.tile(a, len(block)) for a in rest]
            pts = _sphere_points([A0] + others)
        else:
            pts = _sphere_points([block])
        U = (pts * sq[None, :]).T
        lr = problem.log_ratio_columns(U)
        j = int(np.argmax(lr))
        if lr[j] > best:
            best = float(lr[j])
            best_pt = [float(A0[j]) if rest else float(block[j])] + (
                [float(o[j]) for o in others] if rest else [])
    return best, best_pt


def grid_oracle_constant(problem: SobolevProblem, resolution: float = 1e-3,
                         signed: bool = False) -> OptimizationResult:
    """Exhaustive angle-grid maximum over the m-unit sphere (nonnegative part by default).

    Balls of up to three vertices are searched exhaustively at ``resolution``.
    Four-vertex balls are searched exhaustively at ``max(resolution, 1e-2)``
    and then refined to ``resolution`` around the best coarse point.
    """
    k = len(problem.ball)
    if k > 4:
        raise SobolevError(f"grid oracle supports balls of at most 4 vertices, got {k}")
    if k == 1:
        u = np.array([1.0 / math.sqrt(problem.m[0])])
        return OptimizationResult(sobolev_ratio(problem, u), u, "grid-certified", 1, 0.0, 0,
                                  True, 0, grid_resolution=resolution)

    def axis(lo, hi, h):
        return np.linspace(lo, hi, int(math.ceil((hi - lo) / h)) + 1)

    ranges = [(0.0, math.pi / 2)] * (k - 1)
    if signed:
        ranges = [(0.0, math.pi / 2)] + [(0.0, math.pi)] * (k - 3) + [(0.0, 2 * math.pi)]
        if k == 2:
            ranges = [(0.0, math.pi)]
    coarse = resolution if k <= 3 else max(resolution, 1e-2)
    axes = [axis(lo, hi, coarse) for lo, hi in ranges]
    best, pt = _eval_grid(problem, axes)
    if coarse > resolution:
        sub = [axis(max(lo, c - 2 * coarse), min(hi, c + 2 * coarse), resolution)
               for c, (lo, hi) in zip(pt, ranges)]
        b2, p2 = _eval_grid(problem, sub)
        if b2 > best:
            best, pt = b2, p2
    u = _sphere_points([np.array([a]) for a in pt])[0] / np.sqrt(problem.m)
    return OptimizationResult(
        phi_star=sobolev_ratio(problem, u), u=u, certification="grid-certified",
        restarts=0, tolerance=resolution, iterations=0, stationary=True, best_restart=0,
        trace={"exhaustive_step": coarse}, grid_resolution=resolution,
    )


# -- Nash inequality -----------------------------------------------------------


def sobolev_to_nash_constant(problem: SobolevProblem, phi: float) -> float:
    """``C = phi r^2 / m(B)^(2/n)``."""
    return phi * problem.r**2 / problem.ball_measure ** (2.0 / problem.n)


def nash_check(problem: SobolevProblem, C: float, samples: int = 100, seed: int = 0,
               extra: list | None = None) -> Certificate:
    """Check ``||u||_2^(2+4/n) <= C (E(u) + r^-2 ||u||_2^2) ||u||_1^(4/n)`` on samples."""
    rng = np.random.default_rng(seed)
    n, r, g = problem.n, problem.r, problem.g
    funcs = [problem.restrict(f) for f in (extra or [])]
    funcs += [rng.random(len(problem.ball)) for _ in range(samples)]
    logC = math.log(C) if C > 0 else -math.inf

    def margin(ub: np.ndarray) -> float:
        full = problem.extend(ub)
        l2sq = float(np.sum(g.m * full * full))
        l1 = float(np.sum(g.m * np.abs(full)))
        energy = dirichlet_energy(g, full)
        lhs = (1 + 2.0 / n) * math.log(l2sq)
        rhs = logC + math.log(energy + l2sq / r**2) + 4.0 / n * math.log(l1)
        return rhs - lhs

    rows = []
    for i, ub in enumerate(funcs):
        if not np.any(ub != 0):
            continue
        rows.append({"sample": i, "margin": margin(ub)})
    return Certificate(
        condition="nash",
        params={"n": n, "r": r, "C": C, "ball_size": len(problem.ball)},
        grid={"kind": "sampled functions", "seed": seed},
        rows=rows,
        reevaluate=lambda w: margin(funcs[w["sample"]]),
    )
