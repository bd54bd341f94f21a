"""Certificate checks for the ball conditions and the auxiliary inequalities.

Every check compares natural logarithms and reports one row per grid point
with ``margin = log(RHS) - log(LHS)``.  Radius quantifiers are reduced to
breakpoint sets: ball measures and jump sizes are right-continuous step
functions of the radius, and a left limit at a breakpoint ``b`` is evaluated
at ``nextafter(b, 0)``, the largest float below ``b``.  Time quantifiers are
sampled on geometric grids.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np

from .certificate import Certificate
from .corrections import (
    LN2, CorrectionProfile, Dimension, Flags, GuardError, as_dimension, log_offdiag_factor,
    log_weak_sobolev_factor, zeta,
)
from .metric import MetricStructure
from .sobolev import Budget, SobolevProblem, minimal_sobolev_constant, sobolev_ratio
from .spectral import (
    KERNEL_FLOOR, POSITIVE_LIMIT, SPECTRAL_RESOLUTION, SpectralDecomposition, dirichlet_energy,
    log_kernel_positive, omega_context,
)

LOG_FLOOR = math.log(KERNEL_FLOOR)
MIN_QUAD_NODES = 1000
ROUNDING_SQ = 1e-26  # squared relative size of eigenbasis rounding


class CheckError(ValueError):
    pass


def _left(r: float) -> float:
    return float(np.nextafter(r, 0.0))


def _indices(metric: MetricStructure, vertices) -> np.ndarray:
    if vertices is None:
        return np.arange(metric.g.n_vertices)
    return np.array(sorted({metric.g.idx(v) for v in vertices}), dtype=np.int64)


def geometric_grid(lo: float, hi: float, density: int) -> np.ndarray:
    """``lo * 10^(j/density)`` for ``j = 0, 1, ...`` up to ``hi``, plus ``hi``.

    Doubling ``density`` keeps every old node, so minima over the grid can
    only decrease.
    """
    if not (0 < lo <= hi):
        raise CheckError(f"bad time range [{lo}, {hi}]")
    if density < 1:
        raise CheckError("grid density must be a positive integer")
    jmax = int(math.floor(density * math.log10(hi / lo) + 1e-9))
    pts = [lo * 10 ** (j / density) for j in range(jmax + 1)]
    if pts[-1] < hi:
        pts.append(hi)
    return np.array(pts)


def inv_measure_sup(metric: MetricStructure, o, r: float) -> float:
    """``||1/m||_{B_o(r)}``."""
    return float(np.max(1.0 / metric.g.m[metric.ball(o, r)]))


# -- (S) ---------------------------------------------------------------------


def check_sobolev(metric: MetricStructure, centers, radii: Sequence[float], n: float,
                  phi: float, budget: Budget | None = None) -> Certificate:
    """One-sided check ``phi_star(n, x, r) <= phi`` with the multistart optimizer.

    The optimizer bounds the optimal constant from below, so a failing row is a
    genuine violation while a passing row is evidence only.
    """
    budget = budget or Budget()
    found: dict[tuple, tuple[SobolevProblem, np.ndarray]] = {}
    rows = []
    for i in _indices(metric, centers):
        for r in radii:
            prob = SobolevProblem.from_ball(metric, i, float(r), n)
            res = minimal_sobolev_constant(prob, budget, metric=metric)
            xid = metric.g.ids[i]
            found[(xid, float(r))] = (prob, res.u)
            rows.append({"x": xid, "r": float(r), "phi_star": res.phi_star,
                         "stationary": res.stationary,
                         "margin": math.log(phi) - math.log(res.phi_star)})

    def again(w: dict) -> float:
        prob, u = found[(w["x"], w["r"])]
        return math.log(phi) - math.log(sobolev_ratio(prob, u))

    return Certificate(
        condition="S",
        params={"n": n, "phi": phi, "restarts": budget.restarts, "seed": budget.seed,
                "certification": "heuristic-multistart (lower bound on the optimum)"},
        grid={"kind": "balls", "radii": [float(r) for r in radii]},
        rows=rows, reevaluate=again,
    )


# -- (V) ---------------------------------------------------------------------


def check_volume_doubling(metric: MetricStructure, B, dimension: Dimension | float,
                          log_Phi: Callable[[int, float, float], float], R1: float, R2: float,
                          flags: Iterable[str] = ()) -> Certificate:
    """``m(B_x(r2)) <= Phi_x^{r2}(r1) (r2/r1)^{n(r2)} m(B_x(r1))`` for ``R1 <= r1 <= r2 <= R2``.

    On each interval of constant ``m(B_x(r2))`` the right side grows with
    ``r2``, so ``r2`` runs over ``R1`` and the breakpoints in ``(R1, R2]``.
    For each ``r2``, ``r1`` runs over ``R1``, the breakpoints in ``(R1, r2]``
    and the left limits at those breakpoints.  ``log_Phi(x, r1, r2)`` takes
    a dense vertex index.
    """
    if not (0 < R1 <= R2):
        raise CheckError(f"empty radius range [R1, R2] = [{R1}, {R2}]")
    dim = as_dimension(dimension)
    g = metric.g

    def point(i: int, r1: float, r2: float) -> float:
        return (log_Phi(i, r1, r2) + dim(r2) * math.log(r2 / r1)
                + math.log(metric.ball_measure(i, r1)) - math.log(metric.ball_measure(i, r2)))

    rows = []
    evaluations = 0
    for i in _indices(metric, B):
        bp = metric.breakpoints(i)
        inner = bp[(bp > R1) & (bp <= R2)]
        r2s = np.concatenate([[R1], inner])
        for k, r2 in enumerate(r2s):
            cands = [R1]
            for b in inner[:k]:
                cands += [_left(b), float(b)]
            best = None
            for r1 in cands:
                m_ = point(i, r1, float(r2))
                evaluations += 1
                if best is None or m_ < best[0]:
                    best = (m_, r1)
            rows.append({"x": g.ids[i], "r1": best[1], "r2": float(r2), "margin": best[0]})

    return Certificate(
        condition="V",
        params={"R1": R1, "R2": R2, "dimension": dim.describe(),
                "centers": [g.ids[i] for i in _indices(metric, B)]},
        grid={"kind": "breakpoints and left limits", "evaluations": evaluations},
        rows=rows, flags=list(flags),
        reevaluate=lambda w: point(g.idx(w["x"]), w["r1"], w["r2"]),
    )


# -- (L) ---------------------------------------------------------------------


def check_local_regularity(metric: MetricStructure, B, dimension: Dimension | float,
                           phi: float, R1: float, R2: float) -> Certificate:
    """``m(B_x(r))/m(x) <= [2 phi (1 + r^2 Deg_x)]^(n(r)/2)`` at ``R1`` and breakpoints."""
    if not (0 < R1 <= R2):
        raise CheckError(f"empty radius range [R1, R2] = [{R1}, {R2}]")
    dim = as_dimension(dimension)
    g = metric.g

    def point(i: int, r: float) -> float:
        rhs = dim(r) / 2 * (math.log(2 * phi) + math.log1p(r * r * g.Deg[i]))
        return rhs - math.log(metric.relative_ball_measure(i, r))

    rows = []
    for i in _indices(metric, B):
        bp = metric.breakpoints(i)
        for r in np.concatenate([[R1], bp[(bp > R1) & (bp <= R2)]]):
            rows.append({"x": g.ids[i], "r": float(r), "margin": point(i, float(r))})
    return Certificate(
        condition="L",
        params={"R1": R1, "R2": R2, "phi": phi, "dimension": dim.describe()},
        grid={"kind": "breakpoints"},
        rows=rows, reevaluate=lambda w: point(g.idx(w["x"]), w["r"]),
    )


# -- (G) and the on-diagonal estimate ----------------------------------------


class _KernelRows:
    """Deterministic, memoized ``log p_t(x, .)``.

    The spectral route is accurate to roughly machine precision times the
    largest entry; rows whose smallest entry drops below
    ``SPECTRAL_RESOLUTION`` times their largest are recomputed by the
    positivity-preserving route.
    """

    def __init__(self, dec: SpectralDecomposition):
        self.dec = dec
        self._rows: dict[tuple[float, int], np.ndarray] = {}
        self._positive: dict[float, np.ndarray] = {}
        self.flags: set[str] = set()

    def __call__(self, t: float, x: int) -> np.ndarray:
        key = (t, x)
        row = self._rows.get(key)
        if row is not None:
            return row
        dec = self.dec
        phi = dec.eigenfunctions
        p = phi @ (phi[x] * np.exp(-dec.eigenvalues * t))
        if p.min() < SPECTRAL_RESOLUTION * p.max():
            if dec.g.n_vertices <= POSITIVE_LIMIT:
                full = self._positive.get(t)
                if full is None:
                    full = log_kernel_positive(dec.g, t)
                    self._positive[t] = full
                row = full[x].copy()
            else:
                self.flags.add("kernel tail below spectral resolution (spectral values used)")
                with np.errstate(divide="ignore", invalid="ignore"):
                    row = np.log(np.where(p > 0, p, 0.0))
        else:
            row = np.log(p)
        self._rows[key] = row
        return row


def _memo(fn: Callable[[int, float], float]) -> Callable[[int, float], float]:
    cache: dict = {}

    def wrapped(i: int, r: float) -> float:
        key = (i, r)
        if key not in cache:
            cache[key] = fn(i, r)
        return cache[key]

    return wrapped


def check_gaussian(dec: SpectralDecomposition, metric: MetricStructure, B,
                   dimension: Dimension | float, log_Psi: Callable[[int, float], float],
                   R1: float, R2: float, t_grid: Sequence[float], centers=None,
                   Lambda: float | None = None) -> Certificate:
    """Gaussian upper bound at every ``x`` in ``centers``, ``y`` in ``B`` and grid time.

    ``log p_t(x,y) <= log Psi_x + log Psi_y + n_xy/2 log(1 v S^-2(sqrt(t^2+rho^2 S^2) - t))
    - 1/2 log(m(B_x(tau)) m(B_y(tau))) - Lambda (t - t ^ R2^2) - zeta(rho, t)``
    with ``tau = sqrt(t) ^ R2``.  ``log_Psi(i, tau)`` takes a dense index and
    already includes any constant factor.  One row per ``(x, t)``, minimized
    over ``y``.  Kernel values below ``1e-300`` count as passing points and are
    flagged.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        raise CheckError("empty time grid")
    if np.any(t_grid < R1 * R1 * (1 - 1e-12)):
        raise CheckError(f"time grid must start at R1^2 = {R1 * R1:g} or later")
    dim = as_dimension(dimension)
    g = metric.g
    S = metric.S
    lam = dec.bottom if Lambda is None else Lambda
    ys = _indices(metric, B)
    xs = ys if centers is None else _indices(metric, centers)
    kernel = _KernelRows(dec)
    psi = _memo(log_Psi)
    vol = _memo(lambda i, tau: math.log(metric.ball_measure(i, tau)))
    underflow = [0]

    def margins(i: int, t: float, y_idx: np.ndarray) -> np.ndarray:
        tau = min(math.sqrt(t), R2)
        logp = kernel(t, i)[y_idx]
        rho = metric.dist[i, y_idx]
        n_xy = dim(tau)
        rhs = (psi(i, tau) + np.array([psi(int(y), tau) for y in y_idx])
               + n_xy / 2 * log_offdiag_factor(rho, t, S)
               - 0.5 * (vol(i, tau) + np.array([vol(int(y), tau) for y in y_idx]))
               - lam * (t - min(t, R2 * R2)) - zeta(rho, t, S))
        return np.where(logp < LOG_FLOOR, np.inf, rhs - logp), logp, rhs

    rows = []
    for t in t_grid:
        t = float(t)
        for i in xs:
            mg, logp, rhs = margins(int(i), t, ys)
            underflow[0] += int(np.sum(np.isinf(mg)))
            j = int(np.argmin(mg))
            rows.append({"x": g.ids[i], "y": g.ids[ys[j]], "t": t,
                         "rho": float(metric.dist[i, ys[j]]), "log_p": float(logp[j]),
                         "log_bound": float(rhs[j]), "margin": float(mg[j])})

    flags = set(kernel.flags)
    if underflow[0]:
        flags.add(f"kernel underflow below {KERNEL_FLOOR:g} at {underflow[0]} points (treated as pass)")
    flags.add("time quantifier sampled on a finite grid; violations between nodes are not excluded")

    def again(w: dict) -> float:
        return float(margins(g.idx(w["x"]), w["t"], np.array([g.idx(w["y"])]))[0][0])

    return Certificate(
        condition="G",
        params={"R1": R1, "R2": R2, "S": S, "Lambda": lam, "dimension": dim.describe(),
                "centers": [g.ids[i] for i in xs], "vertices": len(ys)},
        grid={"kind": "geometric time grid", "t_min": float(t_grid.min()),
              "t_max": float(t_grid.max()), "times": int(t_grid.size),
              "pairs_per_time": int(len(xs) * len(ys))},
        rows=rows, flags=sorted(flags), reevaluate=again,
    )


def check_on_diagonal(dec: SpectralDecomposition, metric: MetricStructure, B,
                      log_Psi: Callable[[int, float], float], radii: Sequence[float]) -> Certificate:
    """``p_{rho^2}(x, x) <= Psi_x(rho)^2 / m(B_x(rho))`` over ``rho`` in ``radii``."""
    g = metric.g
    kernel = _KernelRows(dec)

    def point(i: int, rho: float) -> float:
        logp = float(kernel(rho * rho, i)[i])
        return 2 * log_Psi(i, rho) - math.log(metric.ball_measure(i, rho)) - logp

    rows = [{"x": g.ids[i], "rho": float(r), "margin": point(int(i), float(r))}
            for i in _indices(metric, B) for r in radii]
    return Certificate(
        condition="O",
        params={"radii": [float(r) for r in radii]},
        grid={"kind": "radii"},
        rows=rows, reevaluate=lambda w: point(g.idx(w["x"]), w["rho"]),
    )


# -- non-collapsing and ball comparison ----------------------------------------


def noncollapsing_constant(metric: MetricStructure, x, R: float, n: float, phi: float) -> float:
    """``C = phi R^2 / m(B_x(R))^(2/n)``."""
    return phi * R * R / metric.ball_measure(x, R) ** (2.0 / n)


def check_noncollapsing(metric: MetricStructure, x, R: float, n: float, C: float,
                        relaxed: bool = False) -> Certificate:
    """``2^(-6n^2) C^(-n/2) [C^(n/2) m(x)/r^n]^theta~(r,R) <= m(B_x(r))/r^n`` for
    ``r`` in ``[2 s_x(0), R]``.

    The margin decreases between breakpoints, so the grid is ``2 s_x(0)``,
    ``R``, every breakpoint in between and the left limit at each.
    """
    g = metric.g
    i = g.idx(x)
    flags = Flags(relaxed=relaxed)
    s0 = metric.jump_size(i, 0.0)
    lo = 2 * s0
    flags.guard(lo <= R <= metric.diameter / 2,
                f"2 s_x(0) <= R <= diam/2 (s_x(0) = {s0:g}, R = {R:g}, diam = {metric.diameter:g})")
    bp = metric.breakpoints(i)
    for b in np.concatenate([[s0], bp[(bp > s0) & (bp <= R / 2)]]):
        flags.guard(metric.jump_size(i, b) <= b, f"s_x(r) <= r at r = {b:g}")
    if lo > R:
        raise CheckError(f"empty radius range [2 s_x(0), R] = [{lo}, {R}]")
    prof = CorrectionProfile(metric, n, relaxed=relaxed)
    prof.flags = flags
    logC = math.log(C)
    logmx = math.log(g.m[i])

    def point(r: float) -> float:
        theta = prof.theta_tilde(i, r, R)
        lhs = -6 * n * n * LN2 - n / 2 * logC + theta * (n / 2 * logC + logmx - n * math.log(r))
        return math.log(metric.ball_measure(i, r)) - n * math.log(r) - lhs

    inner = bp[(bp > lo) & (bp <= R)]
    grid = [lo] + [v for b in inner for v in (_left(float(b)), float(b))]
    if grid[-1] < R:
        grid.append(R)
    rows = [{"x": g.ids[i], "r": float(r), "margin": point(float(r))} for r in grid]
    return Certificate(
        condition="non-collapse",
        params={"x": g.ids[i], "R": R, "n": n, "C": C},
        grid={"kind": "breakpoints and left limits"},
        rows=rows, flags=sorted(flags.items), reevaluate=lambda w: point(w["r"]),
    )


def check_ball_comparison(metric: MetricStructure, o, r: float, d: float, log_Phi: float,
                          doubling: Certificate | None, relaxed: bool = False) -> Certificate:
    """``m(B_x(r)) <= 2^(18d) Phi^9 m(B_y(r))`` for all ``x, y`` in ``B_o(r)``.

    Refuses unless ``doubling`` is a passing (V) certificate covering radii
    ``[r/4, r]`` at every vertex of ``B_o(r)``.
    """
    g = metric.g
    io = g.idx(o)
    if doubling is None or doubling.condition != "V":
        raise CheckError("ball comparison needs a verified volume doubling certificate first")
    if not doubling.passed:
        raise CheckError("the supplied volume doubling certificate does not pass")
    ball = metric.ball(io, r)
    p = doubling.params
    covered = set(p.get("centers", []))
    missing = [g.ids[i] for i in ball if g.ids[i] not in covered]
    if p["R1"] > r / 4 or p["R2"] < r or missing:
        raise CheckError("the volume doubling certificate does not cover [r/4, r] on B_o(r)"
                         + (f" (missing {missing[0]!r})" if missing else ""))
    flags = Flags(relaxed=relaxed)
    s_sup = metric.jump_sup_over_ball(io, r, r / 4)
    flags.guard(r >= 8 * s_sup, f"r >= 8||s(r/4)||_B_o(r) (r = {r:g}, sup = {s_sup:g})")
    const = 18 * d * LN2 + 9 * log_Phi
    logv = np.log(np.array([metric.ball_measure(int(i), r) for i in ball]))

    def point(ix: int, iy: int) -> float:
        return (const - math.log(metric.ball_measure(ix, r)) + math.log(metric.ball_measure(iy, r)))

    jmin = int(np.argmin(logv))
    rows = [{"x": g.ids[i], "y": g.ids[ball[jmin]], "margin": point(int(i), int(ball[jmin]))}
            for i in ball]
    return Certificate(
        condition="ball-compare",
        params={"o": g.ids[io], "r": r, "d": d, "log_Phi": log_Phi},
        grid={"kind": "all pairs in the ball", "pairs": len(ball) ** 2},
        rows=rows, flags=sorted(flags.items),
        reevaluate=lambda w: point(g.idx(w["x"]), g.idx(w["y"])),
    )


# -- time integrals ------------------------------------------------------------


def _trapezoid(values: np.ndarray, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Composite trapezoid on equispaced nodes (odd count) along axis 0, and a
    Richardson error estimate from the half-resolution rule."""
    k = values.shape[0] - 1
    h = (b - a) / k
    full = h * (values.sum(axis=0) - 0.5 * (values[0] + values[-1]))
    half = 2 * h * (values[::2].sum(axis=0) - 0.5 * (values[0] + values[-1]))
    return full, np.abs(full - half) / 3.0


def _nodes(a: float, b: float, count: int) -> np.ndarray:
    count = max(count, MIN_QUAD_NODES)
    if count % 2 == 0:
        count += 1
    return np.linspace(a, b, count)


def _sandwiched_series(dec: SpectralDecomposition, exp_plus: np.ndarray, exp_minus: np.ndarray,
                       F: np.ndarray, times: np.ndarray, rows=None) -> np.ndarray:
    """``P_t^omega f`` for columns of ``F``; shape ``(len(times), |rows|, samples)``."""
    phi = dec.eigenfunctions
    coef = phi.T @ (dec.g.m[:, None] * exp_minus[:, None] * F)
    E = np.exp(-np.outer(times, dec.eigenvalues))
    left = phi if rows is None else phi[rows]
    ep = exp_plus if rows is None else exp_plus[rows]
    return ep[None, :, None] * np.einsum("yk,tk,ks->tys", left, E, coef, optimize=True)


def _quad_lower(I: np.ndarray, err: np.ndarray) -> np.ndarray:
    """Lower bound for an integral; nonpositive values map to ``-inf`` in log space."""
    lower = I - err
    with np.errstate(divide="ignore"):
        return np.where(lower > 0, np.log(np.maximum(lower, 1e-320)), -np.inf)


def _sample_f(rng: np.random.Generator, n: int, samples: int, extra) -> np.ndarray:
    cols = [np.asarray(f, dtype=float) for f in (extra or [])]
    for _ in range(samples):
        cols.append(rng.random(n))
    return np.column_stack(cols) if cols else np.zeros((n, 0))


def davies_window(profile: CorrectionProfile, x, r: float, delta: float, T: float, N: float,
                  log_Phi_doubling: float, h: float) -> tuple[float, float, float]:
    """``(a, b, log chi)`` with ``a = T - delta r^2``, ``b = T + delta r^2`` and
    ``chi^-2 = Gamma~(r/2)^2 (1 + delta r^2 h)^(N/2+1) / (delta^(N/2+1) r^2 m(B_x(r)))``."""
    lg = profile.log_Gamma_tilde(x, r / 2, N, log_Phi_doubling)
    e = N / 2 + 1
    log_chi_m2 = (2 * lg + e * math.log1p(delta * r * r * h) - e * math.log(delta)
                  - 2 * math.log(r) - math.log(profile.metric.ball_measure(x, r)))
    return T - delta * r * r, T + delta * r * r, -0.5 * log_chi_m2


def check_mean_value(dec: SpectralDecomposition, metric: MetricStructure, x, r: float, n: float,
                     phi: float, log_Phi_doubling: float, tau: float, T: float, omega,
                     samples: int = 100, seed: int = 0, extra=None, nodes: int = 1025,
                     relaxed: bool = False) -> Certificate:
    """Mean-value inequality for ``v_t = P_t^omega f`` with sampled ``f >= 0``.

    ``v_T(x)^2 <= Gamma~(r/2)^2 (1 + tau r^2 h)^(n/2+1) / (tau^(n/2+1) r^2 m(B_x(r)))
    * int_{T - tau r^2}^{T + tau r^2} sum_{B_x(r)} m v_t^2 dt``.  The integral is
    replaced by a trapezoid value minus its Richardson error estimate.
    """
    g = metric.g
    i = g.idx(x)
    if not (0 < tau <= 1):
        raise CheckError(f"tau must lie in (0, 1], got {tau}")
    flags = Flags(relaxed=relaxed)
    s = metric.annulus_jump_sup(i, r / 2, r)
    flags.guard(r >= 128 * s, f"r >= 128||s_x||_[r/2,r] (r = {r:g}, sup = {s:g})")
    flags.guard(T >= r * r, f"T >= r^2 (T = {T:g}, r = {r:g})")
    if T - tau * r * r < 0:
        raise CheckError("time window starts before 0")
    ctx = omega_context(g, omega)
    prof = CorrectionProfile(metric, n, phi=phi, relaxed=relaxed)
    prof.flags = flags
    a, b, log_chi = davies_window(prof, i, r, tau, T, n, log_Phi_doubling, ctx.h)
    ball = metric.ball(i, r)
    rng = np.random.default_rng(seed)
    F = _sample_f(rng, g.n_vertices, samples, extra)
    times = _nodes(a, b, nodes)
    V = _sandwiched_series(dec, ctx.exp_plus, ctx.exp_minus, F, times, rows=ball)
    integrand = np.sum(g.m[ball][None, :, None] * V * V, axis=1)
    I, err = _trapezoid(integrand, a, b)
    vT = _sandwiched_series(dec, ctx.exp_plus, ctx.exp_minus, F, np.array([T]), rows=[i])[0, 0]
    log_I = _quad_lower(I, err)

    def point(k: int) -> float:
        v = vT[k]
        if v <= 0:
            return math.inf
        return -2 * log_chi + float(log_I[k]) - 2 * math.log(v)

    rows = [{"sample": k, "v_T": float(vT[k]), "integral": float(I[k]),
             "quadrature_error": float(err[k]), "margin": point(k)} for k in range(F.shape[1])]
    return Certificate(
        condition="mean-value",
        params={"x": g.ids[i], "r": r, "n": n, "phi": phi, "log_Phi_doubling": log_Phi_doubling,
                "tau": tau, "T": T, "h": ctx.h, "window": [a, b], "log_chi": log_chi},
        grid={"kind": "sampled functions", "seed": seed, "quadrature_nodes": int(times.size)},
        rows=rows, flags=sorted(flags.items), reevaluate=lambda w: point(w["sample"]),
    )


def check_chi_hypothesis(dec: SpectralDecomposition, vertices, a, b, log_chi, T: float,
                         omegas: Sequence, samples: int = 100, seed: int = 0, extra=None,
                         nodes: int = 1025) -> Certificate:
    """``chi(x)^2 (P_T^omega f)(x)^2 <= int_{a(x)}^{b(x)} ||P_t^omega f||_2^2 dt``.

    ``a``, ``b`` and ``log_chi`` are arrays aligned with ``vertices`` (scalars
    broadcast).  Each sampled ``f >= 0`` is paired with every ``omega``.
    """
    g = dec.g
    idx = np.array([g.idx(v) for v in vertices], dtype=np.int64)
    a = np.broadcast_to(np.asarray(a, dtype=float), idx.shape)
    b = np.broadcast_to(np.asarray(b, dtype=float), idx.shape)
    log_chi = np.broadcast_to(np.asarray(log_chi, dtype=float), idx.shape)
    bad = np.flatnonzero(a > b)
    if bad.size:
        k = bad[0]
        raise CheckError(f"inverted window at vertex {g.ids[idx[k]]!r}: a = {a[k]} > b = {b[k]}")
    if np.any(a < 0):
        raise CheckError("window starts before 0")
    rng = np.random.default_rng(seed)
    F = _sample_f(rng, g.n_vertices, samples, extra)
    results: dict[tuple[int, int, int], float] = {}
    rows = []
    for w, omega in enumerate(omegas):
        ctx = omega_context(g, omega)
        vT = _sandwiched_series(dec, ctx.exp_plus, ctx.exp_minus, F, np.array([T]), rows=idx)[0]
        for j, i in enumerate(idx):
            times = _nodes(a[j], b[j], nodes)
            if b[j] > a[j]:
                V = _sandwiched_series(dec, ctx.exp_plus, ctx.exp_minus, F, times)
                I, err = _trapezoid(np.sum(g.m[None, :, None] * V * V, axis=1), a[j], b[j])
            else:
                I = err = np.zeros(F.shape[1])
            log_I = _quad_lower(I, err)
            for k in range(F.shape[1]):
                v = vT[j, k]
                if v == 0:
                    mg = math.inf
                else:
                    mg = float(log_I[k]) - 2 * log_chi[j] - 2 * math.log(abs(v))
                results[(w, int(i), k)] = mg
                rows.append({"omega": w, "x": g.ids[i], "sample": k, "margin": mg})
    return Certificate(
        condition="chi-hypothesis",
        params={"T": T, "vertices": [g.ids[i] for i in idx], "omegas": len(omegas)},
        grid={"kind": "sampled functions", "seed": seed, "quadrature_nodes": max(nodes, MIN_QUAD_NODES)},
        rows=rows, reevaluate=lambda w: results[(w["omega"], g.idx(w["x"]), w["sample"])],
    )


# -- semigroup hypotheses and weak Sobolev ------------------------------------


def check_semigroup_regularization(dec: SpectralDecomposition, metric: MetricStructure, B,
                                   C: float, n: float, radii: Sequence[float],
                                   samples: int = 100, seed: int = 0, extra=None) -> Certificate:
    """``sup_{x,y in B} p_{r^2}(x,y) <= C r^-n`` and ``||f - P_{r^2} f||_2^2 <= r^2 E(f)``.

    The first part is exact on ``B``; the second runs on sampled ``f``
    supported in ``B``.
    """
    g = dec.g
    ball = _indices(metric, B)
    rng = np.random.default_rng(seed)
    funcs = []
    for f in extra or []:
        funcs.append(np.asarray(f, dtype=float))
    for _ in range(samples):
        f = np.zeros(g.n_vertices)
        f[ball] = rng.normal(size=ball.size)
        funcs.append(f)
    logC = math.log(C)

    def bound_point(r: float) -> float:
        K = dec.kernel_matrix(r * r)[np.ix_(ball, ball)]
        return logC - n * math.log(r) - math.log(float(K.max()))

    def contraction_point(r: float, k: int) -> float:
        f = funcs[k]
        d = f - dec.evolve(f, r * r)
        lhs = float(np.sum(g.m * d * d))
        rhs = r * r * dirichlet_energy(g, f)
        if lhs <= ROUNDING_SQ * float(np.sum(g.m * f * f)):
            return math.inf  # f - P f is rounding noise (f constant)
        return (math.log(rhs) if rhs > 0 else -math.inf) - math.log(lhs)

    rows = []
    for r in radii:
        r = float(r)
        rows.append({"part": "kernel-bound", "r": r, "sample": -1, "margin": bound_point(r)})
        for k in range(len(funcs)):
            rows.append({"part": "contraction", "r": r, "sample": k,
                         "margin": contraction_point(r, k)})

    def again(w: dict) -> float:
        if w["part"] == "kernel-bound":
            return bound_point(w["r"])
        return contraction_point(w["r"], w["sample"])

    return Certificate(
        condition="semigroup-reg",
        params={"C": C, "n": n, "radii": [float(r) for r in radii], "vertices": len(ball)},
        grid={"kind": "radii x sampled functions", "seed": seed},
        rows=rows, reevaluate=again,
    )


def weak_level_sup(m: np.ndarray, f: np.ndarray, n: float) -> tuple[float, float]:
    """``log sup_lambda lambda^(2(1+1/n)) m(f > lambda)`` and the maximizing level.

    ``m(f > lambda)`` is left-continuous in ``lambda`` with jumps at the values
    of ``f``, so the supremum is the maximum over positive values ``v`` of
    ``v^(2+2/n) m(f >= v)``.
    """
    pos = f > 0
    if not pos.any():
        return -math.inf, 0.0
    vals = np.unique(f[pos])
    tail = np.array([m[f >= v].sum() for v in vals])
    logs = (2 + 2.0 / n) * np.log(vals) + np.log(tail)
    k = int(np.argmax(logs))
    return float(logs[k]), float(vals[k])


def check_weak_sobolev(metric: MetricStructure, o, n: float, C1: float, C2: float, r1: float,
                       r2: float, samples: int = 100, seed: int = 0, extra=None) -> Certificate:
    """``sup_lambda lambda^(2(1+1/n)) m(f > lambda) <= 12 C2^2 (C1 v r1^n ||1/m||)^(2/n)
    (E(f) + r2^-2 ||f||_2^2) ||f||_1^(2/n)`` for sampled ``f >= 0`` on ``B_o(r2)``."""
    g = metric.g
    io = g.idx(o)
    ball = metric.ball(io, r2)
    inv_m = inv_measure_sup(metric, io, r2)
    factor = log_weak_sobolev_factor(n, math.log(C1), math.log(C2), r1, inv_m)
    rng = np.random.default_rng(seed)
    funcs = [np.asarray(f, dtype=float) for f in (extra or [])]
    for _ in range(samples):
        f = np.zeros(g.n_vertices)
        f[ball] = rng.random(ball.size) * (rng.random(ball.size) < 0.7)
        funcs.append(f)
    outside = np.ones(g.n_vertices, dtype=bool)
    outside[ball] = False

    def point(k: int) -> float:
        f = funcs[k]
        if np.any(f[outside] != 0):
            raise CheckError(f"sample {k} is not supported in B_o(r2)")
        lhs, _ = weak_level_sup(g.m, f, n)
        if lhs == -math.inf:
            return math.inf
        energy = dirichlet_energy(g, f)
        rhs = (factor + math.log(energy + float(np.sum(g.m * f * f)) / r2**2)
               + 2.0 / n * math.log(float(np.sum(g.m * np.abs(f)))))
        return rhs - lhs

    rows = []
    for k in range(len(funcs)):
        lhs, level = weak_level_sup(g.m, funcs[k], n)
        rows.append({"sample": k, "level": level, "margin": point(k)})
    return Certificate(
        condition="weak-sobolev",
        params={"o": g.ids[io], "n": n, "C1": C1, "C2": C2, "r1": r1, "r2": r2,
                "inv_m_sup": inv_m, "log_factor": factor},
        grid={"kind": "sampled functions", "seed": seed},
        rows=rows, reevaluate=lambda w: point(w["sample"]),
    )


__all__ = [
    "CheckError", "GuardError", "check_ball_comparison", "check_chi_hypothesis",
    "check_gaussian", "check_local_regularity", "check_mean_value", "check_noncollapsing",
    "check_on_diagonal", "check_semigroup_regularization", "check_sobolev",
    "check_volume_doubling", "check_weak_sobolev", "davies_window", "geometric_grid",
    "inv_measure_sup", "noncollapsing_constant", "weak_level_sup",
]
