"""Laplacian, heat kernel and sandwiched semigroups on finite graphs.

Kernel convention: ``(P_t f)(x) = sum_y m(y) p_t(x, y) f(y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.linalg import eigh

from .graph import WeightedGraph

MAX_VERTICES = 4096
KERNEL_FLOOR = 1e-300


class SpectralError(ValueError):
    pass


def _vec(g: WeightedGraph, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape[0] != g.n_vertices:
        raise SpectralError(f"function has {f.shape[0]} entries, graph has {g.n_vertices} vertices")
    return f


def laplacian_apply(g: WeightedGraph, f) -> np.ndarray:
    """``(Lap f)(x) = (1/m(x)) sum_y b(x,y) (f(x) - f(y))``; columns of 2-D ``f`` are independent."""
    f = _vec(g, f)
    deg = g.deg if f.ndim == 1 else g.deg[:, None]
    m = g.m if f.ndim == 1 else g.m[:, None]
    return (deg * f - g.adjacency @ f) / m


def gradient_norm(g: WeightedGraph, f) -> np.ndarray:
    """``|grad f|(x)`` at every vertex."""
    f = _vec(g, f)
    d2 = g.edge_b * (f[g.edge_u] - f[g.edge_v]) ** 2
    s = np.zeros(g.n_vertices)
    np.add.at(s, g.edge_u, d2)
    np.add.at(s, g.edge_v, d2)
    return np.sqrt(s / g.m)


def dirichlet_energy(g: WeightedGraph, f) -> float:
    """``|| |grad f| ||_2^2 = sum_{x,y} b(x,y) (f(x)-f(y))^2`` (ordered pairs)."""
    f = _vec(g, f)
    return float(2.0 * np.sum(g.edge_b * (f[g.edge_u] - f[g.edge_v]) ** 2))


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """m-orthonormal eigensystem of the Laplacian, eigenvalues ascending."""

    g: WeightedGraph
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray  # column k is phi_k

    @property
    def bottom(self) -> float:
        """Bottom of the spectrum; clipped at 0 (the operator is nonnegative)."""
        return max(0.0, float(self.eigenvalues[0]))

    def residuals(self) -> np.ndarray:
        """``||Lap phi_k - lambda_k phi_k||_2`` (m-weighted) per k."""
        phi = self.eigenfunctions
        r = laplacian_apply(self.g, phi) - phi * self.eigenvalues[None, :]
        return np.sqrt(np.sum(self.g.m[:, None] * r * r, axis=0))

    def gram_error(self) -> float:
        phi = self.eigenfunctions
        gram = phi.T @ (self.g.m[:, None] * phi)
        return float(np.max(np.abs(gram - np.eye(len(gram)))))

    def kernel_matrix(self, t: float) -> np.ndarray:
        """Full matrix ``p_t(x, y)``."""
        if t < 0:
            raise SpectralError(f"negative time {t}")
        phi = self.eigenfunctions
        e = np.exp(-self.eigenvalues * t)
        k = (phi * e[None, :]) @ phi.T
        return 0.5 * (k + k.T)

    def kernel_rows(self, t, rows) -> np.ndarray:
        """``p_t(x, .)`` for ``x`` in ``rows``; shape ``(len(t), len(rows), N)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0):
            raise SpectralError("negative time")
        phi = self.eigenfunctions
        e = np.exp(-np.outer(t, self.eigenvalues))
        left = phi[np.asarray(rows)]
        return np.einsum("rk,tk,yk->try", left, e, phi, optimize=True)

    def heat_kernel(self, t: float, x, y) -> float:
        if t < 0:
            raise SpectralError(f"negative time {t}")
        i, j = self.g.idx(x), self.g.idx(y)
        phi = self.eigenfunctions
        return float(np.sum(np.exp(-self.eigenvalues * t) * phi[i] * phi[j]))

    def evolve(self, f, t: float) -> np.ndarray:
        """``P_t f`` via the eigenbasis."""
        if t < 0:
            raise SpectralError(f"negative time {t}")
        f = _vec(self.g, f)
        phi = self.eigenfunctions
        m = self.g.m if f.ndim == 1 else self.g.m[:, None]
        coef = phi.T @ (m * f)
        e = np.exp(-self.eigenvalues * t)
        return phi @ (e[:, None] * coef if f.ndim == 2 else e * coef)


def decompose(g: WeightedGraph) -> SpectralDecomposition:
    """Diagonalize by symmetric conjugation with ``M^(1/2)``."""
    n = g.n_vertices
    if n > MAX_VERTICES:
        raise SpectralError(f"{n} vertices exceeds the dense limit of {MAX_VERTICES}")
    s = 1.0 / np.sqrt(g.m)
    sym = -(g.adjacency.toarray() * s[:, None]) * s[None, :]
    sym[np.diag_indices(n)] = g.Deg
    try:
        lam, vec = eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"eigensolver failed: {exc}") from None
    phi = vec * s[:, None]
    # graphs are connected: the ground state is exactly the constant function
    lam[0] = 0.0
    phi[:, 0] = 1.0 / math.sqrt(g.total_measure())
    for a in (lam, phi):
        a.setflags(write=False)
    return SpectralDecomposition(g=g, eigenvalues=lam, eigenfunctions=phi)


def heat_kernel(dec: SpectralDecomposition, t: float, x, y) -> float:
    return dec.heat_kernel(t, x, y)


def heat_evolve_ode(g: WeightedGraph, f, t: float, rtol: float = 1e-11,
                    atol: float = 1e-14) -> np.ndarray:
    """``P_t f`` by stiff integration of ``u' = -Lap u`` (Radau)."""
    if t < 0:
        raise SpectralError(f"negative time {t}")
    f = _vec(g, f).astype(float)
    if t == 0:
        return f.copy()
    n = g.n_vertices
    lap = sparse.diags(g.deg / g.m) - sparse.diags(1.0 / g.m) @ g.adjacency
    jac = (-lap).tocsc()
    sol = solve_ivp(lambda _, u: jac @ u, (0.0, t), f, method="Radau",
                    jac=jac, rtol=rtol, atol=atol)
    if not sol.success:
        raise SpectralError(f"integrator failed: {sol.message}")
    return sol.y[:, -1].reshape(n)


# -- sandwiched semigroups ------------------------------------------------


@dataclass(frozen=True, eq=False)
class OmegaContext:
    g: WeightedGraph
    omega: np.ndarray
    exp_plus: np.ndarray
    exp_minus: np.ndarray
    h: float


def omega_context(g: WeightedGraph, omega) -> OmegaContext:
    omega = _vec(g, omega)
    with np.errstate(over="ignore"):
        ep, em = np.exp(omega), np.exp(-omega)
    bad = np.flatnonzero(~(np.isfinite(ep) & np.isfinite(em) & (ep > 0) & (em > 0)))
    if bad.size:
        i = bad[0]
        raise SpectralError(f"exp(+-omega) overflows at vertex {g.ids[i]!r} (omega = {omega[i]!r})")
    return OmegaContext(g, omega, ep, em, _h(g, ep, em))


def _h(g: WeightedGraph, ep: np.ndarray, em: np.ndarray) -> float:
    u, v = g.edge_u, g.edge_v
    term = g.edge_b * np.abs((ep[u] - ep[v]) * (em[u] - em[v]))
    s = np.zeros(g.n_vertices)
    np.add.at(s, u, term)
    np.add.at(s, v, term)
    return float(np.max(s / g.m)) if g.n_edges else 0.0


def h_omega(g: WeightedGraph, omega) -> float:
    """``h(omega) = sup_x (1/m) sum_y b |grad e^omega . grad e^-omega|``."""
    return omega_context(g, omega).h


def sandwiched_semigroup(dec: SpectralDecomposition, omega, t: float, f) -> np.ndarray:
    """``P_t^omega f = e^omega P_t (e^-omega f)``."""
    ctx = omega if isinstance(omega, OmegaContext) else omega_context(dec.g, omega)
    f = _vec(dec.g, f)
    em = ctx.exp_minus if f.ndim == 1 else ctx.exp_minus[:, None]
    ep = ctx.exp_plus if f.ndim == 1 else ctx.exp_plus[:, None]
    return ep * dec.evolve(em * f, t)


def omega_laplacian_apply(g: WeightedGraph, omega, f) -> np.ndarray:
    """``Lap_omega f = e^omega Lap (e^-omega f)``."""
    ctx = omega if isinstance(omega, OmegaContext) else omega_context(g, omega)
    return ctx.exp_plus * laplacian_apply(g, ctx.exp_minus * _vec(g, f))


def omega_heat_residual(dec: SpectralDecomposition, omega, f, t: float,
                        step: float = 1e-4) -> float:
    """``|| d/dt P_t^omega f + Lap_omega P_t^omega f ||_2`` by centered differences."""
    if t - step < 0:
        raise SpectralError("time too small for a centered difference")
    ctx = omega if isinstance(omega, OmegaContext) else omega_context(dec.g, omega)
    fwd = sandwiched_semigroup(dec, ctx, t + step, f)
    bwd = sandwiched_semigroup(dec, ctx, t - step, f)
    mid = sandwiched_semigroup(dec, ctx, t, f)
    r = (fwd - bwd) / (2 * step) + omega_laplacian_apply(dec.g, ctx, mid)
    return float(np.sqrt(np.sum(dec.g.m * r * r)))


# -- entrywise-accurate kernels ----------------------------------------------

POSITIVE_LIMIT = 1024
SPECTRAL_RESOLUTION = 1e-6
_TAYLOR = 18


def log_kernel_positive(g: WeightedGraph, t: float) -> np.ndarray:
    """``log p_t(x, y)`` with small relative error in every entry.

    ``exp(-t Lap) = exp(-t c) exp(t (c - Lap))`` with ``c = max Deg`` makes the
    second factor an exponential of an entrywise nonnegative matrix; a Taylor
    series after scaling plus repeated squaring then never subtracts, so tiny
    tail entries keep their relative accuracy.  Entries below the double range
    relative to the largest one come out as ``-inf``.
    """
    if t < 0:
        raise SpectralError(f"negative time {t}")
    n = g.n_vertices
    if n > POSITIVE_LIMIT:
        raise SpectralError(f"{n} vertices exceeds the positive-route limit of {POSITIVE_LIMIT}")
    c = float(g.Deg.max()) if n else 0.0
    K = (g.adjacency.toarray() / g.m[:, None]) * t
    K[np.diag_indices(n)] = t * (c - g.Deg)
    norm = float(K.sum(axis=1).max())
    j = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    # the series must reach well past degree n - 1 so that long paths keep full relative accuracy
    while _TAYLOR * 2**j < 4 * n:
        j += 1
    X = K / 2.0**j
    F = np.eye(n)
    term = np.eye(n)
    for k in range(1, _TAYLOR + 1):
        term = term @ X / k
        F = F + term
    log_scale = 0.0
    for _ in range(j):
        F = F @ F
        mx = F.max()
        F /= mx
        log_scale = 2 * log_scale + math.log(mx)
    with np.errstate(divide="ignore"):
        out = np.log(F) + log_scale - t * c - np.log(g.m)[None, :]
    return 0.5 * (out + out.T)
