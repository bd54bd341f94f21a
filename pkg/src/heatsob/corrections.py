"""Correction and dimension functions, evaluated as natural logarithms.

Every quantity here is positive, so it is represented by its natural log;
constants such as ``2^(41 N^3)`` overflow doubles long before they become
interesting.  Integer exponents of the form ``floor(1/2 log2 x)`` are computed
with a small upward nudge so that exact powers of four do not round down, and
arguments within ``1e-9`` of a jump are flagged.

Radius guards are enforced: a violated guard raises :class:`GuardError` unless
the profile is *relaxed*, in which case the formula is evaluated literally
(exponents may then be negative) and the violation is recorded in ``flags``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .metric import MetricStructure

LN2 = math.log(2.0)
FLOOR_NUDGE = 1e-12
FLOOR_WARN = 1e-9


class GuardError(ValueError):
    """A radius or parameter precondition of a formula does not hold."""


@dataclass
class Flags:
    """Collects guard violations and near-jump floor warnings."""

    relaxed: bool = False
    items: set = field(default_factory=set)
    counts: dict = field(default_factory=dict)

    def guard(self, ok: bool, what: str) -> None:
        """Raise, or in relaxed mode record the first violation of each guard
        (the text before the parenthesized values) and count the rest."""
        if ok:
            return
        if not self.relaxed:
            raise GuardError(f"guard violated: {what}")
        name = what.split(" (")[0]
        if name not in self.counts:
            self.items.add(f"guard: {what}")
        self.counts[name] = self.counts.get(name, 0) + 1

    def note(self, msg: str) -> None:
        self.items.add(msg)


def floor_half_log2(x: float, flags: Flags | None = None) -> int | float:
    """``floor(1/2 log2 x)`` with exact-integer semantics; ``inf`` for ``x = inf``."""
    if not x > 0:
        raise GuardError(f"floor(1/2 log2 x) needs x > 0, got {x!r}")
    if math.isinf(x):
        return math.inf
    v = 0.5 * math.log2(x)
    k = math.floor(v + FLOOR_NUDGE)
    if flags is not None and abs(v - round(v)) < FLOOR_WARN and v != round(v):
        flags.note(f"floor argument 1/2 log2({x!r}) within {FLOOR_WARN} of an integer")
    return k


def q_ratio(n: float) -> float:
    """``(n + 2) / (n + 4)``."""
    return (n + 2.0) / (n + 4.0)


def _check_n(n: float) -> None:
    if not n > 2:
        raise GuardError(f"dimension must exceed 2, got {n!r}")


def _pow_q(n: float, k) -> float:
    """``q(n)^k`` with ``q^inf = 0``."""
    return 0.0 if math.isinf(k) else q_ratio(n) ** k


# -- heat kernel profile ---------------------------------------------------


def _g(u):
    """``u asinh u - (sqrt(1+u^2) - 1)``, cancellation-safe."""
    u = np.asarray(u, dtype=float)
    small = u < 1e-3
    us = np.where(small, u, 0.0)
    series = us**2 / 2 - us**4 / 24 + us**6 / 80
    ul = np.where(small, 1.0, u)
    direct = ul * np.arcsinh(ul) - ul * ul / (np.sqrt(1 + ul * ul) + 1)
    return np.where(small, series, direct)


def _check_rt(r, t, S) -> None:
    if not S > 0:
        raise GuardError(f"jump size S must be positive, got {S!r}")
    if np.any(np.asarray(t) <= 0):
        raise GuardError("time must be positive")
    if np.any(np.asarray(r) < 0):
        raise GuardError("distance must be nonnegative")


def zeta(r, t, S: float = 1.0):
    """``(1/S^2)(r S asinh(r S / t) + t - sqrt(t^2 + r^2 S^2))``."""
    _check_rt(r, t, S)
    t = np.asarray(t, dtype=float)
    u = np.asarray(r, dtype=float) * S / t
    out = t / S**2 * _g(u)
    return float(out) if out.ndim == 0 else out


def nu(r, t, S: float = 1.0):
    """``2 S^-2 (sqrt(1 + r^2 S^2 / t^2) - 1)``."""
    _check_rt(r, t, S)
    u = np.asarray(r, dtype=float) * S / np.asarray(t, dtype=float)
    out = 2.0 / S**2 * u * u / (np.sqrt(1 + u * u) + 1)
    return float(out) if out.ndim == 0 else out


def log_offdiag_factor(r, t, S: float = 1.0):
    """``log(1 v S^-2 (sqrt(t^2 + r^2 S^2) - t))``."""
    _check_rt(r, t, S)
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    val = r * r / (np.sqrt(t * t + (r * S) ** 2) + t)
    out = np.log(np.maximum(1.0, val))
    return float(out) if out.ndim == 0 else out


# -- dimension functions ---------------------------------------------------


class Dimension:
    """Dimension function of the radius: a constant or a right-continuous step table.

    ``Dimension(3.0)`` or ``Dimension.steps([r0, r1, ...], [v0, v1, ...])`` where
    ``v_i`` holds on ``[r_i, r_{i+1})`` (and ``v0`` below ``r0``).
    """

    def __init__(self, value: float, radii: Sequence[float] | None = None,
                 values: Sequence[float] | None = None):
        self.const = float(value) if radii is None else None
        self.radii = None if radii is None else np.asarray(radii, dtype=float)
        self.values = None if values is None else np.asarray(values, dtype=float)
        vals = [self.const] if self.values is None else list(self.values)
        for v in vals:
            _check_n(v)

    @classmethod
    def steps(cls, radii, values) -> "Dimension":
        if len(radii) != len(values) or len(radii) == 0:
            raise ValueError("step table needs equal, nonzero numbers of radii and values")
        return cls(0.0, radii, values)

    def __call__(self, r: float) -> float:
        if self.const is not None:
            return self.const
        k = max(0, int(np.searchsorted(self.radii, r, side="right")) - 1)
        return float(self.values[k])

    def sup(self, a: float, b: float) -> float:
        """``sup_{[a,b]} n``, exact."""
        if self.const is not None:
            return self.const
        ka = max(0, int(np.searchsorted(self.radii, a, side="right")) - 1)
        kb = max(0, int(np.searchsorted(self.radii, b, side="right")) - 1)
        return float(self.values[ka:kb + 1].max())

    def describe(self) -> dict:
        if self.const is not None:
            return {"constant": self.const}
        return {"radii": self.radii.tolist(), "values": self.values.tolist()}


def as_dimension(n: "Dimension | float") -> Dimension:
    return n if isinstance(n, Dimension) else Dimension(float(n))


# -- counting-measure block --------------------------------------------------


@dataclass
class CountingCorrections:
    kappa: int | float
    theta: float
    log_Phi: float
    log_Psi: float
    kappa_psi: int | float
    theta_psi: float


def counting_kappa(r: float, S: float, flags: Flags | None = None) -> int | float:
    """``floor(1/2 log2(r / 2S))``; needs ``r >= 2S``."""
    flags = flags or Flags()
    flags.guard(r >= 2 * S, f"r >= 2S (r = {r:g}, S = {S:g})")
    return floor_half_log2(r / (2 * S), flags)


def counting_theta(r: float, n: float, S: float, flags: Flags | None = None) -> float:
    _check_n(n)
    return _pow_q(n, counting_kappa(r, S, flags))


def counting_log_Phi(r: float, deg: float, n: float, S: float,
                     flags: Flags | None = None) -> float:
    """``log (1 + r^2 deg)^(3 n^2 theta(r))`` (independent of the outer radius)."""
    return 3 * n * n * counting_theta(r, n, S, flags) * math.log1p(r * r * deg)


def counting_log_Psi(r: float, deg: float, n: float, S: float,
                     flags: Flags | None = None) -> float:
    """``Psi(r) = Phi^r(r/16)``."""
    return counting_log_Phi(r / 16.0, deg, n, S, flags)


def counting_corrections(r: float, deg: float, n: float, S: float,
                         flags: Flags | None = None) -> CountingCorrections:
    flags = flags or Flags()
    _check_n(n)
    k = counting_kappa(r, S, flags)
    kp = counting_kappa(r / 16.0, S, flags)
    return CountingCorrections(
        kappa=k, theta=_pow_q(n, k),
        log_Phi=counting_log_Phi(r, deg, n, S, flags),
        log_Psi=counting_log_Psi(r, deg, n, S, flags),
        kappa_psi=kp, theta_psi=_pow_q(n, kp),
    )


def log_A_counting(n: float, phi: float) -> float:
    """``A(n, phi) = 2^(43 n^3) phi^(8 n^2)``."""
    return 43 * n**3 * LN2 + 8 * n * n * math.log(phi)


# -- variable dimension ------------------------------------------------------


def exponent_p(D: float) -> float:
    """``2 / ln(1 + 2/(D + 2))``, equal to ``2 / ln((D+4)/(D+2))``."""
    _check_n(D)
    return 2.0 / math.log1p(2.0 / (D + 2.0))


def r_prime(r: float, R1: float, p: float, flags: Flags | None = None) -> float:
    """``r/4`` below ``exp(4 v 4R1)``, ``(ln r)^p / 4`` from there on."""
    flags = flags or Flags()
    if r < 4 * R1:
        raise GuardError(f"guard violated: r >= 4 R1 (r = {r:g}, R1 = {R1:g})")
    if math.log(r) < max(4.0, 4.0 * R1):
        return r / 4.0
    rp = math.log(r) ** p / 4.0
    if 4 * rp > r:
        flags.note(f"r' = {rp:.6g} exceeds r/4 at r = {r:.6g}")
    return rp


@dataclass
class VariableDimension:
    r: float
    r_prime: float
    p: float
    nu: float
    n_prime: float
    theta: float
    flags: set


def variable_dimension_counting(r: float, R1: float, n: float, S: float,
                                deg_sup: float, relaxed: bool = True) -> VariableDimension:
    """Counting-measure ``n'_o(r) = n [1 v nu(r) ln(1 + r^2 ||deg||_{B_o(r)})]``.

    ``nu(r) = 1/(2 ln(r/r')) + 54 n theta^n(r')``; ``theta^n`` uses ``kappa(r')``.
    """
    flags = Flags(relaxed=relaxed)
    p = exponent_p(n)
    rp = r_prime(r, R1, p, flags)
    theta = counting_theta(rp, n, S, flags)
    nu_ = 0.5 / math.log(r / rp) + 54 * n * theta
    n_prime = n * max(1.0, nu_ * math.log1p(r * r * deg_sup))
    return VariableDimension(r, rp, p, nu_, n_prime, theta, flags.items)


def log_phi_gamma(D: float, log_gamma: float, base: int = 49) -> float:
    """``2^(base + 2D/(D-2)) gamma^(2/D)``; base 49 when the dimension varies
    with the radius, 47 for a single-radius dimension choice."""
    _check_n(D)
    return (base + 2 * D / (D - 2)) * LN2 + 2.0 / D * log_gamma


def n_gamma(N: float, log_T1: float, log_T2: float, log_gamma: float,
            r: float, rp: float) -> float:
    """Smallest admissible ``N v ln[1 v T1/gamma v (T2/gamma)^(1/ln(r/r'))]``."""
    inner = max(0.0, log_T1 - log_gamma, (log_T2 - log_gamma) / math.log(r / rp))
    return max(N, inner)


def log_gamma_theorem(N: float, phi: float) -> float:
    """``gamma = 2^(19N) A^9 phi^(N/2)`` with ``A = 2^(43N^3) phi^(8N^2)``."""
    return 19 * N * LN2 + 9 * log_A_counting(N, phi) + N / 2 * math.log(phi)


def log_phi_prime(N: float, phi: float) -> float:
    """``2^(796 N^2 + 2N/(N-2)) phi^(145 N)``."""
    _check_n(N)
    return (796 * N * N + 2 * N / (N - 2)) * LN2 + 145 * N * math.log(phi)


# -- reverse-direction Sobolev constants -----------------------------------


def log_semigroup_sobolev(n: float, log_C: float, r1: float, inv_m_sup: float) -> float:
    """``2^(8 + 2n/(n-2)) (C v r1^n ||1/m||)^(2/n)``."""
    _check_n(n)
    second = n * math.log(r1) + math.log(inv_m_sup) if r1 > 0 else -math.inf
    return (8 + 2 * n / (n - 2)) * LN2 + 2.0 / n * max(log_C, second)


def log_weak_sobolev_factor(n: float, log_C1: float, log_C2: float, r1: float,
                            inv_m_sup: float) -> float:
    """``12 C2^2 (C1 v r1^n ||1/m||)^(2/n)``."""
    second = n * math.log(r1) + math.log(inv_m_sup) if r1 > 0 else -math.inf
    return math.log(12.0) + 2 * log_C2 + 2.0 / n * max(log_C1, second)


def log_ball_comparison(d: float, log_Phi: float) -> float:
    """``2^(18 d) Phi^9``."""
    return 18 * d * LN2 + 9 * log_Phi


def log_phi_on_diagonal(n: float, log_Psi: float, log_Phi: float, r1: float, r: float,
                        ball_measure: float, inv_m_sup: float, base: int = 44) -> float:
    """``2^(44 + 2n/(n-2)) [Psi^10 Phi^10 v r1^n m(B(r)) ||1/m|| / r^n]^(2/n)``."""
    _check_n(n)
    first = 10 * (log_Psi + log_Phi)
    second = (n * (math.log(r1) - math.log(r)) + math.log(ball_measure) + math.log(inv_m_sup)
              if r1 > 0 else -math.inf)
    return (base + 2 * n / (n - 2)) * LN2 + 2.0 / n * max(first, second)


def log_normalized_doubling(n: float, phi: float) -> float:
    """``2^(10 n^2) phi^(2n)``."""
    return 10 * n * n * LN2 + 2 * n * math.log(phi)


# -- general block -----------------------------------------------------------


class CorrectionProfile:
    """Per-vertex correction functions over a metric, a dimension function and ``phi``.

    Vertex arguments are ids or dense indices.  All ``log_*`` methods return
    natural logarithms.
    """

    def __init__(self, metric: MetricStructure, n: Dimension | float = 3.0,
                 phi: float = 1.0, relaxed: bool = False):
        if not phi >= 1:
            raise GuardError(f"Sobolev constant phi must be >= 1, got {phi!r}")
        self.metric = metric
        self.g = metric.g
        self.dim = as_dimension(n)
        self.phi = float(phi)
        self.flags = Flags(relaxed=relaxed)

    @property
    def relaxed(self) -> bool:
        return self.flags.relaxed

    # basic accessors
    def Deg(self, x) -> float:
        return float(self.g.Deg[self.g.idx(x)])

    def log_D(self, x, r: float) -> float:
        """``log(1 + r^2 Deg_x)``."""
        return math.log1p(r * r * self.Deg(x))

    def log_M(self, x, r: float) -> float:
        """``log(m(B_x(r)) / m(x))``."""
        return math.log(self.metric.relative_ball_measure(x, r))

    def N(self, x, r: float) -> float:
        """``N_x(r) = ||n||_{[r/4, r]}``."""
        return self.dim.sup(r / 4.0, r)

    def _floor_ratio(self, r: float, denom: float, what: str) -> int | float:
        self.flags.guard(r >= denom, what)
        if denom == 0:
            return math.inf
        return floor_half_log2(r / denom, self.flags)

    # exponents
    def eta(self, x, r: float) -> int | float:
        """``floor(1/2 log2(r / (2 ||s_x||_{[r/2, r]})))``."""
        s = self.metric.annulus_jump_sup(x, r / 2.0, r)
        return self._floor_ratio(r, 2 * s, f"r >= 2||s_x||_[r/2,r] (x = {self._id(x)}, r = {r:g})")

    def eta_moser(self, x, r: float) -> int | float:
        """``floor(1/2 log2(r / (16 ||s_x||_{[r/2, r]})))``."""
        s = self.metric.annulus_jump_sup(x, r / 2.0, r)
        return self._floor_ratio(r, 16 * s, f"r >= 16||s_x||_[r/2,r] (x = {self._id(x)}, r = {r:g})")

    def eta_tilde(self, x, r: float) -> int | float:
        """``floor(1/2 log2(r / (2 s_x(r))))``."""
        s = self.metric.jump_size(x, r)
        return self._floor_ratio(r, 2 * s, f"r >= 2 s_x(r) (x = {self._id(x)}, r = {r:g})")

    def kappa_gauss(self, x, tau: float) -> int | float:
        """``floor(1/2 log2(tau / (32 ||s_x||_{[tau/4, tau]})))``."""
        s = self.metric.annulus_jump_sup(x, tau / 4.0, tau)
        return self._floor_ratio(tau, 32 * s,
                                 f"tau >= 32||s_x||_[tau/4,tau] (x = {self._id(x)}, tau = {tau:g})")

    def theta_N(self, x, r: float, R: float) -> float:
        return _pow_q(self.N(x, R), self.eta(x, r))

    def theta_tilde(self, x, r: float, R: float) -> float:
        return _pow_q(self.dim(R), self.eta_tilde(x, r))

    def Theta_gauss(self, x, tau: float) -> float:
        N = self.N(x, tau)
        return 3 * N * _pow_q(N, self.kappa_gauss(x, tau))

    # degree-based block (locally regular case)
    def log_Phi(self, x, r: float, R: float) -> float:
        """``log (1 + r^2 Deg_x)^(3 N(R)^2 theta^N(r, R))``."""
        N = self.N(x, R)
        return 3 * N * N * self.theta_N(x, r, R) * self.log_D(x, r)

    def log_Psi(self, x, r: float) -> float:
        """``Psi_x(r) = Phi_x^r(r/16)``."""
        return self.log_Phi(x, r / 16.0, r)

    def log_A(self, x, r: float) -> float:
        """``2^(43 N^3) phi^(8 N^2)``."""
        N = self.N(x, r)
        return 43 * N**3 * LN2 + 8 * N * N * math.log(self.phi)

    def log_A_prime(self, x, r: float) -> float:
        """``2^(41 N^3) phi^(2 N^2)``."""
        N = self.N(x, r)
        return 41 * N**3 * LN2 + 2 * N * N * math.log(self.phi)

    # measure-based block (general measure)
    def log_Phi_measure(self, x, r: float, R: float) -> float:
        """``log (r^N M_x(R) / R^N)^(theta^N(r, R))``."""
        N = self.N(x, R)
        return self.theta_N(x, r, R) * (N * math.log(r / R) + self.log_M(x, R))

    def log_Psi_measure(self, x, r: float) -> float:
        """``log [(1 + r^2 Deg) M_x(r)]^(3 N(r) theta^N(r/16, r))``."""
        N = self.N(x, r)
        return 3 * N * self.theta_N(x, r / 16.0, r) * (self.log_D(x, r) + self.log_M(x, r))

    # Gaussian bounds from Sobolev
    def log_Psi_gauss(self, x, tau: float) -> float:
        """``log [(1 + tau^2 Deg) M_x(tau)]^Theta(tau)``."""
        return self.Theta_gauss(x, tau) * (self.log_D(x, tau) + self.log_M(x, tau))

    def log_A_gauss(self, x, tau: float, phi_sup: float | None = None) -> float:
        """``2^(41 N^3) ||phi||^(2 N^2)``."""
        N = self.N(x, tau)
        ph = self.phi if phi_sup is None else phi_sup
        return 41 * N**3 * LN2 + 2 * N * N * math.log(ph)

    # volume doubling from Sobolev
    def log_Phi_doubling(self, x, r: float, R: float) -> float:
        """``log [r^n M_x(R) / R^n]^(theta~(r, R))`` with ``n = n(R)``."""
        n = self.dim(R)
        return self.theta_tilde(x, r, R) * (n * math.log(r / R) + self.log_M(x, R))

    def log_A_doubling(self, x, R: float) -> float:
        """``2^(6 n^2) phi^n``."""
        n = self.dim(R)
        return 6 * n * n * LN2 + n * math.log(self.phi)

    def log_A_doubling_prime(self, x, r: float) -> float:
        """``2^(7 n^2) phi^n``."""
        n = self.dim(r)
        return 7 * n * n * LN2 + n * math.log(self.phi)

    # mean value inequality
    def log_Gamma_tilde(self, x, rho: float, n: float, log_Phi_doubling: float,
                        phi: float | None = None) -> float:
        """``2^(62 n^2) (phi Phi)^n [(1 + rho^2 Deg) M_x(rho)]^(q^eta(2 rho) / 2)``."""
        ph = self.phi if phi is None else phi
        expo = 0.5 * _pow_q(n, self.eta_moser(x, 2 * rho))
        return (62 * n * n * LN2 + n * (math.log(ph) + log_Phi_doubling)
                + expo * (self.log_D(x, rho) + self.log_M(x, rho)))

    # variable dimension (general block)
    def variable_dimension(self, o, r: float, R1: float) -> VariableDimension:
        """``r', p, nu, n'`` at ``o``; suprema over ``Q_o(r) = B_o(r) x [r', r]``.

        The dimension function is vertex-independent, so ``||N||_Q`` reduces to
        the radius interval.
        """
        local = Flags(relaxed=self.relaxed)
        Nb = self.dim.sup(r / 4.0, r)
        p = exponent_p(Nb)
        rp = r_prime(r, R1, p, local)
        NQ = self.dim.sup(rp / 4.0, r)
        saved, self.flags = self.flags, local
        try:
            theta = _pow_q(NQ, self.eta(o, rp))
        finally:
            self.flags = saved
        self.flags.items |= local.items
        nu_ = 0.5 / math.log(r / rp) + 54 * NQ * theta
        deg_sup = self.metric.max_over_ball(self.g.Deg, o, r)
        n_prime = NQ * max(1.0, nu_ * math.log1p(r * r * deg_sup))
        return VariableDimension(r, rp, p, nu_, n_prime, theta, local.items)

    def _id(self, x) -> str:
        return self.g.ids[self.g.idx(x)]


def profile_rows(profile: CorrectionProfile, x, radii: Sequence[float],
                 quantities: dict[str, Callable[[float], float]]) -> list[tuple]:
    """Rows ``(quantity, x, r, R, log_value)`` for a profile dump; ``R = r``."""
    xid = profile.g.ids[profile.g.idx(x)]
    rows = []
    for name, fn in quantities.items():
        for r in radii:
            rows.append((name, xid, float(r), float(r), float(fn(r))))
    return rows
