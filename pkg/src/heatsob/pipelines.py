"""End-to-end workflows: Sobolev constants to (L), (V), (G) and back.

Each run measures or accepts a Sobolev constant, forms the correction
functions of its case, emits certificates, and in the reverse direction
compares measured optimal Sobolev constants with the constant predicted from
(L), (V), (G).  Radius guards are checked before any expensive computation;
with ``relaxed_guards`` a violated guard is recorded instead and the report is
watermarked ``non-theorem regime``.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np

from .certificate import Certificate
from .checkers import (
    CheckError, check_gaussian, check_local_regularity, check_volume_doubling,
    geometric_grid, inv_measure_sup,
)
from .corrections import (
    CorrectionProfile, Dimension, Flags, GuardError, counting_log_Phi, counting_log_Psi,
    log_A_counting, log_normalized_doubling, log_phi_gamma, log_phi_on_diagonal, log_phi_prime,
    n_gamma, variable_dimension_counting,
)
from .generators import generate_family
from .graph import MeasureMode, WeightedGraph
from .io import load_graph, load_metric
from .metric import MetricStructure, build_metric
from .sobolev import Budget, SobolevProblem, minimal_sobolev_constant, sobolev_ratio
from .spectral import SpectralDecomposition, decompose

WATERMARK = "non-theorem regime"
TRANSITIVE_FAMILIES = ("cycle_",)


@dataclass
class PipelineConfig:
    graph: str = "cycle_64"
    measure: str = "counting"
    metric: str = "default"
    r1: float = 1.0
    r2: float = 4.0
    n: Any = 3.0  # constant or {"radii": [...], "values": [...]}
    phi: float | None = None  # None: measure phi* and round up
    gamma: Any = "theorem"  # "theorem" or an explicit positive constant
    tgrid_density: int = 64
    t_max_factor: float = 16.0  # grid runs up to t_max_factor * R2^2
    budget: int = 32
    max_iter: int = 3000
    tolerance: float = 1e-12
    seed: int = 0
    relaxed_guards: bool = False
    centers: Any = None  # None (automatic), "all", or a list of vertex ids
    max_centers: int = 8
    origin: str | None = None
    reverse_radii: list | None = None
    out: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown configuration keys: {sorted(extra)}")
        return cls(**d)

    def dimension(self) -> Dimension:
        if isinstance(self.n, dict):
            return Dimension.steps(self.n["radii"], self.n["values"])
        return Dimension(float(self.n))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Report:
    metadata: dict
    certificates: list[Certificate] = field(default_factory=list)
    constants: list[dict] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    elapsed: float = field(default=0.0, compare=False)  # wall clock, kept out of the JSON

    @property
    def watermark(self) -> str | None:
        return WATERMARK if any(f.startswith("guard:") for f in self.flags) else None

    @property
    def summary(self) -> str:
        if not self.certificates:
            return "vacuous"
        return "pass" if all(c.passed for c in self.certificates) else "fail"

    def certificate(self, condition: str, tag: str | None = None) -> Certificate | None:
        for c in self.certificates:
            if c.condition == condition and (tag is None or c.params.get("tag") == tag):
                return c
        return None

    def add_constant(self, name: str, log_value: float, formula: str, x=None, r=None) -> None:
        self.constants.append({"name": name, "x": x, "r": r, "log_value": float(log_value),
                               "formula": formula})

    def to_dict(self) -> dict:
        from .certificate import _clean
        return _clean({
            "metadata": self.metadata,
            "summary": self.summary,
            "watermark": self.watermark,
            "flags": sorted(set(self.flags)),
            "certificates": [c.to_dict() for c in self.certificates],
            "constants": self.constants,
        })


# -- shared setup ----------------------------------------------------------------


@dataclass
class Setup:
    config: PipelineConfig
    g: WeightedGraph
    metric: MetricStructure
    transitive: bool
    centers: list[int]
    flags: Flags
    _dec: SpectralDecomposition | None = None

    @property
    def dec(self) -> SpectralDecomposition:
        if self._dec is None:
            self._dec = decompose(self.g)
        return self._dec

    @property
    def origin(self) -> int:
        c = self.config
        return self.g.idx(c.origin) if c.origin is not None else self.centers[0]

    def guard(self, ok: bool, what: str) -> None:
        self.flags.guard(ok, what)


def load_setup(config: PipelineConfig) -> Setup:
    mode = MeasureMode.parse(config.measure)
    if os.path.exists(config.graph):
        g = load_graph(config.graph)
        if g.mode != mode:
            raise ValueError(f"graph file declares measure {g.mode.value!r}, "
                             f"configuration asks for {mode.value!r}")
        transitive = False
    else:
        g = generate_family(config.graph, mode)
        transitive = config.graph.startswith(TRANSITIVE_FAMILIES)
    if config.metric in ("default", "combinatorial"):
        metric = build_metric(g, config.metric)
    else:
        metric = build_metric(g, load_metric(g, config.metric))
    centers = _choose_centers(g, metric, config, transitive)
    return Setup(config, g, metric, transitive, centers, Flags(relaxed=config.relaxed_guards))


def _choose_centers(g: WeightedGraph, metric: MetricStructure, config: PipelineConfig,
                    transitive: bool) -> list[int]:
    if config.centers == "all":
        return list(range(g.n_vertices))
    if isinstance(config.centers, (list, tuple)):
        return [g.idx(v) for v in config.centers]
    if config.origin is not None:
        o = g.idx(config.origin)
    else:
        # a most central vertex: smallest eccentricity, first in id order
        o = int(np.argmin(metric.dist.max(axis=1)))
    if transitive:
        return [o]
    rng = np.random.default_rng(config.seed)
    near = [int(i) for i in metric.ball(o, config.r2) if i != o]
    k = min(len(near), max(0, config.max_centers - 1))
    chosen = sorted(rng.choice(near, size=k, replace=False).tolist()) if k else []
    return [o] + chosen


def _sample_radii(lo: float, hi: float) -> list[float]:
    """``lo * 2^(k/2)`` up to ``hi``, plus ``hi``."""
    out, k = [], 0
    while True:
        r = lo * 2 ** (k / 2)
        if r >= hi * (1 - 1e-12):
            break
        out.append(r)
        k += 1
    out.append(hi)
    return out


def _budget(config: PipelineConfig) -> Budget:
    return Budget(restarts=config.budget, max_iter=config.max_iter, tol=config.tolerance,
                  seed=config.seed)


def _forward_sobolev(st: Setup, report: Report, dim: Dimension) -> float:
    """Measure ``phi_star`` on the sampled balls, fix ``phi`` and emit the (S) certificate.

    ``phi`` is the configured value, or the largest measurement rounded up
    (and at least 1).
    """
    c = st.config
    radii = _sample_radii(c.r1, c.r2)
    found, measured = {}, []
    for i in st.centers:
        for r in radii:
            prob = SobolevProblem.from_ball(st.metric, i, r, dim(r))
            res = minimal_sobolev_constant(prob, _budget(c), metric=st.metric)
            found[(st.g.ids[i], r)] = (prob, res.u)
            measured.append((st.g.ids[i], r, dim(r), res))
            report.add_constant("phi_star", math.log(res.phi_star),
                                "optimal Sobolev ratio (multistart lower bound)",
                                x=st.g.ids[i], r=r)
    best = max(res.phi_star for *_, res in measured)
    phi = float(c.phi) if c.phi is not None else max(1.0, float(math.ceil(best)))
    report.add_constant("phi", math.log(phi),
                        "configured" if c.phi is not None else "ceil(max phi_star) v 1")
    rows = [{"x": x, "r": r, "n": n_r, "phi_star": res.phi_star, "stationary": res.stationary,
             "margin": math.log(phi) - math.log(res.phi_star)} for x, r, n_r, res in measured]

    def again(w: dict) -> float:
        return math.log(phi) - math.log(sobolev_ratio(*found[(w["x"], w["r"])]))

    report.certificates.append(Certificate(
        "S", {"tag": "forward", "phi": phi, "dimension": dim.describe(),
              "restarts": c.budget, "seed": c.seed,
              "certification": "heuristic-multistart (lower bound on the optimum)"},
        {"kind": "balls", "radii": radii}, rows, reevaluate=again))
    return phi


def _reverse_certificate(st: Setup, o: int, entries: list[tuple[float, float, float]],
                         tag: str) -> Certificate:
    """Measured ``phi_star(n_r, o, r) <= phi_r`` for ``(r, n_r, log phi_r)`` entries."""
    c = st.config
    rows, found = [], {}
    for r, n_r, log_phi in entries:
        prob = SobolevProblem.from_ball(st.metric, o, r, n_r)
        res = minimal_sobolev_constant(prob, _budget(c), metric=st.metric)
        found[r] = (prob, res.u, log_phi)
        rows.append({"x": st.g.ids[o], "r": r, "n": n_r, "phi_star": res.phi_star,
                     "log_phi": log_phi, "margin": log_phi - math.log(res.phi_star)})

    def again(w: dict) -> float:
        prob, u, log_phi = found[w["r"]]
        return log_phi - math.log(sobolev_ratio(prob, u))

    return Certificate("S", {"tag": tag, "o": st.g.ids[o],
                             "certification": "measured optimum vs predicted constant"},
                       {"kind": "sampled radii", "radii": [e[0] for e in entries]},
                       rows, reevaluate=again)


def _reverse_radii(c: PipelineConfig) -> list[float]:
    if c.reverse_radii:
        return [float(r) for r in c.reverse_radii]
    lo = 4 * c.r1
    if c.r2 < lo:
        raise GuardError(f"reverse radii need R2 >= 4 R1 (R1 = {c.r1:g}, R2 = {c.r2:g})")
    return sorted({lo, 0.5 * (lo + c.r2), float(c.r2)})


def _t_grid(c: PipelineConfig, lower_radius: float) -> np.ndarray:
    return geometric_grid(lower_radius**2, c.t_max_factor * c.r2**2, c.tgrid_density)


def _gaussian(st: Setup, dim: Dimension, log_Psi: Callable[[int, float], float],
              lower_radius: float) -> Certificate:
    c = st.config
    if st.transitive:
        center = st.centers[0]
        ys = None  # every vertex; by symmetry Psi_y equals Psi at the center
        psi = lambda i, tau: log_Psi(center, tau)  # noqa: E731
    else:
        ys = st.centers
        psi = log_Psi
    cert = check_gaussian(st.dec, st.metric, ys, dim, psi, lower_radius, c.r2,
                          _t_grid(c, lower_radius), centers=st.centers)
    return cert


def _finish(st: Setup, report: Report, started: float) -> Report:
    report.flags.extend(sorted(st.flags.items))
    for cert in report.certificates:
        if any(not math.isfinite(r["margin"]) and r["margin"] < 0 for r in cert.rows):
            report.flags.append(f"non-finite negative margin in {cert.condition}")
    report.elapsed = time.perf_counter() - started
    return report


def _metadata(st: Setup, pipeline: str) -> dict:
    c = st.config
    meta = {
        "pipeline": pipeline,
        "graph": c.graph,
        "measure": st.g.mode.value,
        "metric": c.metric if isinstance(c.metric, str) else "file",
        "vertices": st.g.n_vertices,
        "edges": st.g.n_edges,
        "diameter": st.metric.diameter,
        "S": st.metric.S,
        "config": c.to_dict(),
        "centers": [st.g.ids[i] for i in st.centers],
    }
    if st.transitive:
        meta["symmetry"] = "vertex-transitive family: one center suffices"
    return meta


# -- normalizing measure -------------------------------------------------------


def _normalizing_setup(config: PipelineConfig) -> Setup:
    st = load_setup(config)
    c = config
    if st.g.mode is not MeasureMode.NORMALIZING:
        raise GuardError("normalizing pipeline needs the normalizing measure m = deg")
    if c.metric != "combinatorial":
        raise GuardError("normalizing pipeline uses the combinatorial metric")
    if not isinstance(c.n, (int, float)):
        raise GuardError("normalizing pipeline needs a constant dimension")
    st.guard(c.r2 >= 8 * c.r1 >= 512, f"R2 >= 8 R1 >= 512 (R1 = {c.r1:g}, R2 = {c.r2:g})")
    st.guard(c.r2 <= st.metric.diameter / 2,
             f"R2 <= diam/2 (R2 = {c.r2:g}, diam = {st.metric.diameter:g})")
    return st


def _normalizing_forward(st: Setup, report: Report) -> tuple[float, Callable]:
    c = st.config
    n = float(c.n)
    dim = Dimension(n)
    phi = _forward_sobolev(st, report, dim)
    log_Phi = log_normalized_doubling(n, phi)
    report.add_constant("Phi", log_Phi, "2^(10 n^2) phi^(2n)")
    report.certificates.append(check_volume_doubling(
        st.metric, st.centers, n, lambda i, r1, r2: log_Phi, c.r1, c.r2))
    prof = CorrectionProfile(st.metric, n, phi=phi, relaxed=c.relaxed_guards)
    prof.flags = st.flags

    def log_Psi(i: int, tau: float) -> float:
        return prof.log_A_gauss(i, tau) + prof.log_Psi_gauss(i, tau)

    for tau in _sample_radii(4 * c.r1, c.r2):
        report.add_constant("Psi", log_Psi(st.centers[0], tau),
                            "2^(41n^3) phi^(2n^2) [(1+tau^2) M(tau)]^(3n q^kappa)",
                            x=st.g.ids[st.centers[0]], r=tau)
    report.certificates.append(_gaussian(st, dim, log_Psi, 4 * c.r1))
    mu = max(st.metric.ball_measure(i, c.r1) / st.g.deg[i] for i in st.centers)
    report.add_constant("mu", math.log(mu), "sup m(B_x(R1)) / deg(x) over the centers")
    return phi, log_Psi


def run_forward_normalizing(config: PipelineConfig) -> Report:
    started = time.perf_counter()
    st = _normalizing_setup(config)
    report = Report(_metadata(st, "forward-normalizing"))
    _normalizing_forward(st, report)
    return _finish(st, report, started)


def _sup_log(fn: Callable[[float], float], metric: MetricStructure, x: int, lo: float,
             hi: float) -> float:
    """Sup of a radius function over ``[lo, hi]``: breakpoints, left limits and
    a 64-per-decade geometric grid."""
    bp = metric.breakpoints(x)
    inner = bp[(bp > lo) & (bp <= hi)]
    pts = {lo, hi}
    pts.update(float(b) for b in inner)
    pts.update(float(np.nextafter(b, 0.0)) for b in inner if np.nextafter(b, 0.0) >= lo)
    if hi > lo:
        pts.update(float(t) for t in geometric_grid(lo, hi, 64))
    return max(fn(r) for r in sorted(pts))


def run_reverse_normalizing(config: PipelineConfig, forward: Report | None = None) -> Report:
    """Predicted Sobolev constant from (V), (G) against measured optima at ``o``.

    Without ``forward`` the forward run is executed first and its constants
    are consumed.
    """
    started = time.perf_counter()
    st = _normalizing_setup(config)
    c = config
    n = float(c.n)
    reverse_radii = _reverse_radii(c)
    report = Report(_metadata(st, "reverse-normalizing"))
    if forward is None:
        phi, log_Psi = _normalizing_forward(st, report)
    else:
        report.certificates.extend(forward.certificates)
        report.constants.extend(forward.constants)
        phi = math.exp(next(k["log_value"] for k in forward.constants if k["name"] == "phi"))
        prof = CorrectionProfile(st.metric, n, phi=phi, relaxed=c.relaxed_guards)
        log_Psi = lambda i, tau: prof.log_A_gauss(i, tau) + prof.log_Psi_gauss(i, tau)  # noqa: E731
    for cond in ("V", "G"):
        cert = report.certificate(cond)
        if cert is None or not cert.passed:
            raise CheckError(f"reverse run needs a passing {cond} certificate first")
    log_Phi = log_normalized_doubling(n, phi)
    o = st.origin
    entries = []
    for r in reverse_radii:
        st.guard(4 * c.r1 <= r <= c.r2, f"4 R1 <= r <= R2 (r = {r:g})")
        log_psi_sup = max(_sup_log(lambda t: log_Psi(i, t), st.metric, i, c.r1, r)
                          for i in st.centers)
        log_phi = log_phi_on_diagonal(n, log_psi_sup, log_Phi, c.r1, r,
                                      st.metric.ball_measure(o, r),
                                      inv_measure_sup(st.metric, o, r))
        report.add_constant("phi_reverse", log_phi,
                            "2^(44+2n/(n-2)) [Psi^10 Phi^10 v R1^n m(B(r)) ||1/m|| / r^n]^(2/n)",
                            x=st.g.ids[o], r=r)
        entries.append((r, n, log_phi))
    report.certificates.append(_reverse_certificate(st, o, entries, "reverse"))
    return _finish(st, report, started)


# -- counting measure ---------------------------------------------------------------


def run_counting(config: PipelineConfig) -> Report:
    started = time.perf_counter()
    st = load_setup(config)
    c = config
    if st.g.mode is not MeasureMode.COUNTING:
        raise GuardError("counting pipeline needs the counting measure m = 1")
    if not isinstance(c.n, (int, float)):
        raise GuardError("counting pipeline needs a constant dimension")
    S = st.metric.S
    st.guard(c.r2 >= 16 * c.r1 >= 2048 * S,
             f"R2 >= 16 R1 >= 2048 S (R1 = {c.r1:g}, R2 = {c.r2:g}, S = {S:g})")
    st.guard(c.r2 <= st.metric.diameter / 2,
             f"R2 <= diam/2 (R2 = {c.r2:g}, diam = {st.metric.diameter:g})")
    reverse_radii = _reverse_radii(c)
    n = float(c.n)
    dim = Dimension(n)
    report = Report(_metadata(st, "counting"))
    phi = _forward_sobolev(st, report, dim)
    report.certificates.append(check_local_regularity(st.metric, st.centers, n, phi, c.r1, c.r2))
    log_A = log_A_counting(n, phi)
    report.add_constant("A", log_A, "2^(43 n^3) phi^(8 n^2)")
    deg = st.g.deg

    def log_Phi(i: int, r1: float, r2: float) -> float:
        return log_A + counting_log_Phi(r1, deg[i], n, S, st.flags)

    def log_Psi(i: int, tau: float) -> float:
        return log_A + counting_log_Psi(tau, deg[i], n, S, st.flags)

    report.certificates.append(check_volume_doubling(st.metric, st.centers, n, log_Phi,
                                                     c.r1, c.r2))
    report.certificates.append(_gaussian(st, dim, log_Psi, 4 * c.r1))
    o = st.origin
    entries = []
    for r in reverse_radii:
        deg_sup = st.metric.max_over_ball(deg, o, r)
        vd = variable_dimension_counting(r, c.r1, n, S, deg_sup, relaxed=c.relaxed_guards)
        st.flags.items |= vd.flags
        if not c.relaxed_guards:
            for f in vd.flags:
                if f.startswith("guard:"):
                    raise GuardError(f)
        log_phi = log_phi_prime(n, phi)
        report.add_constant("n_prime", math.log(vd.n_prime),
                            "n [1 v nu ln(1 + r^2 ||deg||)]", x=st.g.ids[o], r=r)
        report.add_constant("r_prime", math.log(vd.r_prime), "r/4 or (ln r)^p / 4",
                            x=st.g.ids[o], r=r)
        report.add_constant("phi_prime", log_phi, "2^(796 n^2 + 2n/(n-2)) phi^(145 n)",
                            x=st.g.ids[o], r=r)
        entries.append((r, vd.n_prime, log_phi))
    report.certificates.append(_reverse_certificate(st, o, entries, "reverse"))
    return _finish(st, report, started)


# -- general locally regular case ----------------------------------------------------


def _parse_gamma(gamma) -> float | None:
    """``None`` for the theorem choice, else the natural log of an explicit constant."""
    if gamma in (None, "theorem"):
        return None
    try:
        val = float(gamma)
    except (TypeError, ValueError):
        raise ValueError(f"gamma must be 'theorem' or a positive number, got {gamma!r}") from None
    if not val > 0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    return math.log(val)


def run_general(config: PipelineConfig) -> Report:
    started = time.perf_counter()
    st = load_setup(config)
    c = config
    log_gamma = _parse_gamma(c.gamma)
    dim = c.dimension()
    st.guard(c.r2 >= 4 * c.r1 >= 0, f"R2 >= 4 R1 >= 0 (R1 = {c.r1:g}, R2 = {c.r2:g})")
    st.guard(c.r2 <= st.metric.diameter / 2,
             f"R2 <= diam/2 (R2 = {c.r2:g}, diam = {st.metric.diameter:g})")
    # forward jump guard 1024 ||s(r)||_B <= r on [4 R1, R2]; s is a right-continuous
    # step function, so the worst radii are 4 R1 and the breakpoints
    lo = 4 * c.r1
    for i in st.centers:
        bp = st.metric.breakpoints(i)
        for r in [lo] + [float(b) for b in bp if lo < b <= c.r2]:
            s = st.metric.jump_size(i, r)
            if 1024 * s > r:
                st.guard(False, f"1024 ||s(r)||_B <= r (r = {r:g}, s = {s:g} at {st.g.ids[i]})")
                break
    reverse_radii = _reverse_radii(c)
    report = Report(_metadata(st, "general"))
    phi = _forward_sobolev(st, report, dim)
    prof = CorrectionProfile(st.metric, dim, phi=phi, relaxed=c.relaxed_guards)
    prof.flags = st.flags
    report.certificates.append(check_local_regularity(
        st.metric, st.centers, Dimension.steps(*_N_table(dim, c.r1, c.r2)), phi, c.r1, c.r2))

    def log_Phi(i: int, r1: float, r2: float) -> float:
        return prof.log_A(i, r2) + prof.log_Phi(i, r1, r2)

    def log_Psi(i: int, tau: float) -> float:
        return prof.log_A(i, tau) + prof.log_Psi(i, tau)

    Ndim = Dimension.steps(*_N_table(dim, c.r1, c.r2 * 4))
    report.certificates.append(check_volume_doubling(st.metric, st.centers, Ndim, log_Phi,
                                                     c.r1, c.r2))
    report.certificates.append(_gaussian(st, Ndim, log_Psi, 4 * c.r1))

    o = st.origin
    entries = []
    for r in reverse_radii:
        s_sup = st.metric.jump_sup_over_ball(o, r, r / 4)
        st.guard(2 * s_sup <= r, f"2 ||s(r/4)||_B_o(r) <= r (r = {r:g}, sup = {s_sup:g})")
        vd = prof.variable_dimension(o, r, c.r1)
        NQ = prof.dim.sup(vd.r_prime / 4.0, r)
        if log_gamma is None:
            D, log_phi = vd.n_prime, log_phi_prime(NQ, phi)
            formula = "2^(796 N^2 + 2N/(N-2)) phi^(145 N)"
        else:
            ball = st.metric.ball(o, r)
            lt1 = 10 * max(_sup_log(lambda t: log_Psi(int(i), t), st.metric, int(i), vd.r_prime, r)
                           for i in ball)
            lt1 += 10 * max(_sup_log(lambda t: log_Phi(int(i), t, r), st.metric, int(i),
                                     vd.r_prime, r)
                            for i in ball)
            lt2 = math.log(st.metric.ball_measure(o, r)) + math.log(inv_measure_sup(st.metric, o, r))
            D = n_gamma(NQ, lt1, lt2, log_gamma, r, vd.r_prime)
            log_phi = log_phi_gamma(D, log_gamma, 49)
            formula = "2^(49 + 2D/(D-2)) gamma^(2/D), D = n^gamma(r)"
        xo = st.g.ids[o]
        report.add_constant("r_prime", math.log(vd.r_prime), "r/4 or (ln r)^p / 4", x=xo, r=r)
        report.add_constant("nu", math.log(vd.nu), "1/(2 ln(r/r')) + 54 N theta", x=xo, r=r)
        report.add_constant("n_prime", math.log(D), "Sobolev dimension at r", x=xo, r=r)
        report.add_constant("phi_prime", log_phi, formula, x=xo, r=r)
        entries.append((r, D, log_phi))
    report.certificates.append(_reverse_certificate(st, o, entries, "reverse"))
    return _finish(st, report, started)


def _N_table(dim: Dimension, lo: float, hi: float) -> tuple[list[float], list[float]]:
    """Step table of ``N(r) = sup n over [r/4, r]`` on ``[lo, hi]``.

    ``N`` changes only where ``r`` or ``r/4`` crosses a jump of ``n``.
    """
    if dim.const is not None:
        return [lo], [dim.const]
    jumps = sorted({float(x) for x in dim.radii} | {4 * float(x) for x in dim.radii})
    radii = [lo] + [j for j in jumps if lo < j <= hi]
    return radii, [dim.sup(r / 4, r) for r in radii]


PIPELINES = {
    "forward-normalizing": run_forward_normalizing,
    "reverse-normalizing": run_reverse_normalizing,
    "counting": run_counting,
    "general": run_general,
}
