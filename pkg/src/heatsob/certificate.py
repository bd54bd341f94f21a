"""Certificates: the record of one checked inequality.

A certificate holds one row per declared grid point.  Each row carries a
``margin`` (log right-hand side minus log left-hand side) plus whatever
coordinates identify the point.  The worst row is the witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

PASS_TOL = 1e-9


def _clean(v: Any) -> Any:
    if isinstance(v, float):
        return v if math.isfinite(v) else str(v)
    if hasattr(v, "item") and not isinstance(v, (list, dict, str)):
        return _clean(v.item())
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


@dataclass
class Certificate:
    condition: str
    params: dict
    grid: dict
    rows: list[dict] = field(default_factory=list, repr=False)
    flags: list[str] = field(default_factory=list)
    reevaluate: Callable[[dict], float] | None = field(default=None, repr=False, compare=False)

    @property
    def n_points(self) -> int:
        return len(self.rows)

    @property
    def witness(self) -> dict | None:
        if not self.rows:
            return None
        return min(self.rows, key=lambda row: row["margin"])

    @property
    def min_log_margin(self) -> float | None:
        w = self.witness
        return None if w is None else float(w["margin"])

    @property
    def passed(self) -> bool:
        m = self.min_log_margin
        return m is None or m >= -PASS_TOL

    def witness_error(self) -> float:
        """``|reevaluated margin - stored margin|`` at the witness."""
        w = self.witness
        if w is None or self.reevaluate is None:
            return 0.0
        again = self.reevaluate(w)
        if math.isinf(again) and again == w["margin"]:
            return 0.0
        return abs(again - w["margin"])

    def to_dict(self) -> dict:
        grid = dict(self.grid)
        grid["points"] = self.n_points
        flags = sorted(set(self.flags))
        if not self.rows:
            flags.append("vacuous: no grid points")
        return _clean({
            "condition": self.condition,
            "params": self.params,
            "grid": grid,
            "min_log_margin": self.min_log_margin,
            "witness": self.witness,
            "pass": self.passed,
            "flags": flags,
        })

    def summary(self) -> str:
        m = self.min_log_margin
        status = "PASS" if self.passed else "FAIL"
        ms = "n/a" if m is None else f"{m:.6g}"
        return f"{status} {self.condition} points={self.n_points} min_log_margin={ms}"
