"""Report emission: one JSON document plus CSV tables.

Output is deterministic: keys are sorted, floats are written with ``repr``
precision and non-finite values as strings, so equal inputs and seeds give
byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .pipelines import Report


def report_json(report: Report) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_csv(path: Path, rows: list[dict]) -> None:
    fields: list[str] = []
    for row in rows:
        for k in row:
            if k not in fields:
                fields.append(k)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(row)


def emit_report(report: Report, out_dir: str | Path) -> list[Path]:
    """Write ``report.json``, ``certificates.csv``, ``constants.csv`` and one
    ``cert_<k>_<condition>.csv`` per certificate with one line per grid point.

    Gaussian certificates carry ``log_p`` and ``log_bound`` columns, which is
    the kernel-versus-bound profile.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    doc = report.to_dict()
    p = out / "report.json"
    p.write_text(report_json(report), encoding="utf-8")
    written.append(p)

    summary = []
    for k, cert in enumerate(doc["certificates"]):
        summary.append({"index": k, "condition": cert["condition"],
                        "tag": cert["params"].get("tag", ""), "points": cert["grid"]["points"],
                        "min_log_margin": cert["min_log_margin"], "pass": cert["pass"]})
    p = out / "certificates.csv"
    _write_csv(p, summary)
    written.append(p)

    p = out / "constants.csv"
    _write_csv(p, doc["constants"])
    written.append(p)

    for k, cert in enumerate(report.certificates):
        name = cert.condition.replace("-", "_")
        p = out / f"cert_{k}_{name}.csv"
        rows = [{key: _plain(v) for key, v in row.items()} for row in cert.rows]
        _write_csv(p, rows)
        written.append(p)
    return written


def _plain(v):
    if hasattr(v, "item"):
        v = v.item()
    return repr(v) if isinstance(v, float) else v
