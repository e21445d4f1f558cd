"""CSV and metadata writers.

All CSV output is UTF-8 with ``\\n`` line endings and floats written with
``repr`` (shortest round-trip form, ``.`` decimal separator, no grouping),
so files are locale independent and byte-stable across runs.

Schemas (version 1):

* pools and oracle samples: ``level,index,value``
* ``constants.csv``: ``name,value``
* ``per_m.csv``: ``m,replications,mean_dpp,stderr,iid_mean_k,iid_stderr_k,bound,bound_stderr,dominated``
* ``iid_arm.csv``: ``m,level,mean_dpp,stderr``
* ``bounds.csv``: ``m,level,bound``
* ``rate.csv``: ``slope,intercept,r2``
* ``contraction.csv``: ``level,distance,previous,ratio`` (empty ratio = undefined)
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError

SCHEMA_VERSION = 1


def _f(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _open(path):
    return open(path, "w", encoding="utf-8", newline="")


def write_pool_csv(path, values, level):
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "index", "value"])
        for i, v in enumerate(np.asarray(values).tolist()):
            w.writerow([level, i, repr(v)])


def write_metadata(path, meta: dict):
    payload = {"schema_version": SCHEMA_VERSION, "code_version": __version__, **meta}
    with _open(path) as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def read_values(path) -> np.ndarray:
    """Read a single-column real CSV (optional header) or a pool file's ``value`` column."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    rows = [r for r in csv.reader(text.splitlines()) if r and any(c.strip() for c in r)]
    if not rows:
        raise ConfigError(f"{path}: no data")
    col = 0
    try:
        float(rows[0][0])
    except ValueError:
        header = [c.strip().lower() for c in rows[0]]
        if len(header) > 1:
            if "value" not in header:
                raise ConfigError(f"{path}: multi-column file without a 'value' column")
            col = header.index("value")
        rows = rows[1:]
    if col == 0 and any(len(r) != 1 for r in rows):
        raise ConfigError(f"{path}: expected exactly one column")
    try:
        vals = np.array([float(r[col]) for r in rows])
    except (ValueError, IndexError):
        raise ConfigError(f"{path}: non-numeric entry") from None
    if vals.size == 0:
        raise ConfigError(f"{path}: no data")
    if not np.all(np.isfinite(vals)):
        raise ConfigError(f"{path}: non-finite entry")
    return vals


def _table(path, header, rows):
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_f(x) if not isinstance(x, str) else x for x in r])


def write_report(report, outdir) -> list[str]:
    """Write a :class:`~sfpe.diagnostics.DiagnosticsReport` as CSV tables plus ``summary.txt``."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    c = report.constants
    _table(out / "constants.csv", ["name", "value"],
           [[k, v] for k, v in vars(c).items() if not isinstance(v, str)] + [["Hp_method", c.Hp_method]])
    _table(out / "per_m.csv",
           ["m", "replications", "mean_dpp", "stderr", "iid_mean_k", "iid_stderr_k",
            "bound", "bound_stderr", "dominated"],
           [[r.m, r.replications, r.mean_dpp, r.stderr, r.iid_mean[-1], r.iid_stderr[-1],
             r.bound, r.bound_stderr, r.dominated] for r in report.per_m])
    _table(out / "iid_arm.csv", ["m", "level", "mean_dpp", "stderr"],
           [[r.m, j, e, s] for r in report.per_m for j, (e, s) in enumerate(zip(r.iid_mean, r.iid_stderr))])
    _table(out / "bounds.csv", ["m", "level", "bound"], report.bound_values)
    files = ["constants.csv", "per_m.csv", "iid_arm.csv", "bounds.csv"]
    if report.fitted_rate is not None:
        _table(out / "rate.csv", ["slope", "intercept", "r2"], [report.fitted_rate])
        files.append("rate.csv")
    if report.contraction:
        _table(out / "contraction.csv", ["level", "distance", "previous", "ratio"],
               [[r.level, r.distance, r.previous, r.ratio] for r in report.contraction])
        files.append("contraction.csv")
    (out / "summary.txt").write_bytes(format_summary(report).encode("utf-8"))
    files.append("summary.txt")
    return files


def format_summary(report) -> str:
    c = report.constants
    p = c.p
    ptxt = str(int(p)) if float(p).is_integer() else repr(p)
    lines = [f"map: {report.params.get('map')}", f"branching: {report.params.get('spec')}",
             f"seed: {report.params.get('seed')}", "",
             f"H_{ptxt} = {c.Hp:.12g} ({c.Hp_method})",
             f"generic 2E[(sum phi(C))^p] = {c.Hp_generic:.12g}"]
    if c.rho_1 is not None:
        lines.append(f"rho_1 = {c.rho_1:.12g}, rho_{ptxt} = {c.rho_p:.12g}")
    lines.append(f"moment-bound A_p = {c.A_p_moment:.12g}")
    if c.c_p is not None:
        lines.append(f"c_p = {c.c_p:.12g}" + (f", A_p = {c.A_p:.12g}" if c.A_p is not None else ""))
    lines.append("")
    for r in report.per_m:
        lines.append(f"m = {r.m}: E[d_p^p] = {r.mean_dpp:.6g} +- {r.stderr:.3g}; "
                     f"bound = {r.bound:.6g} +- {r.bound_stderr:.3g}; "
                     f"{'PASS' if r.dominated else 'FAIL'} dominance")
    if report.fitted_rate is not None:
        s, _, r2 = report.fitted_rate
        lines.append(f"fitted slope = {s:.4f} (R^2 = {r2:.4f})")
    for name, ok in report.checks.items():
        lines.append(f"check {name}: {'PASS' if ok else 'FAIL'}")
    if report.contraction:
        lines.append("")
        undefined = [r.level for r in report.contraction if r.ratio is None]
        if undefined:
            lines.append(f"contraction ratios: DEGENERATE (undefined at levels {undefined})")
        h = c.Hp ** (1.0 / p)
        for r in report.contraction:
            rt = "undefined" if r.ratio is None else f"{r.ratio:.6g}"
            lines.append(f"level {r.level}: ratio = {rt} (H_p^(1/p) = {h:.6g})")
    return "\n".join(lines) + "\n"

