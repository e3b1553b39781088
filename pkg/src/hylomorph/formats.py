"""Plain-text file formats: ``# key: value`` header lines, then a whitespace-delimited table.

Every file starts with ``# hylomorph <kind>`` and a ``# created:`` timestamp
line; the timestamp is the only line that differs between identical runs.
"""
from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import HylomorphyReport, StabilityReport
from .evolution import EvolutionTrace
from .soliton import SolitonSolution
from .spectral import Field, Grid

__all__ = [
    "Table",
    "write_table",
    "read_table",
    "write_trace",
    "write_snapshot",
    "read_snapshot",
    "write_solution",
    "read_solution",
    "write_stability_report",
    "write_hylomorphy_report",
    "write_gn_table",
]

_FMT = "%.17g"


@dataclass
class Table:
    kind: str
    header: dict
    columns: list
    data: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]


def _fmt_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return _FMT % v
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_fmt_value(x) for x in v)
    return str(v)


def _parse_value(text: str):
    text = text.strip()
    if text in ("true", "false"):
        return text == "true"
    parts = text.split()
    try:
        nums = [int(p) if p.lstrip("-").isdigit() else float(p) for p in parts]
    except ValueError:
        return text
    if len(nums) == 1:
        return nums[0]
    return nums


def write_table(path, kind: str, header: dict, columns, data, notes=()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.size and data.shape[1] != len(columns):
        raise ValueError("column count does not match data")
    stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    lines = [f"# hylomorph {kind}", f"# created: {stamp}"]
    lines += [f"# note: {n}" for n in notes]
    lines += [f"# {k}: {_fmt_value(v)}" for k, v in header.items()]
    lines.append("# columns: " + " ".join(columns))
    body = [" ".join(_FMT % x for x in row) for row in data] if data.size else []
    path.write_text("\n".join(lines + body) + "\n")
    return path


def read_table(path) -> Table:
    kind, header, columns, rows = "", {}, [], []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("hylomorph "):
                kind = body.split(None, 1)[1]
            elif ":" in body:
                key, val = body.split(":", 1)
                key = key.strip()
                if key == "columns":
                    columns = val.split()
                elif key not in ("created", "note"):
                    header[key] = _parse_value(val)
            continue
        rows.append([float(x) for x in line.split()])
    data = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    return Table(kind, header, columns, data)


def write_trace(path, trace: EvolutionTrace, meta: dict) -> Path:
    data = np.column_stack([trace.times, trace.energy, trace.charge, trace.tail_mass])
    header = dict(meta)
    header["energy_drift"] = float(trace.energy_drift)
    header["charge_drift"] = float(trace.charge_drift)
    notes = ["E = int(1/2 |D^s u|^2 + W(u)) dx; C per the charge convention; "
             "tail_mass = L^2 share in the outer 10% of the box"]
    return write_table(path, "trace", header, ["t", "E", "C", "tail_mass"], data, notes)


def write_snapshot(path, t: float, u: Field, meta: dict | None = None) -> Path:
    header = {"t": float(t), "L": u.grid.length, "N": u.grid.n}
    header.update(meta or {})
    vals = np.asarray(u.values)
    data = np.column_stack([u.x, vals.real, vals.imag if np.iscomplexobj(vals) else np.zeros_like(vals)])
    return write_table(path, "snapshot", header, ["x", "re", "im"], data)


def read_snapshot(path) -> tuple[float, Field]:
    tab = read_table(path)
    grid = Grid(tab.header["L"], tab.header["N"])
    im = tab.column("im")
    vals = tab.column("re") + 1j * im if np.any(im != 0) else tab.column("re")
    return float(tab.header["t"]), Field(grid, vals)


def write_solution(path, sol: SolitonSolution, extra: dict | None = None) -> Path:
    u = sol.profile
    header = {
        "s": float(sol.s),
        "nonlinearity": sol.nonlinearity,
        "convention": sol.convention,
        "multiplier": float(sol.multiplier),
        "charge": float(sol.charge),
        "energy": float(sol.energy),
        "residual": float(sol.residual_norm),
        "method": sol.method,
        "iterations": int(sol.iterations),
        "converged": bool(sol.converged),
        "L": u.grid.length,
        "N": u.grid.n,
    }
    header.update(extra or {})
    notes = ["stationary equation D^{2s}u + W'(u) = kappa*multiplier*u, kappa = 1 (fkdv) or 2 (fns)"]
    if u.real:
        return write_table(path, "solution", header, ["x", "u"], np.column_stack([u.x, u.values]), notes)
    return write_table(path, "solution", header, ["x", "re", "im"],
                       np.column_stack([u.x, u.values.real, u.values.imag]), notes)


def read_solution(path) -> SolitonSolution:
    tab = read_table(path)
    h = tab.header
    grid = Grid(h["L"], h["N"])
    vals = tab.column("u") if "u" in tab.columns else tab.column("re") + 1j * tab.column("im")
    return SolitonSolution(
        profile=Field(grid, vals), multiplier=float(h["multiplier"]), charge=float(h["charge"]),
        energy=float(h["energy"]), residual_norm=float(h["residual"]), method=str(h["method"]),
        iterations=int(h["iterations"]), convention=str(h["convention"]), s=float(h["s"]),
        nonlinearity=str(h["nonlinearity"]), converged=bool(h.get("converged", True)),
    )


def write_stability_report(path, rep: StabilityReport) -> Path:
    header = {
        "epsilon": rep.epsilon,
        "max_d": rep.max_d,
        "relative_max_d": rep.relative_max_d,
        "soliton_norm": rep.soliton_norm,
        "speed": rep.speed,
        "multiplier": rep.multiplier,
    }
    header.update(rep.meta)
    data = np.column_stack([rep.times, rep.distance, rep.shifts])
    return write_table(path, "stability", header, ["t", "d", "tau"], data,
                       ["d = translation-modded L^2 distance to the soliton; tau = fitted shift"])


def write_hylomorphy_report(path, rep: HylomorphyReport, meta: dict | None = None) -> Path:
    header = dict(meta or {})
    header.update({
        "E0": rep.E0,
        "limit": rep.limit,
        "intercept": rep.intercept,
        "intercept_err": rep.intercept_err,
        "slope": rep.slope,
        "fit_residual": rep.fit_residual,
        "verdict": rep.verdict,
    })
    data = np.column_stack([rep.R, rep.ratios, rep.seminorms])
    return write_table(path, "hylomorphy", header, ["R", "ratio", "seminorm_sq"], data,
                       ["ratio = E/C (fns convention) of the plateau bump; verdict = min ratio < E0 - intercept_err"])


def write_gn_table(path, rows) -> Path:
    data = np.array([[p, s, th, be, float(ok)] for p, s, th, be, ok in rows], dtype=float)
    return write_table(path, "gn_table", {}, ["p", "s", "theta", "beta", "admissible"], data)
