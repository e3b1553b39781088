"""Configuration-driven command line: ``hylomorph CONFIG [CONFIG ...] [--jobs N]``.

A config is a YAML (or JSON) mapping::

    command: evolve            # evolve | soliton | stability | diagnostics
    output: out/bo_demo        # relative to the config file
    seed: 0
    grid: {L: 400, N: 4096}
    family: fkdv               # fkdv | fns
    s: 0.5
    nonlinearity: bo           # catalog key, e.g. "power(3, -1)" or "table(w.txt)"
    evolve: {dt: 0.001, t_end: 10, stride: 1000, initial: {type: bo_soliton, lambda: -1}}

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from . import formats
from .analysis import gn_exponents, hylomorphy_scan, orbital_stability_experiment
from .evolution import BlowUpError, EvolutionConfig, run
from .functionals import parse_nonlinearity
from .soliton import (
    ConvergenceError,
    exact_bo_soliton,
    find_soliton_gradient_flow,
    gpe_soliton,
    kdv_soliton,
    petviashvili,
)
from .spectral import Field, Grid

log = logging.getLogger("hylomorph")

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2
COMMANDS = ("evolve", "soliton", "stability", "diagnostics")


class ConfigError(ValueError):
    pass


def _need(block: dict, key: str, where: str):
    if not isinstance(block, dict) or key not in block:
        raise ConfigError(f"missing required key '{key}' in {where}")
    return block[key]


def _num(block: dict, key: str, where: str, default=None, positive=False) -> float:
    val = block.get(key, default) if isinstance(block, dict) else default
    if val is None:
        raise ConfigError(f"missing required key '{key}' in {where}")
    try:
        val = float(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key} must be a number, got {val!r}") from None
    if positive and not val > 0:
        raise ConfigError(f"{where}.{key} must be positive, got {val:g}")
    return val


class RunConfig:
    """Validated view of a config mapping."""

    def __init__(self, raw: dict, base: Path):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping")
        self.raw, self.base = raw, base
        self.command = raw.get("command")
        if self.command not in COMMANDS:
            raise ConfigError(f"command must be one of {', '.join(COMMANDS)}, got {self.command!r}")
        self.output = base / str(raw.get("output", "out"))
        self.seed = int(raw.get("seed", 0))
        self.s = _num(raw, "s", "config", default=0.5)
        if self.s < 0.5:
            raise ConfigError(f"s must be >= 1/2, got {self.s:g}")
        self.family = raw.get("family", "fkdv")
        if self.family not in ("fkdv", "fns"):
            raise ConfigError(f"family must be fkdv or fns, got {self.family!r}")
        self.convention = raw.get("convention", self.family)
        g = raw.get("grid")
        self.grid = None
        if g is not None:
            try:
                self.grid = Grid(_num(g, "L", "grid", positive=True), int(_need(g, "N", "grid")))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad grid: {exc}") from None
        self.W = None
        if self.command != "stability" or "nonlinearity" in raw:
            self.W = self._nonlinearity(raw)

    def _nonlinearity(self, raw: dict):
        spec = raw.get("nonlinearity")
        if spec is None:
            raise ConfigError("missing required key 'nonlinearity'")
        if isinstance(spec, dict):
            name = _need(spec, "key", "nonlinearity")
            params = spec.get("params", [])
            spec = f"{name}({', '.join(str(p) for p in params)})" if params else str(name)
        spec = str(spec)
        if spec.strip().startswith("table(") and spec.strip().endswith(")"):
            path = spec.strip()[6:-1].strip().strip("'\"")
            spec = f"table({(self.base / path).resolve()})"
        try:
            return parse_nonlinearity(spec)
        except (ValueError, OSError) as exc:
            raise ConfigError(f"bad nonlinearity {spec!r}: {exc}") from None

    def block(self, name: str) -> dict:
        b = self.raw.get(name, {})
        if not isinstance(b, dict):
            raise ConfigError(f"'{name}' must be a mapping")
        return b

    def need_grid(self) -> Grid:
        if self.grid is None:
            raise ConfigError("missing required key 'grid'")
        return self.grid

    def meta(self) -> dict:
        return {"family": self.family, "s": self.s, "nonlinearity": self.W.key if self.W else "",
                "convention": self.convention, "seed": self.seed}


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    return RunConfig(raw, path.resolve().parent)


def initial_field(spec: dict, cfg: RunConfig) -> Field:
    """Build initial data from an ``initial`` block."""
    grid = cfg.need_grid()
    kind = _need(spec, "type", "initial")
    x0 = float(spec.get("x0", 0.0))
    if kind == "zero":
        u = Field(grid, np.zeros(grid.n))
    elif kind == "bo_soliton":
        u = exact_bo_soliton(_num(spec, "lambda", "initial"), grid, x0=x0, images=int(spec.get("images", 10)))
    elif kind == "kdv_soliton":
        u = kdv_soliton(_num(spec, "lambda", "initial"), grid, x0=x0)
    elif kind == "gpe_soliton":
        u = gpe_soliton(_num(spec, "omega", "initial"), grid, x0=x0)
    elif kind == "gaussian":
        amp = _num(spec, "amplitude", "initial", default=1.0)
        width = _num(spec, "width", "initial", default=1.0, positive=True)
        u = Field(grid, amp * np.exp(-(((grid.x - x0) / width) ** 2)))
    elif kind == "random":
        # band-limited noise, deterministic in the config seed
        rng = np.random.default_rng(cfg.seed)
        kmax = int(spec.get("kmax", grid.n // 8))
        amp = _num(spec, "amplitude", "initial", default=0.1)
        spec_h = np.zeros(grid.n, dtype=complex)
        band = (np.abs(grid.modes) <= kmax) & (grid.modes != 0)
        spec_h[band] = rng.standard_normal(band.sum()) + 1j * rng.standard_normal(band.sum())
        vals = np.fft.ifft(spec_h)
        vals = vals.real if cfg.family == "fkdv" else vals
        u = Field(grid, amp * vals / np.max(np.abs(vals)))
    elif kind in ("solution", "snapshot"):
        path = cfg.base / str(_need(spec, "path", "initial"))
        try:
            u = formats.read_solution(path).profile if kind == "solution" else formats.read_snapshot(path)[1]
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot load initial data from {path}: {exc}") from None
        if u.grid != grid:
            raise ConfigError(f"initial data in {path} lives on a different grid")
    else:
        raise ConfigError(f"unknown initial type {kind!r}")
    if cfg.family == "fns" and u.real:
        u = Field(grid, u.values, real=False)
    return u


def cmd_evolve(cfg: RunConfig) -> int:
    b = cfg.block("evolve")
    dt = _num(b, "dt", "evolve", positive=True)
    t_end = _num(b, "t_end", "evolve", positive=True)
    stride = int(b.get("stride", 100))
    if stride < 1:
        raise ConfigError("evolve.stride must be a positive integer")
    u0 = initial_field(_need(b, "initial", "evolve"), cfg)
    econf = EvolutionConfig(cfg.family, cfg.s, cfg.W, cfg.need_grid(), dt, t_end,
                            snapshot_stride=stride, dealias=b.get("dealias"), keep_snapshots=True)
    meta = cfg.meta() | {"dt": dt, "t_end": t_end, "L": econf.grid.length, "N": econf.grid.n}
    out = cfg.output
    try:
        trace = run(econf, u0)
    except BlowUpError as exc:
        log.error("blow-up: %s", exc)
        if exc.trace is not None:
            formats.write_trace(out / "trace.dat", exc.trace, meta | {"status": "blowup"})
        formats.write_snapshot(out / "blowup_state.dat", exc.time, exc.state, meta)
        return EXIT_NUMERICAL
    formats.write_trace(out / "trace.dat", trace, meta | {"status": "ok"})
    for k, (t, u) in enumerate(trace.snapshots):
        formats.write_snapshot(out / f"snapshot_{k:05d}.dat", t, u, meta)
    log.info("evolve: %d steps, charge drift %.3e, energy drift %.3e",
             econf.steps, trace.charge_drift, trace.energy_drift)
    return EXIT_OK


def _solve(cfg: RunConfig, b: dict):
    method = b.get("method", "petviashvili")
    grid = cfg.need_grid()
    tol = b.get("tol")
    if method == "petviashvili":
        lam = _num(b, "multiplier", "soliton")
        kw = {"tol": float(tol)} if tol is not None else {}
        return petviashvili(lam, cfg.s, cfg.W, grid, cfg.convention,
                            max_iter=int(b.get("max_iter", 5000)), **kw)
    if method == "gradient_flow":
        c = _num(b, "charge", "soliton", positive=True)
        init = initial_field(b["initial"], cfg) if "initial" in b else grid
        kw = {"tol": float(tol)} if tol is not None else {}
        return find_soliton_gradient_flow(c, cfg.s, cfg.W, cfg.convention, init,
                                          tau=float(b.get("tau", 0.5)),
                                          max_iter=int(b.get("max_iter", 20000)), **kw)
    raise ConfigError(f"soliton.method must be petviashvili or gradient_flow, got {method!r}")


def cmd_soliton(cfg: RunConfig) -> int:
    b = cfg.block("soliton")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            sol = _solve(cfg, b)
            status = EXIT_OK
        except ConvergenceError as exc:
            log.error("soliton: %s", exc)
            sol, status = exc.best, EXIT_NUMERICAL
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    notes = [str(w.message) for w in caught]
    for n in notes:
        log.warning("soliton: %s", n)
    if sol is not None:
        extra = {"status": "ok" if status == EXIT_OK else "not_converged", "seed": cfg.seed}
        if notes:
            extra["warning"] = "; ".join(notes)
        formats.write_solution(cfg.output / "solution.dat", sol, extra)
    return status


def cmd_stability(cfg: RunConfig) -> int:
    b = cfg.block("stability")
    path = cfg.base / str(_need(b, "solution", "stability"))
    try:
        sol = formats.read_solution(path)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot load solution {path}: {exc}") from None
    eps = _num(b, "epsilon", "stability", default=1e-2)
    if not 0 <= eps <= 0.1:
        raise ConfigError("stability.epsilon must lie in [0, 0.1]")
    try:
        rep = orbital_stability_experiment(
            sol, perturbation=cfg.seed, epsilon=eps,
            T=_num(b, "T", "stability", default=50.0, positive=True),
            dt=_num(b, "dt", "stability", default=5e-3, positive=True),
            stride=int(b.get("stride", 50)))
    except BlowUpError as exc:
        log.error("stability: %s", exc)
        return EXIT_NUMERICAL
    rep.meta["seed"] = cfg.seed
    formats.write_stability_report(cfg.output / "stability_report.dat", rep)
    return EXIT_OK


def cmd_diagnostics(cfg: RunConfig) -> int:
    b = cfg.block("diagnostics")
    if not b:
        raise ConfigError("diagnostics block must request 'hylomorphy' and/or 'gn_table'")
    if "hylomorphy" in b:
        h = b["hylomorphy"]
        R = _need(h, "R", "diagnostics.hylomorphy")
        try:
            rep = hylomorphy_scan(cfg.W, cfg.s, _num(h, "s0", "diagnostics.hylomorphy", positive=True),
                                  [float(r) for r in R], cfg.need_grid(), convention=cfg.convention)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        formats.write_hylomorphy_report(cfg.output / "hylomorphy_report.dat", rep,
                                        cfg.meta() | {"s0": float(h["s0"])})
    if "gn_table" in b:
        t = b["gn_table"]
        rows = []
        for p in _need(t, "p", "diagnostics.gn_table"):
            for s in _need(t, "s", "diagnostics.gn_table"):
                th, be, ok = gn_exponents(Fraction(str(p)), Fraction(str(s)))
                rows.append((float(p), float(s), float(th), float(be), ok))
        formats.write_gn_table(cfg.output / "gn_table.dat", rows)
    return EXIT_OK


_DISPATCH = {"evolve": cmd_evolve, "soliton": cmd_soliton,
             "stability": cmd_stability, "diagnostics": cmd_diagnostics}


def run_config(path: str | Path) -> int:
    """Load and execute one config file, returning its exit code."""
    try:
        cfg = load_config(path)
        return _DISPATCH[cfg.command](cfg)
    except (ConfigError, ValueError) as exc:
        print(f"hylomorph: configuration error in {path}: {exc}", file=sys.stderr)
        print(USAGE, file=sys.stderr)
        return EXIT_CONFIG


USAGE = "usage: hylomorph CONFIG [CONFIG ...] [--jobs N] [-v]"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="hylomorph", description="Construct, evolve and test hylomorphic solitons.")
    ap.add_argument("configs", nargs="+", metavar="CONFIG", help="YAML or JSON run configuration")
    ap.add_argument("--jobs", type=int, default=1, help="run independent configs concurrently")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs > 1 and len(args.configs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(run_config, args.configs))
    else:
        codes = [run_config(c) for c in args.configs]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
