"""Time integration of the fractional KdV and fractional NLS equations.

FKdV:  u_t + d/dx [D^{2s} u + W'(u)] = 0          (integrating-factor RK4)
FNS:   i psi_t = 1/2 D^{2s} psi + 1/2 W'(psi)     (Strang splitting)
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .functionals import Nonlinearity, charge_fkdv, charge_fns, energy, parse_nonlinearity, tail_mass
from .spectral import Field, Grid, derivative_x, fractional_derivative, inner

log = logging.getLogger(__name__)

__all__ = [
    "BlowUpError",
    "BoxTooSmallWarning",
    "EvolutionConfig",
    "EvolutionTrace",
    "FkdvStepper",
    "FnsStepper",
    "step_fkdv",
    "step_fns",
    "run",
    "dt_ceiling",
    "weak_residual",
]

Family = Literal["fkdv", "fns"]

BLOWUP_FACTOR = 1e6
TAIL_WARNING = 1e-4


class BlowUpError(RuntimeError):
    """Raised when the solution stops being finite or jumps in norm.

    ``state`` holds the last finite field and ``time`` its time.
    """

    def __init__(self, message: str, state: Field, time: float = float("nan"), trace=None):
        super().__init__(message)
        self.state = state
        self.time = time
        self.trace = trace


class BoxTooSmallWarning(UserWarning):
    pass


class FkdvStepper:
    """Integrating-factor RK4 for FKdV acting on spectra.

    Real fields are advanced with the real FFT; complex fields (used for
    linear checks) with the full FFT. The dispersive flow exp(-i xi |xi|^2s t)
    is applied exactly.
    """

    def __init__(self, grid: Grid, s: float, W: Nonlinearity, dt: float,
                 dealias: bool | None = None, real: bool = True):
        self.grid, self.s, self.W, self.dt, self.real = grid, s, W, float(dt), real
        n = grid.n
        if real:
            modes = np.arange(n // 2 + 1)
            self._fwd = np.fft.rfft
            self._inv = lambda h: np.fft.irfft(h, n)
        else:
            modes = grid.modes
            self._fwd, self._inv = np.fft.fft, np.fft.ifft
        xi = grid.dk * modes
        odd = 1j * xi
        odd[np.abs(modes) == n // 2] = 0.0
        self._ik = odd
        lin = -odd * np.abs(xi) ** (2 * s)
        self._e_half = np.exp(lin * self.dt / 2)
        self._e_full = self._e_half**2
        if dealias is None:
            dealias = W.polynomial
        self._mask = (3 * np.abs(modes) < n) if dealias else None
        self._linear_only = W.key == "zero"

    def nonlinear(self, uh: np.ndarray) -> np.ndarray:
        if self._linear_only:
            return np.zeros_like(uh)
        if self._mask is not None:
            uh = uh * self._mask
        fh = self._fwd(self.W.force(self._inv(uh)))
        if self._mask is not None:
            fh *= self._mask
        return -self._ik * fh

    def step(self, uh: np.ndarray) -> np.ndarray:
        dt, E, E2 = self.dt, self._e_half, self._e_full
        k1 = self.nonlinear(uh)
        k2 = self.nonlinear(E * (uh + 0.5 * dt * k1))
        k3 = self.nonlinear(E * uh + 0.5 * dt * k2)
        k4 = self.nonlinear(E2 * uh + dt * E * k3)
        return E2 * uh + dt / 6 * (E2 * k1 + 2 * E * (k2 + k3) + k4)

    def to_spectrum(self, u: Field) -> np.ndarray:
        return self._fwd(u.values)

    def to_field(self, uh: np.ndarray) -> Field:
        return Field(self.grid, self._inv(uh), real=self.real)


class FnsStepper:
    """Strang splitting for FNS: half nonlinear phase, full linear step, half phase.

    The nonlinear sub-flow keeps |psi| fixed, so its phase rotation is exact.
    Negative ``dt`` runs the scheme backwards.
    """

    def __init__(self, grid: Grid, s: float, W: Nonlinearity, dt: float):
        self.grid, self.s, self.W, self.dt = grid, s, W, float(dt)
        self._lin = np.exp(-0.5j * np.abs(grid.xi) ** (2 * s) * self.dt)
        self._limit = 2.0 * W.E0  # F'(r)/r as r -> 0

    def _phase(self, psi: np.ndarray, tau: float) -> np.ndarray:
        mod = np.abs(psi)
        rate = np.full(mod.shape, self._limit)
        nz = mod > 0
        rate[nz] = self.W.dW(mod[nz]) / mod[nz]
        return psi * np.exp(-0.5j * tau * rate)

    def step(self, psi: np.ndarray) -> np.ndarray:
        psi = self._phase(psi, self.dt / 2)
        psi = np.fft.ifft(self._lin * np.fft.fft(psi))
        return self._phase(psi, self.dt / 2)

    def to_spectrum(self, u: Field) -> np.ndarray:
        return np.asarray(u.values, dtype=np.complex128)

    def to_field(self, psi: np.ndarray) -> Field:
        return Field(self.grid, psi, real=False)


def _guard(before: float, new: np.ndarray, state: Field, time: float) -> None:
    if not np.all(np.isfinite(new)):
        raise BlowUpError(f"non-finite values at t={time:g}", state, time)
    after = float(np.sqrt(np.sum(np.abs(new) ** 2)))
    if before > 0 and after > BLOWUP_FACTOR * before:
        raise BlowUpError(f"norm grew by {after / before:.3g} in one step at t={time:g}", state, time)


def step_fkdv(u: Field, dt: float, s: float, W: Nonlinearity | str, dealias: bool | None = None) -> Field:
    if dt <= 0:
        raise ValueError(f"time step must be positive, got {dt}")
    stepper = FkdvStepper(u.grid, s, parse_nonlinearity(W), dt, dealias=dealias, real=u.real)
    uh = stepper.step(stepper.to_spectrum(u))
    _guard(float(np.sqrt(np.sum(np.abs(u.values) ** 2))), uh, u, dt)
    return stepper.to_field(uh)


def step_fns(psi: Field, dt: float, s: float, W: Nonlinearity | str) -> Field:
    if dt == 0:
        raise ValueError("time step must be nonzero")
    stepper = FnsStepper(psi.grid, s, parse_nonlinearity(W), dt)
    new = stepper.step(stepper.to_spectrum(psi))
    _guard(float(np.sqrt(np.sum(np.abs(psi.values) ** 2))), new, psi, dt)
    return stepper.to_field(new)


def dt_ceiling(u: Field, W: Nonlinearity) -> float:
    """Advisory bound 1 / max |W''| over the amplitude range of u."""
    amp = float(np.max(np.abs(u.values))) if u.grid.n else 0.0
    r = np.linspace(-amp, amp, 201)
    curv = float(np.max(np.abs(W.curvature(r))))
    return np.inf if curv == 0 else 1.0 / curv


@dataclass
class EvolutionConfig:
    family: Family
    s: float
    nonlinearity: Nonlinearity | str
    grid: Grid
    dt: float
    t_end: float
    snapshot_stride: int = 100
    dealias: bool | None = None
    keep_snapshots: bool = False

    def __post_init__(self):
        if self.family not in ("fkdv", "fns"):
            raise ValueError(f"family must be 'fkdv' or 'fns', got {self.family!r}")
        if not self.s >= 0.5:
            raise ValueError(f"s must be >= 1/2, got {self.s}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if int(self.snapshot_stride) < 1:
            raise ValueError("snapshot_stride must be a positive integer")
        self.nonlinearity = parse_nonlinearity(self.nonlinearity)

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class EvolutionTrace:
    times: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    charge: list = field(default_factory=list)
    tail_mass: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    final: Field | None = None
    dt_ceiling: float = float("inf")

    def _drift(self, series) -> float:
        a = np.asarray(series, dtype=float)
        if a.size == 0:
            return 0.0
        ref = abs(a[0])
        dev = float(np.max(np.abs(a - a[0])))
        return dev / ref if ref > 0 else dev

    @property
    def energy_drift(self) -> float:
        return self._drift(self.energy)

    @property
    def charge_drift(self) -> float:
        return self._drift(self.charge)

    def record(self, t: float, u: Field, s: float, W: Nonlinearity, family: Family, keep: bool) -> None:
        self.times.append(float(t))
        self.energy.append(energy(u, s, W))
        self.charge.append(charge_fkdv(u) if family == "fkdv" else charge_fns(u))
        self.tail_mass.append(tail_mass(u))
        if keep:
            self.snapshots.append((float(t), u))


def run(config: EvolutionConfig, u0: Field, callback=None) -> EvolutionTrace:
    """Evolve ``u0`` to ``config.t_end`` recording E, C and tail mass every stride.

    ``callback(t, field)`` is invoked at every recorded time. Blow-up raises
    :class:`BlowUpError` carrying the partial trace.
    """
    if u0.grid != config.grid:
        raise ValueError("initial field is not on the configured grid")
    W = config.nonlinearity
    if config.family == "fkdv":
        if not u0.real:
            raise ValueError("FKdV evolves real fields")
        stepper = FkdvStepper(u0.grid, config.s, W, config.dt, dealias=config.dealias)
    else:
        u0 = Field(u0.grid, u0.values, real=False)
        stepper = FnsStepper(u0.grid, config.s, W, config.dt)

    trace = EvolutionTrace(dt_ceiling=dt_ceiling(u0, W))
    if config.dt > trace.dt_ceiling:
        log.warning("dt=%g exceeds the advisory ceiling %g", config.dt, trace.dt_ceiling)

    state = stepper.to_spectrum(u0)
    u = u0
    stride = int(config.snapshot_stride)
    warned = False

    def _record(t, u):
        nonlocal warned
        trace.record(t, u, config.s, W, config.family, config.keep_snapshots)
        if callback is not None:
            callback(t, u)
        if not warned and trace.tail_mass[-1] > TAIL_WARNING:
            warnings.warn(f"tail mass {trace.tail_mass[-1]:.2e} at t={t:g}: box may be too small",
                          BoxTooSmallWarning, stacklevel=3)
            warned = True

    _record(0.0, u0)
    norm = float(np.sqrt(np.sum(np.abs(state) ** 2)))
    for n in range(1, config.steps + 1):
        new = stepper.step(state)
        t = n * config.dt
        try:
            if not np.all(np.isfinite(new)):
                raise BlowUpError(f"non-finite values at t={t:g}", stepper.to_field(state), t - config.dt)
            new_norm = float(np.sqrt(np.sum(np.abs(new) ** 2)))
            if norm > 0 and new_norm > BLOWUP_FACTOR * norm:
                raise BlowUpError(f"norm jump at t={t:g}", stepper.to_field(state), t - config.dt)
        except BlowUpError as exc:
            exc.trace = trace
            raise
        state, norm = new, new_norm
        if n % stride == 0 or n == config.steps:
            u = stepper.to_field(state)
            _record(t, u)
    trace.final = u
    return trace


def weak_residual(u_prev: Field, u: Field, u_next: Field, dt: float, s: float,
                  W: Nonlinearity, phi: Field) -> float:
    """Weak-form defect int [u_t phi - u d/dx D^{2s} phi - W'(u) d/dx phi] dx.

    u_t is the central difference (u_next - u_prev) / (2 dt); the value
    vanishes to second order in dt along an FKdV solution.
    """
    ut = (u_next - u_prev) / (2 * dt)
    dphi = derivative_x(phi)
    force = Field(u.grid, W.force(u.values))
    return inner(ut, phi) - inner(u, fractional_derivative(dphi, 2 * s)) - inner(force, dphi)
