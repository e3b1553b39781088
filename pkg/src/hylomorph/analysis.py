"""Orbital-stability experiments, hylomorphy diagnostics and exponent algebra."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evolution import EvolutionConfig, run
from .functionals import Nonlinearity, charge, energy, hylenic_ratio, parse_nonlinearity
from .soliton import SolitonSolution
from .spectral import Field, Grid, l2_norm, shift, sobolev_seminorm

__all__ = [
    "StabilityReport",
    "HylomorphyReport",
    "translation_distance",
    "random_perturbation",
    "orbital_stability_experiment",
    "smoothstep7",
    "bump_profile",
    "hylomorphy_scan",
    "gn_exponents",
    "coercivity_constant",
]


def _shift_phases(grid: Grid, tau: float) -> np.ndarray:
    ph = np.exp(-1j * grid.xi * tau)
    ny = grid.nyquist_index
    ph[ny] = np.cos(grid.xi[ny] * tau)
    return ph


def translation_distance(u: Field, v: Field, phase: bool = False) -> tuple[float, float]:
    """Return (tau, d) with d = min over tau of |u(. - tau) - v|_{L^2}.

    The grid shift maximizing the spectral cross-correlation is refined by
    a parabola through the peak, then polished by Newton steps on the
    spectrally interpolated correlation. With ``phase`` the distance is
    also minimized over a constant phase exp(i theta) multiplying u.
    """
    u._check(v)
    g = u.grid
    cross = u.spectrum * np.conj(v.spectrum) * (g.dx / g.n)
    corr = np.fft.fft(cross)
    score = np.abs(corr) if phase else corr.real
    j = int(np.argmax(score))
    a, b, c = score[j - 1], score[j], score[(j + 1) % g.n]
    denom = a - 2 * b + c
    frac = 0.5 * (a - c) / denom if denom < 0 else 0.0
    tau0 = (j + float(np.clip(frac, -0.5, 0.5))) * g.dx

    xi = g.xi.copy()
    ny = g.nyquist_index

    def derivs(tau):
        ph = _shift_phases(g, tau)
        d1 = -1j * xi * ph
        d1[ny] = -xi[ny] * np.sin(xi[ny] * tau)
        d2 = -(xi**2) * ph
        c0, c1, c2 = (np.sum(cross * w) for w in (ph, d1, d2))
        if phase:
            return 2 * (c1 * np.conj(c0)).real, 2 * ((c2 * np.conj(c0)).real + abs(c1) ** 2)
        return c1.real, c2.real

    tau = tau0
    for _ in range(20):
        f1, f2 = derivs(tau)
        if f2 >= 0:
            break
        step = f1 / f2
        if abs(tau - step - tau0) > g.dx:
            break
        tau -= step
        if abs(step) < 1e-15 * max(1.0, abs(tau)):
            break
    moved = shift(u, tau)
    if phase:
        cval = np.vdot(moved.values, v.values)
        moved = moved * (cval / abs(cval) if abs(cval) > 0 else 1.0)
    d = l2_norm(moved - v)
    tau = (tau + g.length / 2) % g.length - g.length / 2
    return tau, d


def random_perturbation(grid: Grid, seed: int, kmax: float = 2.0, width: float = 10.0,
                        complex_valued: bool = False) -> Field:
    """Smooth random field: band-limited noise (|xi| <= kmax) under a Gaussian envelope; unit L^2 norm."""
    rng = np.random.default_rng(seed)
    spec = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    spec[np.abs(grid.xi) > kmax] = 0.0
    vals = np.fft.ifft(spec)
    vals = vals if complex_valued else vals.real
    vals = vals * np.exp(-(grid.x / width) ** 2)
    f = Field(grid, vals, real=not complex_valued)
    return f / l2_norm(f)


@dataclass
class StabilityReport:
    epsilon: float
    times: np.ndarray
    distance: np.ndarray
    shifts: np.ndarray
    max_d: float
    soliton_norm: float
    speed: float
    multiplier: float
    meta: dict = field(default_factory=dict)

    @property
    def relative_max_d(self) -> float:
        return self.max_d / self.soliton_norm

    @property
    def speed_error(self) -> float:
        """Relative deviation of the fitted centre speed from the multiplier."""
        return abs(self.speed - self.multiplier) / abs(self.multiplier)


def orbital_stability_experiment(sol: SolitonSolution, perturbation: Field | int | None = 0,
                                 epsilon: float = 1e-2, T: float = 50.0, dt: float = 1e-2,
                                 stride: int = 50) -> StabilityReport:
    """Evolve a charge-normalized perturbation of ``sol`` and track the translation-modded distance.

    ``perturbation`` is a field or an integer seed for :func:`random_perturbation`.
    For fns solutions the distance is also taken modulo a constant phase and
    the centre speed is reported against zero.
    """
    if not 0 <= epsilon <= 0.1:
        raise ValueError("epsilon must lie in [0, 0.1]")
    u = sol.profile
    fkdv = sol.convention == "fkdv"
    norm = l2_norm(u)
    if isinstance(perturbation, Field):
        pert = perturbation / l2_norm(perturbation)
    else:
        pert = random_perturbation(u.grid, int(perturbation or 0), complex_valued=not fkdv)
    if not fkdv:
        u = Field(u.grid, u.values, real=False)
    u0 = u + epsilon * norm * pert if epsilon > 0 else u
    if epsilon > 0:
        u0 = u0 * np.sqrt(charge(u, sol.convention) / charge(u0, sol.convention))

    cfg = EvolutionConfig(family="fkdv" if fkdv else "fns", s=sol.s, nonlinearity=sol.nonlinearity,
                          grid=u.grid, dt=dt, t_end=T, snapshot_stride=stride)
    times, dists, taus = [], [], []

    def track(t, f):
        tau, d = translation_distance(u, f, phase=not fkdv)
        times.append(t)
        dists.append(d)
        taus.append(tau)

    trace = run(cfg, u0, callback=track)
    times = np.asarray(times)
    taus = np.unwrap(np.asarray(taus), period=u.grid.length)
    speed = float(np.polyfit(times, taus, 1)[0]) if len(times) > 1 else 0.0
    dists = np.asarray(dists)
    return StabilityReport(
        epsilon=epsilon, times=times, distance=dists, shifts=taus, max_d=float(dists.max()),
        soliton_norm=norm, speed=speed, multiplier=sol.multiplier if fkdv else 0.0,
        meta={"energy_drift": trace.energy_drift, "charge_drift": trace.charge_drift,
              "family": cfg.family, "s": sol.s, "nonlinearity": sol.nonlinearity, "dt": dt, "T": T},
    )


def smoothstep7(t):
    """C^3 ramp 35t^4 - 84t^5 + 70t^6 - 20t^7 on [0, 1], clamped outside."""
    t = np.clip(t, 0.0, 1.0)
    return t**4 * (35 - 84 * t + 70 * t**2 - 20 * t**3)


def bump_profile(R: float, s0: float, grid: Grid) -> Field:
    """Plateau s0 on |x| <= R, zero for |x| >= R + 1, smoothstep7 ramp in between."""
    if R <= 0:
        raise ValueError("R must be positive")
    if R + 1 >= grid.length / 2:
        raise ValueError(f"bump of radius {R:g} does not fit in the box of length {grid.length:g}")
    return Field(grid, s0 * smoothstep7(R + 1 - np.abs(grid.x)))


@dataclass
class HylomorphyReport:
    R: np.ndarray
    ratios: np.ndarray
    limit: float
    E0: float
    intercept: float
    slope: float
    intercept_err: float
    fit_residual: float
    seminorms: np.ndarray
    verdict: bool


def hylomorphy_scan(W: Nonlinearity | str, s: float, s0: float, R_values, grid: Grid,
                    convention: str = "fns") -> HylomorphyReport:
    """Hylenic ratio of plateau bumps u_R, with a linear fit in 1/R.

    The verdict is true when min Lambda(u_R) < E0 by more than the fit
    uncertainty, a sufficient condition for hylomorphic solitons.
    """
    W = parse_nonlinearity(W)
    R = np.asarray(sorted(R_values), dtype=float)
    bumps = [bump_profile(r, s0, grid) for r in R]
    ratios = np.array([hylenic_ratio(b, s, W, convention) for b in bumps])
    semis = np.array([sobolev_seminorm(b, s) ** 2 for b in bumps])
    limit = W.E0 + float(W.N(np.array([s0]))[0]) / s0**2
    if len(R) >= 3:
        coef, cov = np.polyfit(1 / R, ratios, 1, cov=True)
        err = float(np.sqrt(cov[1, 1]))
    else:
        coef = np.polyfit(1 / R, ratios, 1) if len(R) == 2 else np.array([0.0, ratios[0]])
        err = 0.0
    fit = np.polyval(coef, 1 / R)
    return HylomorphyReport(
        R=R, ratios=ratios, limit=limit, E0=W.E0, intercept=float(coef[1]), slope=float(coef[0]),
        intercept_err=err, fit_residual=float(np.max(np.abs(fit - ratios))), seminorms=semis,
        verdict=bool(ratios.min() < W.E0 - err),
    )


def gn_exponents(p, s):
    """Gagliardo-Nirenberg exponents (theta, beta, admissible) for |u|_p <= |u|_{H^s}^theta |u|_2^(1-theta).

    theta = (1/s)(1/2 - 1/p), beta = (2ps + 2 - p) / (4s + 2 - p).
    Admissible means 2 < p < 4s + 2, theta in (0, 1) and beta > 1. Exact
    for ``fractions.Fraction`` inputs.
    """
    theta = (p - 2) / (2 * p * s)
    gap = 4 * s + 2 - p
    beta = (2 * p * s + 2 - p) / gap if gap != 0 else float("inf")
    admissible = bool(2 < p and gap > 0 and 0 < theta < 1 and beta > 1)
    return theta, beta, admissible


def coercivity_constant(phi: Field, s: float, W: Nonlinearity, beta: float, convention: str = "fkdv",
                        alphas=None) -> float:
    """Smallest a with E(alpha phi) + a C(alpha phi)^beta >= 0 over the sampled alphas."""
    if alphas is None:
        alphas = np.logspace(-3, 3, 2001)
    worst = 0.0
    for a in alphas:
        f = a * phi
        c = charge(f, convention)
        if c > 0:
            worst = max(worst, -energy(f, s, W) / c**beta)
    return worst
