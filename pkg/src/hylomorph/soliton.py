"""Solitons as constrained energy minimizers.

Stationary equations, with kappa = 1 for the "fkdv" charge convention and
kappa = 2 for "fns":

    D^{2s} u + W'(u) = kappa * lam * u

Sign convention. With D = |xi| and H = -i sgn(xi), the explicit
Benjamin-Ono family u = 4 lam / (1 + lam^2 (x - lam t)^2) solves
u_t + H u_xx + u u_x = 0 for lam < 0: the hylomorphic BO soliton is the
negative Lorentzian, it travels to the left, and its multiplier equals its
(negative) speed. Every ground state here therefore has kappa * lam < 0,
and Petviashvili iteration uses the positive operator D^{2s} - kappa * lam.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .functionals import (
    Convention,
    Nonlinearity,
    charge,
    charge_gradient,
    energy,
    energy_gradient,
    parse_nonlinearity,
    tail_mass,
)
from .spectral import Field, Grid, fractional_derivative, inner, l2_norm

__all__ = [
    "SolitonSolution",
    "ConvergenceError",
    "VanishingError",
    "HylomorphyRangeWarning",
    "exact_bo_soliton",
    "kdv_soliton",
    "gpe_soliton",
    "estimate_multiplier",
    "stationary_residual",
    "find_soliton_gradient_flow",
    "petviashvili",
    "recenter",
    "check_power_range",
]

VANISHING_TAIL = 1e-3


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted or iteration diverged; ``best`` holds the last iterate."""

    def __init__(self, message: str, best: "SolitonSolution | None" = None):
        super().__init__(message)
        self.best = best


class VanishingError(ConvergenceError):
    """The minimizing sequence spread over the box instead of localizing."""


class HylomorphyRangeWarning(UserWarning):
    pass


@dataclass
class SolitonSolution:
    profile: Field
    multiplier: float
    charge: float
    energy: float
    residual_norm: float
    method: str
    iterations: int
    convention: str
    s: float
    nonlinearity: str
    converged: bool = True

    @property
    def speed(self) -> float:
        """Travelling speed (fkdv) or phase frequency (fns) of the soliton."""
        return self.multiplier


def _kappa(convention: str) -> float:
    if convention not in ("fkdv", "fns"):
        raise ValueError(f"unknown charge convention {convention!r}")
    return 1.0 if convention == "fkdv" else 2.0


def check_power_range(p: float | None, s: float) -> bool:
    """Warn when 2 < p < 4s + 2 fails; returns whether p is in range."""
    if p is None:
        return True
    ok = 2 < p < 4 * s + 2
    if not ok:
        warnings.warn(f"p={p:g} lies outside (2, {4 * s + 2:g}): hylomorphic solitons are not guaranteed",
                      HylomorphyRangeWarning, stacklevel=3)
    return ok


def exact_bo_soliton(lam: float, grid: Grid, x0: float = 0.0, images: int = 0) -> Field:
    """4 lam / (1 + lam^2 (x - x0)^2) summed over periodic images x0 + m L, |m| <= images."""
    if lam == 0:
        raise ValueError("lam must be nonzero")
    if images < 0:
        raise ValueError("images must be nonnegative")
    x = grid.x
    u = np.zeros_like(x)
    # smallest images first keeps the sum accurate
    for m in sorted(range(-images, images + 1), key=lambda m: -abs(m)):
        y = x - x0 - m * grid.length
        u += 4 * lam / (1 + lam**2 * y**2)
    return Field(grid, u)


def kdv_soliton(lam: float, grid: Grid, x0: float = 0.0) -> Field:
    """3c sech^2(sqrt(c) (x - x0) / 2), c = -lam, solving -u'' - u^2/2 = lam u."""
    if lam >= 0:
        raise ValueError("KdV ground states need lam < 0")
    c = -lam
    return Field(grid, 3 * c / np.cosh(np.sqrt(c) * (grid.x - x0) / 2) ** 2)


def gpe_soliton(omega: float, grid: Grid, x0: float = 0.0) -> Field:
    """sqrt(2) k sech(k (x - x0)), k = sqrt(-2 omega), solving 1/2(-u'' - u^3) = omega u."""
    if omega >= 0:
        raise ValueError("GPE ground states need omega < 0")
    k = np.sqrt(-2 * omega)
    return Field(grid, np.sqrt(2) * k / np.cosh(k * (grid.x - x0)))


def estimate_multiplier(u: Field, s: float, W: Nonlinearity, convention: Convention) -> float:
    """<E'(u), u> / <C'(u), u>."""
    den = inner(charge_gradient(u, convention), u)
    if den == 0:
        raise ValueError("multiplier is undefined for the zero field")
    return inner(energy_gradient(u, s, W), u) / den


def _defect(u: Field, lam: float, s: float, W: Nonlinearity, convention: str) -> tuple[Field, float]:
    kappa = _kappa(convention)
    lin = fractional_derivative(u, 2 * s)
    nl = Field(u.grid, W.force(u.values), real=u.real)
    # fns keeps the 1/2 factors of its stationary equation
    scale = 0.5 if convention == "fns" else 1.0
    d = scale * (lin + nl - kappa * lam * u)
    size = scale * (l2_norm(lin) + l2_norm(nl) + kappa * abs(lam) * l2_norm(u))
    return d, size


def stationary_residual(u: Field, lam: float, s: float, W: Nonlinearity, convention: Convention,
                        relative: bool = False) -> float:
    """L^2 norm of the stationary-equation defect.

    With ``relative`` the norm is divided by the sum of the norms of the
    three terms of the equation.
    """
    d, size = _defect(u, lam, s, parse_nonlinearity(W), convention)
    r = l2_norm(d)
    if relative:
        return r / size if size > 0 else 0.0
    return r


def recenter(u: Field) -> Field:
    """Roll the field so its largest |u| sits on x = 0 (leftmost node on ties)."""
    peak = int(np.argmax(np.abs(u.values)))
    return u.roll(u.grid.n // 2 - peak)


def _scale_to_charge(u: Field, c: float, convention: str) -> Field:
    cu = charge(u, convention)
    if cu == 0:
        raise VanishingError("iterate collapsed to the zero field")
    return u * np.sqrt(c / cu)


def _default_seed(grid: Grid, s: float, W: Nonlinearity, c: float, convention: str, width: float) -> Field:
    g = Field(grid, np.exp(-(grid.x / width) ** 2))
    cands = [_scale_to_charge(g, c, convention), _scale_to_charge(-g, c, convention)]
    return min(cands, key=lambda f: energy(f, s, W))


def find_soliton_gradient_flow(c: float, s: float, W: Nonlinearity | str, convention: Convention,
                               init: Field | Grid, tau: float = 0.5, tol: float = 1e-8,
                               max_iter: int = 20000, width: float = 1.0) -> SolitonSolution:
    """Minimize E on {C = c} by projected, preconditioned gradient descent.

    Each iteration takes g = E'(u), removes its component along u,
    preconditions with (1 + |xi|^{2s})^{-1}, steps by ``tau`` and rescales
    to charge ``c``. Stops when the projected gradient norm is below ``tol``.
    ``init`` may be a field or a grid (Gaussian seed of the given width).
    """
    W = parse_nonlinearity(W)
    if c <= 0:
        raise ValueError("target charge must be positive")
    check_power_range(W.degree, s)
    _kappa(convention)
    if isinstance(init, Grid):
        u = _default_seed(init, s, W, c, convention, width)
    else:
        u = _scale_to_charge(init, c, convention)
    grid = u.grid
    precond = 1.0 / (1.0 + np.abs(grid.xi) ** (2 * s))

    res = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = energy_gradient(u, s, W)
        lam_hat = inner(g, u) / inner(u, u)
        r = g - lam_hat * u
        res = l2_norm(r)
        if res < tol:
            break
        step = Field.from_spectrum(grid, r.spectrum * precond, real=u.real)
        u = _scale_to_charge(u - tau * step, c, convention)

    u = recenter(u)
    lam = estimate_multiplier(u, s, W, convention)
    sol = SolitonSolution(
        profile=u, multiplier=lam, charge=charge(u, convention), energy=energy(u, s, W),
        residual_norm=stationary_residual(u, lam, s, W, convention), method="gradient_flow",
        iterations=it, convention=convention, s=s, nonlinearity=W.key, converged=res < tol,
    )
    tm = tail_mass(u)
    if tm > VANISHING_TAIL:
        sol.converged = False
        raise VanishingError(
            f"minimizing sequence failed to localize (tail mass {tm:.3g}); "
            "no hylomorphic minimizer at this charge", sol)
    if res >= tol:
        sol.converged = False
        raise ConvergenceError(f"projected gradient {res:.3e} above tol after {max_iter} iterations", sol)
    return sol


def petviashvili(lam: float, s: float, W: Nonlinearity | str, grid: Grid, convention: Convention = "fkdv",
                 tol: float = 1e-10, max_iter: int = 5000, seed: Field | None = None) -> SolitonSolution:
    """Petviashvili iteration for D^{2s} u + W'(u) = kappa * lam * u with homogeneous W.

    u <- M^gamma (D^{2s} - kappa lam)^{-1} [-W'(u)],  M = <(D^{2s} - kappa lam) u, u> / <-W'(u), u>,
    gamma = (p - 1) / (p - 2) for W of degree p. Needs kappa * lam < 0.
    """
    W = parse_nonlinearity(W)
    p = W.degree
    if p is None or W.E0 != 0:
        raise ValueError(f"Petviashvili iteration needs a homogeneous nonlinearity, got {W.key}")
    check_power_range(p, s)
    kappa = _kappa(convention)
    if kappa * lam >= 0:
        raise ValueError(f"the linear operator D^2s - {kappa:g}*lam is not positive for lam={lam:g}")
    gamma = (p - 1) / (p - 2)
    symbol = np.abs(grid.xi) ** (2 * s) - kappa * lam

    if seed is None:
        seed = Field(grid, np.exp(-abs(lam) * grid.x**2))
    u = seed

    def _step(u):
        nl = -W.force(u.values)
        nl_hat = np.fft.fft(nl)
        num = grid.dx / grid.n * float(np.real(np.vdot(u.spectrum, symbol * u.spectrum)))
        den = grid.dx * float(np.real(np.vdot(u.values, nl)))
        return nl_hat, num, den

    nl_hat, num, den = _step(u)
    if den <= 0:
        u = -u
        nl_hat, num, den = _step(u)
    diff = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        if den <= 0 or not np.isfinite(den):
            raise ConvergenceError(f"stabilizing factor became nonpositive at iteration {it}")
        M = num / den
        new = Field.from_spectrum(grid, M**gamma * nl_hat / symbol, real=u.real)
        diff = l2_norm(new - u) / l2_norm(new)
        u = new
        if diff < tol:
            break
        nl_hat, num, den = _step(u)

    u = recenter(u)
    sol = SolitonSolution(
        profile=u, multiplier=lam, charge=charge(u, convention), energy=energy(u, s, W),
        residual_norm=stationary_residual(u, lam, s, W, convention), method="petviashvili",
        iterations=it, convention=convention, s=s, nonlinearity=W.key, converged=diff < tol,
    )
    if diff >= tol:
        raise ConvergenceError(f"iterate change {diff:.3e} above tol after {max_iter} iterations", sol)
    return sol
