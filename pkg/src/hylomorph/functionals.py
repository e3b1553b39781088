"""Nonlinearities, conserved functionals and the hylenic ratio.

Two charge conventions are supported and always passed explicitly:

``"fkdv"``  C(u) = 1/2 int u^2,   C'(u) = u
``"fns"``   C(psi) = int |psi|^2, C'(psi) = 2 psi

Real fields evaluate the potential W on the real line; complex fields use
W(psi) = F(|psi|) with F the restriction of W to [0, inf).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Literal

import numpy as np

from .spectral import Field, fractional_derivative, inner, l2_norm, sobolev_seminorm

__all__ = [
    "Convention",
    "Nonlinearity",
    "FunctionalReport",
    "bo",
    "kdv",
    "power",
    "nls_power",
    "gpe",
    "polynomial",
    "zero",
    "tabulated",
    "parse_nonlinearity",
    "energy",
    "charge",
    "charge_fkdv",
    "charge_fns",
    "charge_gradient",
    "hylenic_ratio",
    "energy_gradient",
    "quadratic_energy",
    "tail_mass",
    "functional_report",
    "fns_shift",
    "fkdv_shift",
]

Convention = Literal["fkdv", "fns"]
CONVENTIONS = ("fkdv", "fns")


@dataclass(frozen=True)
class Nonlinearity:
    """Potential W with W(0) = W'(0) = 0 and the split W(r) = E0 r^2 + N(r).

    ``degree`` is set when W is homogeneous, W(a r) = |a|^degree W(r) up to
    sign for negative a; Petviashvili iteration needs it. ``q1``, ``q2`` and
    ``s0`` are growth and hylomorphy metadata and carry no computational role.
    """

    key: str
    W: Callable[[np.ndarray], np.ndarray]
    dW: Callable[[np.ndarray], np.ndarray]
    E0: float
    degree: float | None = None
    polynomial: bool = True
    q1: float | None = None
    q2: float | None = None
    s0: float | None = None
    d2W: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def N(self, r):
        r = np.asarray(r, dtype=float)
        return self.W(r) - self.E0 * r**2

    def density(self, values: np.ndarray) -> np.ndarray:
        if np.iscomplexobj(values):
            return self.W(np.abs(values))
        return self.W(values)

    def force(self, values: np.ndarray) -> np.ndarray:
        """W'(u) for real u; F'(|psi|) psi/|psi| (zero at psi = 0) for complex psi."""
        if not np.iscomplexobj(values):
            return self.dW(values)
        mod = np.abs(values)
        out = np.zeros_like(values)
        nz = mod > 0
        out[nz] = self.dW(mod[nz]) * values[nz] / mod[nz]
        return out

    def curvature(self, r) -> np.ndarray:
        """W''(r), by central differences of W' when no closed form is given."""
        r = np.asarray(r, dtype=float)
        if self.d2W is not None:
            return self.d2W(r)
        h = 1e-5 * np.maximum(1.0, np.abs(r))
        return (self.dW(r + h) - self.dW(r - h)) / (2 * h)

    def check(self, r_small=None) -> None:
        """Spot-check W(0) = W'(0) = 0 and N(r)/r^2 -> 0 on a decade of small r."""
        if abs(float(self.W(np.array([0.0]))[0])) > 1e-12 or abs(float(self.dW(np.array([0.0]))[0])) > 1e-12:
            raise ValueError(f"{self.key}: W(0) and W'(0) must vanish")
        r = np.logspace(-4, -3, 5) if r_small is None else np.asarray(r_small)
        ratio = np.abs(self.N(r)) / r**2
        if not ratio[0] <= ratio[-1] + 1e-9 or ratio[0] > 1e-2:
            raise ValueError(f"{self.key}: N(r)/r^2 does not vanish as r -> 0")

    def shifted(self, a: float) -> "Nonlinearity":
        """W(r) + a r^2."""
        W, dW, d2W = self.W, self.dW, self.d2W
        return replace(
            self,
            key=f"{self.key}+{a:g}r^2",
            W=lambda r: W(r) + a * np.asarray(r) ** 2,
            dW=lambda r: dW(r) + 2 * a * np.asarray(r),
            d2W=None if d2W is None else (lambda r: d2W(r) + 2 * a),
            E0=self.E0 + a,
            degree=None,
        )


def bo() -> Nonlinearity:
    return Nonlinearity("bo", lambda r: r**3 / 6, lambda r: r**2 / 2, 0.0, degree=3,
                        q1=3, q2=3, s0=-1.0, d2W=lambda r: r)


def kdv() -> Nonlinearity:
    return Nonlinearity("kdv", lambda r: -(r**3) / 6, lambda r: -(r**2) / 2, 0.0, degree=3,
                        q1=3, q2=3, s0=1.0, d2W=lambda r: -r)


def power(p: float, sign: float = -1.0) -> Nonlinearity:
    """sign * |r|^p / (p (p - 1)); sign = -1 is the focusing family."""
    if p <= 2:
        raise ValueError(f"power exponent must exceed 2, got {p}")
    c = sign / (p * (p - 1))
    return Nonlinearity(
        f"power({p:g},{sign:g})",
        lambda r: c * np.abs(r) ** p,
        lambda r: c * p * np.abs(r) ** (p - 2) * r,
        0.0, degree=p, polynomial=float(p).is_integer(), q1=p, q2=p, s0=1.0 if sign < 0 else None,
    )


def nls_power(p: float, sign: float = -1.0) -> Nonlinearity:
    """sign * |r|^p / p."""
    if p <= 2:
        raise ValueError(f"power exponent must exceed 2, got {p}")
    c = sign / p
    return Nonlinearity(
        f"nls_power({p:g},{sign:g})",
        lambda r: c * np.abs(r) ** p,
        lambda r: c * p * np.abs(r) ** (p - 2) * r,
        0.0, degree=p, polynomial=float(p).is_integer(), q1=p, q2=p, s0=1.0 if sign < 0 else None,
    )


def gpe() -> Nonlinearity:
    return Nonlinearity("gpe", lambda r: -(r**4) / 4, lambda r: -(r**3), 0.0, degree=4,
                        q1=4, q2=4, s0=1.0, d2W=lambda r: -3 * r**2)


def polynomial(*coeffs: float) -> Nonlinearity:
    """W(r) = sum_k coeffs[k-2] r^k, k = 2, 3, ..."""
    c = np.array(coeffs, dtype=float)
    if c.size == 0:
        c = np.zeros(1)
    powers = np.arange(2, 2 + c.size)

    def W(r):
        r = np.asarray(r)
        return sum(ck * r**k for ck, k in zip(c, powers))

    def dW(r):
        r = np.asarray(r)
        return sum(ck * k * r ** (k - 1) for ck, k in zip(c, powers))

    def d2W(r):
        r = np.asarray(r)
        return sum(ck * k * (k - 1) * r ** (k - 2) for ck, k in zip(c, powers)) + 0 * r

    nonzero = powers[(c != 0) & (powers > 2)]
    degree = float(powers[c != 0][0]) if np.count_nonzero(c) == 1 and c[0] == 0 else None
    key = "poly(" + ",".join(f"{x:g}" for x in c) + ")"
    return Nonlinearity(key, W, dW, float(c[0]), degree=degree,
                        q1=float(nonzero.min()) if nonzero.size else None,
                        q2=float(nonzero.max()) if nonzero.size else None,
                        d2W=d2W)


def zero() -> Nonlinearity:
    return Nonlinearity("zero", lambda r: 0.0 * np.asarray(r), lambda r: 0.0 * np.asarray(r), 0.0,
                        d2W=lambda r: 0.0 * np.asarray(r))


def tabulated(path: str | Path) -> Nonlinearity:
    """F(r) from a two-column text table (r >= 0, F), cubic-spline interpolated.

    The potential is extended evenly to negative r. The spline is clamped
    with F'(0) = 0 so that W'(0) = 0 holds exactly.
    """
    from scipy.interpolate import CubicSpline

    data = np.loadtxt(path, comments="#", ndmin=2)
    r, F = data[:, 0], data[:, 1]
    if r[0] != 0 or np.any(np.diff(r) <= 0):
        raise ValueError("table must start at r = 0 with strictly increasing r")
    if abs(F[0]) > 1e-14:
        raise ValueError("table must satisfy F(0) = 0")
    spline = CubicSpline(r, F, bc_type=((1, 0.0), "not-a-knot"))
    d1, d2 = spline.derivative(1), spline.derivative(2)
    rmax = r[-1]

    def _clip(x):
        a = np.abs(np.asarray(x, dtype=float))
        if np.any(a > rmax):
            raise ValueError(f"tabulated nonlinearity evaluated beyond r = {rmax:g}")
        return a

    return Nonlinearity(
        f"table({path})",
        lambda x: spline(_clip(x)),
        lambda x: np.sign(x) * d1(_clip(x)),
        0.5 * float(d2(0.0)),
        polynomial=False,
        d2W=lambda x: d2(_clip(x)),
    )


_CATALOG = {"bo": bo, "kdv": kdv, "gpe": gpe, "zero": zero}
_CALL = re.compile(r"^\s*(\w+)\s*\((.*)\)\s*$")


def parse_nonlinearity(spec: str | Nonlinearity) -> Nonlinearity:
    """Look up a nonlinearity by configuration key.

    Accepted keys: ``bo``, ``kdv``, ``gpe``, ``zero``, ``power(p, sign)``,
    ``nls_power(p, sign)``, ``poly(a2, a3, ...)`` and ``table(path)``.
    """
    if isinstance(spec, Nonlinearity):
        return spec
    if not isinstance(spec, str):
        raise ValueError(f"nonlinearity key must be a string, got {spec!r}")
    key = spec.strip()
    if key in _CATALOG:
        return _CATALOG[key]()
    m = _CALL.match(key)
    if not m:
        raise ValueError(f"unknown nonlinearity {spec!r}")
    name, args = m.group(1), m.group(2)
    if name == "table":
        return tabulated(args.strip().strip("'\""))
    try:
        nums = [float(a) for a in args.split(",") if a.strip()]
    except ValueError as exc:
        raise ValueError(f"bad arguments in nonlinearity {spec!r}") from exc
    if name == "power" and len(nums) in (1, 2):
        return power(*nums)
    if name == "nls_power" and len(nums) in (1, 2):
        return nls_power(*nums)
    if name == "poly":
        return polynomial(*nums)
    raise ValueError(f"unknown nonlinearity {spec!r}")


def _check_convention(convention: str) -> None:
    if convention not in CONVENTIONS:
        raise ValueError(f"charge convention must be one of {CONVENTIONS}, got {convention!r}")


def energy(u: Field, s: float, W: Nonlinearity) -> float:
    """int (1/2 |D^s u|^2 + W(u)) dx."""
    return 0.5 * sobolev_seminorm(u, s) ** 2 + u.grid.dx * float(np.sum(W.density(u.values)))


def quadratic_energy(u: Field, s: float, W: Nonlinearity) -> float:
    """1/2 |u|_{H^s}^2 + E0 |u|_{L^2}^2, the part of the energy fixed by W''(0)."""
    return 0.5 * sobolev_seminorm(u, s) ** 2 + W.E0 * l2_norm(u) ** 2


def charge_fkdv(u: Field) -> float:
    return 0.5 * l2_norm(u) ** 2


def charge_fns(psi: Field) -> float:
    return l2_norm(psi) ** 2


def charge(u: Field, convention: Convention) -> float:
    _check_convention(convention)
    return charge_fkdv(u) if convention == "fkdv" else charge_fns(u)


def charge_gradient(u: Field, convention: Convention) -> Field:
    _check_convention(convention)
    return u if convention == "fkdv" else 2 * u


def hylenic_ratio(u: Field, s: float, W: Nonlinearity, convention: Convention) -> float:
    c = charge(u, convention)
    if c == 0:
        raise ValueError("hylenic ratio is undefined for a zero-charge field")
    return energy(u, s, W) / abs(c)


def energy_gradient(u: Field, s: float, W: Nonlinearity) -> Field:
    """L^2 gradient D^{2s} u + W'(u) of the energy (real pairing for complex fields)."""
    return fractional_derivative(u, 2 * s) + Field(u.grid, W.force(u.values), real=u.real)


def tail_mass(u: Field, fraction: float = 0.1) -> float:
    """Share of the L^2 mass lying in the outer ``fraction`` of the box."""
    g = u.grid
    total = np.sum(np.abs(u.values) ** 2)
    if total == 0:
        return 0.0
    outer = np.abs(g.x) >= (1 - fraction) * g.length / 2
    return float(np.sum(np.abs(u.values[outer]) ** 2) / total)


@dataclass(frozen=True)
class FunctionalReport:
    energy: float
    charge: float
    ratio: float
    gradient_norm: float
    tail_mass: float


def functional_report(u: Field, s: float, W: Nonlinearity, convention: Convention) -> FunctionalReport:
    e = energy(u, s, W)
    c = charge(u, convention)
    return FunctionalReport(
        energy=e,
        charge=c,
        ratio=e / abs(c) if c > 0 else float("nan"),
        gradient_norm=l2_norm(energy_gradient(u, s, W)),
        tail_mass=tail_mass(u),
    )


def fns_shift(W: Nonlinearity, a: float | None = None) -> tuple[Nonlinearity, float]:
    """Return (W + a r^2, a).

    If psi1 solves the FNS equation with the shifted potential, then
    psi1 * exp(i a t) solves it with W. The default a = 1 - E0 makes the
    shifted E0 equal to one.
    """
    if a is None:
        a = 1.0 - W.E0
    return W.shifted(a), a


def fkdv_shift(W: Nonlinearity, a: float | None = None) -> tuple[Nonlinearity, float]:
    """Return (W + a r^2, 2 a).

    If v solves FKdV with the shifted potential, u(t, x) = v(t, x + 2 a t)
    solves it with W. The default a = 1 - E0 makes the shifted W''(0) = 2.
    """
    if a is None:
        a = 1.0 - W.E0
    return W.shifted(a), 2.0 * a
