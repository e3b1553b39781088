"""Periodic grids, sampled fields and Fourier-multiplier operators.

The real line is replaced by the box [-L/2, L/2) with N equispaced nodes.
All integrals use the quadrature weight dx = L/N, so discrete inner
products are Parseval-consistent with the continuous ones.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "Multiplier",
    "make_grid",
    "fractional_multiplier",
    "HILBERT",
    "DX",
    "fractional_derivative",
    "hilbert_transform",
    "derivative_x",
    "inner",
    "l2_norm",
    "sobolev_seminorm",
    "shift",
]


@dataclass(frozen=True)
class Grid:
    length: float
    n: int

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"box length must be positive, got {self.length}")
        if int(self.n) != self.n or self.n % 2 or self.n < 8:
            raise ValueError(f"point count must be an even integer >= 8, got {self.n}")
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "n", int(self.n))

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def dk(self) -> float:
        return 2 * np.pi / self.length

    @property
    def nyquist(self) -> float:
        return np.pi * self.n / self.length

    @cached_property
    def x(self) -> np.ndarray:
        return -self.length / 2 + self.dx * np.arange(self.n)

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode numbers in FFT order (0, 1, ..., N/2-1, -N/2, ..., -1)."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)

    @cached_property
    def xi(self) -> np.ndarray:
        """Wavenumbers 2*pi*k/L in FFT order."""
        return self.dk * self.modes

    @cached_property
    def nyquist_index(self) -> int:
        return self.n // 2

    def dealias_mask(self) -> np.ndarray:
        """Boolean mask of modes kept by the 2/3 rule (|k| < N/3)."""
        return 3 * np.abs(self.modes) < self.n

    def field(self, values, real: bool | None = None) -> "Field":
        return Field(self, values, real=real)

    def sample(self, f: Callable[[np.ndarray], np.ndarray], real: bool | None = None) -> "Field":
        return Field(self, f(self.x), real=real)


def make_grid(length: float, n: int) -> Grid:
    return Grid(length, n)


class Field:
    """Samples of a real or complex function on a :class:`Grid`.

    Fields are treated as values: operations return new fields and never
    mutate their inputs. The discrete spectrum is computed on first access
    and cached.
    """

    __slots__ = ("grid", "values", "real", "_spectrum")

    def __init__(self, grid: Grid, values, real: bool | None = None):
        values = np.asarray(values)
        if values.shape != (grid.n,):
            raise ValueError(f"expected {grid.n} samples, got shape {values.shape}")
        if real is None:
            real = not np.iscomplexobj(values)
        if real:
            if np.iscomplexobj(values):
                values = values.real
            values = values.astype(np.float64, copy=False)
        else:
            values = values.astype(np.complex128, copy=False)
        values.setflags(write=False)
        self.grid = grid
        self.values = values
        self.real = bool(real)
        self._spectrum = None

    @classmethod
    def from_spectrum(cls, grid: Grid, spectrum: np.ndarray, real: bool) -> "Field":
        values = np.fft.ifft(spectrum)
        out = cls(grid, values.real if real else values, real=real)
        if not real:
            out._spectrum = spectrum
        return out

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            spec = np.fft.fft(self.values)
            spec.setflags(write=False)
            self._spectrum = spec
        return self._spectrum

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def _check(self, other: "Field"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def _wrap(self, values) -> "Field":
        return Field(self.grid, values)

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return self._wrap(self.values + other.values)
        return self._wrap(self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return self._wrap(self.values - other.values)
        return self._wrap(self.values - other)

    def __rsub__(self, other):
        return self._wrap(other - self.values)

    def __mul__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return self._wrap(self.values * other.values)
        return self._wrap(self.values * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(self.values / other)

    def __neg__(self):
        return self._wrap(-self.values)

    def abs(self) -> "Field":
        return Field(self.grid, np.abs(self.values))

    def norm(self) -> float:
        return l2_norm(self)

    def roll(self, shift_nodes: int) -> "Field":
        return Field(self.grid, np.roll(self.values, shift_nodes), real=self.real)

    def __repr__(self):
        kind = "real" if self.real else "complex"
        return f"Field({kind}, L={self.grid.length:g}, N={self.grid.n}, |u|={self.norm():.6g})"


@dataclass(frozen=True)
class Multiplier:
    """Fourier multiplier with symbol m(xi).

    ``parity`` is "even" for real even symbols, "odd" for purely imaginary
    odd symbols, anything else is treated as general. Odd symbols have
    their Nyquist mode zeroed; even and odd symbols map real fields to
    real fields.
    """

    symbol: Callable[[np.ndarray], np.ndarray]
    parity: str = "general"
    factors: tuple = ()

    def on(self, grid: Grid) -> np.ndarray:
        if self.factors:
            # a composition acts exactly like applying its factors in turn
            m = self.factors[0].on(grid)
            for f in self.factors[1:]:
                m = m * f.on(grid)
            return m
        m = np.asarray(self.symbol(grid.xi), dtype=np.complex128)
        if self.parity == "odd":
            m = m.copy()
            m[grid.nyquist_index] = 0.0
        return m

    def __call__(self, u: Field) -> Field:
        spec = u.spectrum * self.on(u.grid)
        real = u.real and self.parity in ("even", "odd")
        return Field.from_spectrum(u.grid, spec, real=real)

    def __matmul__(self, other: "Multiplier") -> "Multiplier":
        parity = _compose_parity(self.parity, other.parity)
        parts = (self.factors or (self,)) + (other.factors or (other,))
        return Multiplier(lambda xi: self.symbol(xi) * other.symbol(xi), parity, parts)


def _compose_parity(a: str, b: str) -> str:
    if a == "general" or b == "general":
        return "general"
    return "even" if a == b else "odd"


def fractional_multiplier(s: float) -> Multiplier:
    if s < 0:
        raise ValueError(f"fractional order must be nonnegative, got {s}")
    if s == 0:
        return Multiplier(lambda xi: np.ones_like(xi), "even")
    return Multiplier(lambda xi: np.abs(xi) ** s, "even")


HILBERT = Multiplier(lambda xi: -1j * np.sign(xi), "odd")
DX = Multiplier(lambda xi: 1j * xi, "odd")


def fractional_derivative(u: Field, s: float) -> Field:
    """D^s u, the multiplier |xi|^s; constants are annihilated for s > 0."""
    if s < 0:
        raise ValueError(f"fractional order must be nonnegative, got {s}")
    if s == 0:
        return u
    return fractional_multiplier(s)(u)


def hilbert_transform(u: Field) -> Field:
    return HILBERT(u)


def derivative_x(u: Field) -> Field:
    return DX(u)


def inner(u: Field, v: Field) -> float:
    """Real pairing dx * Re sum(u * conj(v))."""
    u._check(v)
    return float(u.grid.dx * np.real(np.vdot(v.values, u.values)))


def l2_norm(u: Field) -> float:
    return float(np.sqrt(u.grid.dx * np.sum(np.abs(u.values) ** 2)))


def sobolev_seminorm(u: Field, s: float) -> float:
    """Homogeneous H^s seminorm, computed from the spectrum via Parseval."""
    if s < 0:
        raise ValueError(f"fractional order must be nonnegative, got {s}")
    g = u.grid
    weight = np.ones(g.n) if s == 0 else np.abs(g.xi) ** (2 * s)
    # dx * sum|D^s u|^2 == (dx / N) * sum |xi|^2s |u_hat|^2
    return float(np.sqrt(g.dx / g.n * np.sum(weight * np.abs(u.spectrum) ** 2)))


def shift(u: Field, a: float) -> Field:
    """Spectral translate u(x - a); the Nyquist mode keeps only its cosine part."""
    phase = np.exp(-1j * u.grid.xi * a)
    phase[u.grid.nyquist_index] = np.cos(u.grid.xi[u.grid.nyquist_index] * a)
    return Field.from_spectrum(u.grid, u.spectrum * phase, real=u.real)
