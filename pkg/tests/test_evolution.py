import logging
import warnings

import numpy as np
import pytest

from hylomorph.analysis import translation_distance
from hylomorph.evolution import (
    BlowUpError,
    BoxTooSmallWarning,
    EvolutionConfig,
    FkdvStepper,
    FnsStepper,
    dt_ceiling,
    run,
    step_fkdv,
    step_fns,
    weak_residual,
)
from hylomorph.functionals import bo, fkdv_shift, fns_shift, gpe, kdv, parse_nonlinearity, zero
from hylomorph.soliton import kdv_soliton
from hylomorph.spectral import Field, Grid, l2_norm, shift

TWO_PI = 2 * np.pi


def band_limited(grid, seed, amp=0.5, complex_valued=False, kmax=None):
    rng = np.random.default_rng(seed)
    kmax = grid.n // 8 if kmax is None else kmax
    spec = np.zeros(grid.n, dtype=complex)
    band = (np.abs(grid.modes) <= kmax) & (grid.modes != 0)
    spec[band] = (rng.standard_normal(band.sum()) + 1j * rng.standard_normal(band.sum())) / (
        1 + np.abs(grid.modes[band]) ** 2)
    vals = np.fft.ifft(spec)
    vals = vals if complex_valued else vals.real
    return Field(grid, amp * vals / np.max(np.abs(vals)))


def evolve(stepper, u, steps):
    state = stepper.to_spectrum(u)
    for _ in range(steps):
        state = stepper.step(state)
    return stepper.to_field(state)


@pytest.mark.parametrize("s", [0.5, 0.75, 1.0])
def test_linear_fkdv_plane_wave(s):
    g = Grid(TWO_PI, 32)
    k, dt, n = 3, 0.01, 100
    u = g.field(np.exp(1j * k * g.x))
    for _ in range(n):
        u = step_fkdv(u, dt, s, zero())
    exact = np.exp(1j * (k * g.x - k * abs(k) ** (2 * s) * dt * n))
    assert np.max(np.abs(u.values - exact)) < 1e-12


@pytest.mark.parametrize("s", [0.5, 1.0])
def test_linear_fns_plane_wave(s):
    g = Grid(TWO_PI, 32)
    k, dt, n = -2, 0.01, 100
    psi = g.field(np.exp(1j * k * g.x))
    for _ in range(n):
        psi = step_fns(psi, dt, s, zero())
    exact = np.exp(1j * (k * g.x - abs(k) ** (2 * s) * dt * n / 2))
    assert np.max(np.abs(psi.values - exact)) < 1e-12


@pytest.mark.parametrize("a", [1.0, 0.5])
def test_nonlinear_plane_wave_orbit(a):
    g = Grid(TWO_PI, 32)
    s, k, dt, n = 0.5, 1, 0.01, 200
    omega = abs(k) ** (2 * s) / 2 - a**2 / 2  # gpe: F'(a)/(2a) = -a^2/2
    psi = evolve(FnsStepper(g, s, gpe(), dt), g.field(a * np.exp(1j * k * g.x)), n)
    exact = a * np.exp(1j * (k * g.x - omega * dt * n))
    assert np.max(np.abs(psi.values - exact)) < 1e-12


def test_step_preconditions():
    g = Grid(TWO_PI, 16)
    u = g.field(np.cos(g.x))
    with pytest.raises(ValueError):
        step_fkdv(u, 0.0, 0.5, bo())
    with pytest.raises(ValueError):
        step_fns(u, 0.0, 0.5, gpe())


@pytest.mark.parametrize(
    "kwargs",
    [dict(family="kdv"), dict(s=0.4), dict(dt=0.0), dict(dt=-1e-3), dict(t_end=0.0),
     dict(snapshot_stride=0), dict(nonlinearity="nope")],
)
def test_config_validation(kwargs):
    base = dict(family="fkdv", s=0.5, nonlinearity="bo", grid=Grid(TWO_PI, 16), dt=1e-2, t_end=1.0)
    base.update(kwargs)
    with pytest.raises(ValueError):
        EvolutionConfig(**base)


def test_zero_data_gives_zero_trace():
    g = Grid(20.0, 64)
    cfg = EvolutionConfig("fkdv", 0.5, "bo", g, 0.01, 1.0, snapshot_stride=10)
    tr = run(cfg, g.field(np.zeros(64)))
    assert len(tr.times) == 11
    assert np.all(np.array(tr.energy) == 0) and np.all(np.array(tr.charge) == 0)
    assert np.all(tr.final.values == 0)


def test_trace_series_and_stride():
    g = Grid(16 * np.pi, 128)
    cfg = EvolutionConfig("fns", 1.0, "gpe", g, 0.01, 0.55, snapshot_stride=20, keep_snapshots=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoxTooSmallWarning)
        tr = run(cfg, band_limited(g, 0, complex_valued=True))
    assert tr.times == pytest.approx([0, 0.2, 0.4, 0.55])
    assert len(tr.energy) == len(tr.charge) == len(tr.tail_mass) == len(tr.snapshots) == 4


def test_callback_sees_every_record():
    g = Grid(16 * np.pi, 64)
    seen = []
    cfg = EvolutionConfig("fkdv", 0.5, "bo", g, 0.01, 0.1, snapshot_stride=5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoxTooSmallWarning)
        run(cfg, band_limited(g, 1), callback=lambda t, f: seen.append(t))
    assert seen == pytest.approx([0, 0.05, 0.1])


def test_box_warning():
    g = Grid(16 * np.pi, 64)
    cfg = EvolutionConfig("fkdv", 0.5, "bo", g, 0.01, 0.05, snapshot_stride=5)
    with pytest.warns(BoxTooSmallWarning):
        run(cfg, band_limited(g, 2))


@pytest.mark.parametrize("family, W", [("fkdv", "bo"), ("fns", "gpe")])
def test_conservation_short(family, W):
    g = Grid(16 * np.pi, 128)
    u0 = band_limited(g, 3, complex_valued=family == "fns")
    cfg = EvolutionConfig(family, 0.5 if family == "fkdv" else 1.0, W, g, 1e-3, 1.0, snapshot_stride=100)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoxTooSmallWarning)
        tr = run(cfg, u0)
    assert tr.charge_drift < 1e-10
    assert tr.energy_drift < 1e-8


def _self_convergence_order(make_stepper, u0, T, dts):
    finals = [evolve(make_stepper(dt), u0, int(round(T / dt))) for dt in dts]
    e1 = l2_norm(finals[0] - finals[1])
    e2 = l2_norm(finals[1] - finals[2])
    return np.log2(e1 / e2)


def test_ifrk4_order():
    g = Grid(16 * np.pi, 128)
    u0 = band_limited(g, 4, amp=1.0, kmax=8)
    order = _self_convergence_order(lambda dt: FkdvStepper(g, 0.5, bo(), dt), u0, 2.0, (0.1, 0.05, 0.025))
    assert order >= 3.8


def test_strang_order():
    g = Grid(16 * np.pi, 128)
    psi0 = band_limited(g, 5, amp=1.0, complex_valued=True, kmax=8)
    order = _self_convergence_order(lambda dt: FnsStepper(g, 1.0, gpe(), dt), psi0, 2.0, (0.04, 0.02, 0.01))
    assert order >= 1.9


def test_fns_reversibility():
    g = Grid(16 * np.pi, 128)
    psi0 = band_limited(g, 6, amp=1.0, complex_valued=True)
    fwd = evolve(FnsStepper(g, 0.5, gpe(), 0.01), psi0, 500)
    back = evolve(FnsStepper(g, 0.5, gpe(), -0.01), fwd, 500)
    assert l2_norm(back - psi0) < 1e-12 * l2_norm(psi0) * 500


def test_shift_covariance():
    g = Grid(16 * np.pi, 128)
    u0 = band_limited(g, 7, amp=1.0)
    a = 0.37
    st = FkdvStepper(g, 0.5, bo(), 0.01)
    lhs = evolve(st, shift(u0, a), 200)
    rhs = shift(evolve(st, u0, 200), a)
    assert l2_norm(lhs - rhs) < 1e-11 * l2_norm(rhs)


def test_weak_residual_second_order():
    g = Grid(16 * np.pi, 128)
    s, W = 0.5, bo()
    u0 = band_limited(g, 8, amp=1.0, kmax=8)
    st = FkdvStepper(g, s, W, 1e-3)
    u = evolve(st, u0, 500)
    phi = g.field(np.exp(-(g.x / 3) ** 2) * np.cos(g.x))
    res = []
    for h in (0.04, 0.02, 0.01):
        k = int(round(h / 1e-3))
        before = evolve(st, u0, 500 - k)
        after = evolve(st, u, k)
        res.append(abs(weak_residual(before, u, after, h, s, W, phi)))
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(orders > 1.8)
    assert res[-1] < 1e-3


def test_blow_up_detected():
    g = Grid(20.0, 64)
    u0 = g.field(60 * np.exp(-g.x**2))
    cfg = EvolutionConfig("fkdv", 1.0, "kdv", g, 0.5, 100.0, snapshot_stride=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(BlowUpError) as info:
            run(cfg, u0)
    exc = info.value
    assert np.all(np.isfinite(exc.state.values))
    assert exc.trace is not None and len(exc.trace.times) >= 1


def test_dt_ceiling_logged(caplog):
    g = Grid(20.0, 64)
    u0 = g.field(np.exp(-g.x**2))
    assert dt_ceiling(u0, bo()) == pytest.approx(1.0, rel=1e-9)
    assert dt_ceiling(u0, zero()) == np.inf
    cfg = EvolutionConfig("fkdv", 1.0, "bo", g, 2.0, 2.0)
    with caplog.at_level(logging.WARNING, logger="hylomorph.evolution"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                run(cfg, u0)
            except BlowUpError:
                pass
    assert any("ceiling" in r.message for r in caplog.records)


def test_fns_shift_transform():
    g = Grid(40.0, 256)
    s, dt, n = 0.75, 1e-3, 1000
    W = parse_nonlinearity("poly(0.3, 0, -1)")
    W1, a = fns_shift(W)
    assert W1.E0 == pytest.approx(1.0)
    psi0 = g.field((1 + 0.5j) * np.exp(-g.x**2 / 4))
    ref = evolve(FnsStepper(g, s, W, dt), psi0, n)
    shifted = evolve(FnsStepper(g, s, W1, dt), psi0, n) * np.exp(1j * a * dt * n)
    assert l2_norm(ref - shifted) < 1e-12


@pytest.mark.parametrize("key, s", [("poly(-0.5, 0.1666666667)", 0.5), ("poly(-0.5, 0, -1)", 1.0)])
def test_fkdv_shift_transform(key, s):
    g = Grid(40.0, 256)
    dt, n = 5e-4, 2000
    W = parse_nonlinearity(key)
    W1, lam = fkdv_shift(W)
    assert W1.curvature(np.array([0.0]))[0] == pytest.approx(2.0)
    u0 = g.field(0.5 * np.exp(-g.x**2 / 2))
    u = evolve(FkdvStepper(g, s, W, dt), u0, n)
    v = evolve(FkdvStepper(g, s, W1, dt), u0, n)
    T = dt * n
    assert l2_norm(shift(v, -lam * T) - u) < 1e-9
    assert l2_norm(shift(v, lam * T) - u) > 1e-2


def test_kdv_soliton_translates():
    g = Grid(80.0, 512)
    lam, T, dt = -1.0, 5.0, 1e-3
    u0 = kdv_soliton(lam, g)
    cfg = EvolutionConfig("fkdv", 1.0, kdv(), g, dt, T, snapshot_stride=5000)
    tr = run(cfg, u0)
    tau, d = translation_distance(u0, tr.final)
    assert tau == pytest.approx(lam * T, abs=1e-4)
    assert d < 1e-6 * l2_norm(u0)
