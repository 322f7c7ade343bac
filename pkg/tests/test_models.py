"""Problem fields: auxiliary flux, candidate control, stream velocity."""

import numpy as np
import pytest

from thinn import jets as jt
from thinn import problems as pb
from thinn import reference as rf
from thinn import tape as tp


def linear_w(c_t, c_x):
    def w_fn(cols, layout):
        jets = jt.lift_inputs(cols, layout)
        return jets["t"] * c_t + jets["x"] * c_x
    return w_fn


def test_problem_spec_validation():
    with pytest.raises(pb.ProblemError):
        pb.ProblemSpec("advection", nu=0.1)
    with pytest.raises(pb.ProblemError):
        pb.ProblemSpec("heat", nu=-1.0)
    spec = pb.ProblemSpec("nse", nu=0.5)
    assert spec.dim == 2
    assert np.isclose(spec.side, 2 * np.pi)


def test_burgers_gauge_flux():
    spec = pb.ProblemSpec("burgers", nu=0.3)
    t = np.array([0.2, 0.8])
    x = np.array([0.1, 0.7])
    # w = t/4 - x/2: rho = 1/2 and the flux vanishes identically
    fields = pb.density_fields(linear_w(0.25, -0.5), spec, t, x, order3=True)
    assert np.allclose(np.asarray(fields.rho), 0.5)
    assert np.allclose(np.ravel(np.asarray(fields.r, dtype=float)), 0.0)
    assert np.allclose(np.ravel(np.asarray(fields.strong_residual, dtype=float)), 0.0)
    # w = -x/2 without the time gauge: r = -1/4, strong residual still 0
    fields = pb.density_fields(linear_w(0.0, -0.5), spec, t, x, order3=True)
    assert np.allclose(np.ravel(np.asarray(fields.r, dtype=float)), -0.25)
    assert np.allclose(np.ravel(np.asarray(fields.strong_residual, dtype=float)), 0.0)


def test_gauge_constant_shift_of_w():
    spec = pb.ProblemSpec("burgers", nu=0.1)
    t = np.array([0.5])
    x = np.array([0.3])

    def shifted(cols, layout):
        jets = jt.lift_inputs(cols, layout)
        return jt.sin(jets["x"] * (2 * np.pi)) * 0.1 + jets["t"] * 0.2 + 3.0

    def base(cols, layout):
        jets = jt.lift_inputs(cols, layout)
        return jt.sin(jets["x"] * (2 * np.pi)) * 0.1 + jets["t"] * 0.2

    fa = pb.density_fields(shifted, spec, t, x, order3=True)
    fb = pb.density_fields(base, spec, t, x, order3=True)
    assert np.allclose(np.asarray(fa.rho), np.asarray(fb.rho))
    assert np.allclose(np.asarray(fa.strong_residual), np.asarray(fb.strong_residual))


def test_candidate_control_values():
    spec = pb.ProblemSpec("heat", nu=1.0)
    t = np.array([0.0])
    x = np.array([0.25])
    # w = -x/2 + 0.1 t: rho = 1/2, r = 0.1, control = 0.1 / sqrt(0.25) = 0.2
    fields = pb.density_fields(linear_w(0.1, -0.5), spec, t, x)
    control, events = pb.candidate_control(fields, 1e-6)
    assert events == 0
    assert np.allclose(np.asarray(control), 0.2)


def test_candidate_control_clamps_and_counts():
    spec = pb.ProblemSpec("heat", nu=1.0)
    # rho = 1.2 from w = -1.2 x
    fields = pb.density_fields(linear_w(0.1, -1.2), spec,
                               np.array([0.0]), np.array([0.5]))
    control, events = pb.candidate_control(fields, 1e-6)
    assert events == 1
    phi = (1 - 1e-6) * 1e-6
    assert np.allclose(np.asarray(control), 0.1 / np.sqrt(phi))


def test_heat_exact_has_zero_strong_residual():
    nu, a = 0.07, 0.3
    spec = pb.ProblemSpec("heat", nu=nu)

    def w_fn(cols, layout):
        jets = jt.lift_inputs(cols, layout)
        decay = jt.exp(jets["t"] * (-4 * np.pi ** 2 * nu))
        # w with -d/dx w = 1/2 + a e^{-4 pi^2 nu t} sin(2 pi x)
        return jets["x"] * (-0.5) + jt.cos(jets["x"] * (2 * np.pi)) * decay * (a / (2 * np.pi))

    rng = np.random.default_rng(0)
    t = rng.uniform(0, 1, size=40)
    x = rng.uniform(0, 1, size=40)
    fields = pb.density_fields(w_fn, spec, t, x, order3=True)
    rho = np.asarray(fields.rho)
    assert np.allclose(rho, rf.heat_exact(nu, a, t, x), atol=1e-12)
    assert np.max(np.abs(np.asarray(fields.strong_residual))) < 1e-10


def test_stream_velocity_is_divergence_free():
    rng = np.random.default_rng(1)
    from thinn import network as nw
    net = nw.MLP.init((3, 10, 1), seed=11)
    fn = pb.mlp_field_fn(net)
    t = rng.uniform(0, 1, size=30)
    x = rng.uniform(0, 2 * np.pi, size=30)
    y = rng.uniform(0, 2 * np.pi, size=30)
    cols = {"t": t, "x": x, "y": y}
    jpsi = fn(cols, jt.stream_layout())
    u_x = np.asarray(jpsi[("x", "y")])
    v_y = -np.asarray(jpsi[("x", "y")])
    div = u_x + v_y
    scale = np.abs(u_x) + 1.0
    assert np.all(np.abs(div) <= 8 * np.spacing(scale))


def test_taylor_green_residual_vanishes():
    nu = 0.5
    spec = pb.ProblemSpec("nse", nu=nu, T=2.0)

    def psi_fn(cols, layout):
        jets = jt.lift_inputs(cols, layout)
        return jt.sin(jets["x"]) * jt.sin(jets["y"]) * jt.exp(jets["t"] * (-2 * nu))

    def p_fn(cols, layout):
        jets = jt.lift_inputs(cols, layout)
        e4 = jt.exp(jets["t"] * (-4 * nu))
        return (jt.cos(jets["x"] * 2.0) + jt.cos(jets["y"] * 2.0)) * e4 * 0.25

    rng = np.random.default_rng(2)
    t = rng.uniform(0, 2, size=50)
    x = rng.uniform(0, 2 * np.pi, size=50)
    y = rng.uniform(0, 2 * np.pi, size=50)
    fields = pb.velocity_fields(psi_fn, p_fn, spec, t, x, y)
    u, v, _ = rf.taylor_green(nu, t, x, y)
    assert np.allclose(np.asarray(fields.u[0]), u, atol=1e-12)
    assert np.allclose(np.asarray(fields.u[1]), v, atol=1e-12)
    assert np.max(np.abs(np.asarray(fields.residual[0]))) < 1e-8
    assert np.max(np.abs(np.asarray(fields.residual[1]))) < 1e-8


def test_initial_conditions_ranges():
    x = np.linspace(0, 1, 513)
    sine = pb.sine_ic()(x)
    bump = pb.bump_ic()(x)
    assert np.all((sine >= 0.1 - 1e-12) & (sine <= 0.9 + 1e-12))
    assert np.all((bump >= 0.05 - 1e-12) & (bump <= 0.95 + 1e-12))
    assert np.allclose(pb.constant_ic(0.5)(x), 0.5)
    u0, v0 = pb.taylor_green_ic(0.5)(np.array([np.pi / 2]), np.array([0.0]))
    assert np.isclose(u0[0], 1.0)
    assert np.isclose(v0[0], 0.0)
