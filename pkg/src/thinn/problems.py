"""Problem definitions and field constructions.

The 1-D density problems (heat, viscous Burgers) represent the density as the
negative divergence of a potential field w, so that the controlled form of
the dynamics is solvable in closed form by the candidate control
g = r * mobility^{-1/2}, with r the auxiliary flux.  The 2-D incompressible
problem represents the velocity through a stream function, which makes the
field divergence-free identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets as jt
from . import tape as tp

TWO_PI = 2.0 * np.pi


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    kind: str                  # 'heat' | 'burgers' | 'nse'
    nu: float
    T: float = 1.0

    def __post_init__(self):
        if self.kind not in ("heat", "burgers", "nse"):
            raise ProblemError(f"unknown problem kind {self.kind!r}")
        if self.nu <= 0 or self.T <= 0:
            raise ProblemError("nu and T must be positive")

    @property
    def dim(self):
        return 2 if self.kind == "nse" else 1

    @property
    def side(self):
        """Spatial period (unit interval for densities, 2*pi for flow)."""
        return TWO_PI if self.kind == "nse" else 1.0

    @property
    def volume(self):
        return self.side ** self.dim

    @property
    def face_area(self):
        return self.side ** (self.dim - 1)


def mobility(rho):
    """Exclusion-process mobility rho*(1-rho)."""
    return tp.mul(rho, tp.sub(1.0, rho))


def clamped_density(rho, eps, through=False):
    """Clamp the density into [eps, 1-eps]; also report the event count.

    With `through` the gradient passes straight through the clamp, which
    keeps clamped points trainable (used by the entropy initial term).
    """
    vals = np.asarray(tp._val(rho))
    events = int(np.count_nonzero((vals < eps) | (vals > 1.0 - eps)))
    clamp = tp.clip_through if through else tp.clip
    return clamp(rho, eps, 1.0 - eps), events


# -- density problems (d = 1) -----------------------------------------------


@dataclass
class DensityFields:
    w: object
    rho: object
    w_t: object
    w_xx: object
    rho_x: object
    r: object
    strong_residual: object = None
    t: np.ndarray = None
    x: np.ndarray = None


def density_fields(w_fn, spec, t, x, order3=False):
    """Evaluate the potential network and derived fields at points (t, x).

    `w_fn` maps a seeded input jet (layout with dirs (t, x)) to the scalar
    output jet; typically `mlp_density_fn(net, ...)`.  With `order3` the
    strong residual (time derivative minus the generator) is also assembled.
    """
    if spec.kind not in ("heat", "burgers"):
        raise ProblemError("density fields are defined for heat/burgers only")
    layout = jt.density_layout_1d(order3=order3)
    jw = w_fn({"t": np.asarray(t, float), "x": np.asarray(x, float)}, layout)
    w = jw[()]
    w_t = jw[("t",)]
    w_x = jw[("x",)]
    w_xx = jw[("x", "x")]
    rho = tp.mul(-1.0, w_x)
    rho_x = tp.mul(-1.0, w_xx)
    if spec.kind == "heat":
        r = tp.sub(w_t, tp.mul(spec.nu, w_xx))
    else:
        r = tp.sub(tp.sub(w_t, tp.mul(spec.nu, w_xx)), mobility(rho))
    fields = DensityFields(w=w, rho=rho, w_t=w_t, w_xx=w_xx, rho_x=rho_x, r=r,
                           t=np.asarray(t, float), x=np.asarray(x, float))
    if order3:
        w_tx = jw[("t", "x")]
        w_xxx = jw[("x", "x", "x")]
        rho_t = tp.mul(-1.0, w_tx)
        rho_xx = tp.mul(-1.0, w_xxx)
        res = tp.sub(rho_t, tp.mul(spec.nu, rho_xx))
        if spec.kind == "burgers":
            # + d/dx of the flux rho*(1-rho)
            res = tp.add(res, tp.mul(tp.sub(1.0, tp.mul(2.0, rho)), rho_x))
        fields.strong_residual = res
    return fields


def candidate_control(fields, eps_phi):
    """Closed-form control r * mobility(rho)^{-1/2}, with clamped mobility.

    Returns (control, clamp_events).
    """
    rho_c, events = clamped_density(fields.rho, eps_phi)
    phi = mobility(rho_c)
    return tp.mul(fields.r, tp.powc(phi, -0.5)), events


def mlp_density_fn(net, leaves=None):
    """Adapt an MLP (2 inputs -> 1 output) to the `w_fn` interface."""
    def w_fn(columns, layout):
        inp = jt.stack_inputs(columns, layout)
        out = net.forward_jets(inp, leaves=leaves)
        return _squeeze_jet(out)
    return w_fn


def _squeeze_jet(jet):
    coeffs = {}
    for key, c in jet.coeffs.items():
        if jt._is_zero(c):
            coeffs[key] = 0.0
        elif isinstance(c, tp.Node):
            coeffs[key] = tp.Node(c.tape, c.value[:, 0], (c,),
                                  lambda g, shape=c.value.shape: (
                                      _expand_col(g, shape),))
        else:
            coeffs[key] = np.asarray(c)[..., 0]
    return jt.Jet(jet.layout, coeffs)


def _expand_col(g, shape):
    out = np.zeros(shape)
    out[:, 0] = g
    return out


# -- incompressible flow (d = 2) --------------------------------------------


@dataclass
class VelocityFields:
    psi: object
    u: tuple            # (u, v)
    u_t: tuple
    lap_u: tuple
    grad_u: tuple       # (u_x, u_y, v_x, v_y)
    grad_p: tuple
    residual: tuple     # (R_x, R_y)


def velocity_fields(psi_fn, p_fn, spec, t, x, y):
    """Stream-function velocity and the strong flow residual at (t, x, y)."""
    if spec.kind != "nse":
        raise ProblemError("velocity fields require the flow problem")
    cols = {"t": np.asarray(t, float), "x": np.asarray(x, float),
            "y": np.asarray(y, float)}
    jpsi = psi_fn(cols, jt.stream_layout())
    u = jpsi[("y",)]
    v = tp.mul(-1.0, jpsi[("x",)])
    u_t = jpsi[("t", "y")]
    v_t = tp.mul(-1.0, jpsi[("t", "x")])
    u_x = jpsi[("x", "y")]
    u_y = jpsi[("y", "y")]
    v_x = tp.mul(-1.0, jpsi[("x", "x")])
    v_y = tp.mul(-1.0, jpsi[("x", "y")])
    lap_u = tp.add(jpsi[("x", "x", "y")], jpsi[("y", "y", "y")])
    lap_v = tp.mul(-1.0, tp.add(jpsi[("x", "x", "x")], jpsi[("x", "y", "y")]))
    jp = p_fn(cols, jt.gradient_layout(("t", "x", "y")))
    p_x = jp[("x",)]
    p_y = jp[("y",)]
    # convective term (u . grad) u; equals div(u x u) since div u = 0
    conv_x = tp.add(tp.mul(u, u_x), tp.mul(v, u_y))
    conv_y = tp.add(tp.mul(u, v_x), tp.mul(v, v_y))
    R_x = tp.add(tp.sub(u_t, tp.mul(spec.nu, lap_u)), tp.add(conv_x, p_x))
    R_y = tp.add(tp.sub(v_t, tp.mul(spec.nu, lap_v)), tp.add(conv_y, p_y))
    return VelocityFields(
        psi=jpsi[()], u=(u, v), u_t=(u_t, v_t), lap_u=(lap_u, lap_v),
        grad_u=(u_x, u_y, v_x, v_y), grad_p=(p_x, p_y), residual=(R_x, R_y))


def velocity_only(psi_fn, t, x, y, with_grad=False):
    """Velocity (and optionally its gradient) without the full residual."""
    cols = {"t": np.asarray(t, float), "x": np.asarray(x, float),
            "y": np.asarray(y, float)}
    layout = jt.spatial2_layout() if with_grad else jt.gradient_layout(("t", "x", "y"))
    jpsi = psi_fn(cols, layout)
    u = jpsi[("y",)]
    v = tp.mul(-1.0, jpsi[("x",)])
    if not with_grad:
        return (u, v), None
    grad = (jpsi[("x", "y")], jpsi[("y", "y")],
            tp.mul(-1.0, jpsi[("x", "x")]), tp.mul(-1.0, jpsi[("x", "y")]))
    return (u, v), grad


def mlp_field_fn(net, leaves=None):
    """Adapt an MLP (3 inputs -> 1 output) to the psi/p field interface."""
    def fn(columns, layout):
        inp = jt.stack_inputs(columns, layout)
        return _squeeze_jet(net.forward_jets(inp, leaves=leaves))
    return fn


# -- initial conditions -----------------------------------------------------


def sine_ic(amplitude=0.4):
    def rho0(x):
        return 0.5 + amplitude * np.sin(TWO_PI * np.asarray(x, float))
    return rho0


def bump_ic(floor=0.05, height=0.9):
    def rho0(x):
        s = (1.0 - np.cos(TWO_PI * np.asarray(x, float))) / 2.0
        return floor + height * s ** 4
    return rho0


def constant_ic(level=0.5):
    def rho0(x):
        return np.full_like(np.asarray(x, float), level)
    return rho0


def taylor_green_ic(nu):
    def u0(x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        return np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)
    return u0


DENSITY_ICS = {"sine": sine_ic, "bump": bump_ic, "constant": constant_ic}
