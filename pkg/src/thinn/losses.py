"""Discretized loss functionals for training and held-out evaluation.

Density problems (heat/Burgers): the dynamic term is the quadrature of the
squared candidate control |r|^2 / mobility, the initial term the mixed
relative-entropy integrand, and the boundary term the squared periodic
mismatch of the density, its gradient, and the auxiliary flux.  The
L2-residual baseline shares the architecture and boundary term but penalizes
the strong residual and the squared initial distance.

Flow problem: the dynamic term sums |R_k|^2 / |k|^2 over the truncated mode
set of the strong residual on a uniform grid, per collocation time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets as jt
from . import problems as pb
from . import quadrature as qd
from . import tape as tp


class LossError(ValueError):
    pass


@dataclass(frozen=True)
class LossConfig:
    eps_phi: float = 1e-6
    bc_terms: tuple = ("rho", "grad", "r")   # periodic-mismatch fields
    w_dyn: float = 1.0
    w_ic: float = 1.0
    w_bc: float = 1.0
    mean_mode_penalty: bool = False


@dataclass
class LossBreakdown:
    i_dyn: object
    i_0: object
    l_bc: object
    clamp_events: int = 0

    @property
    def total(self):
        return tp.add(tp.add(self.i_dyn, self.i_0), self.l_bc)

    def floats(self):
        return (float(tp._val(self.i_dyn)), float(tp._val(self.i_0)),
                float(tp._val(self.l_bc)), float(tp._val(self.total)))


def _eval_rho(w_fn, t, x, layout=None):
    layout = layout or jt.gradient_layout(("t", "x"))
    jw = w_fn({"t": np.asarray(t, float), "x": np.asarray(x, float)}, layout)
    return tp.mul(-1.0, jw[("x",)])


# -- density problems -------------------------------------------------------


def thinn_dyn_integrand(fields, eps_phi):
    """Pointwise |r|^2 / mobility(clamped rho); returns (values, events)."""
    rho_c, events = pb.clamped_density(fields.rho, eps_phi)
    phi = pb.mobility(rho_c)
    return tp.div(tp.square(fields.r), phi), events


def thinn_dyn_loss(w_fn, spec, scheme, cfg=LossConfig()):
    t, x = scheme.phy_points
    fields = pb.density_fields(w_fn, spec, t, x[:, 0])
    integrand, events = thinn_dyn_integrand(fields, cfg.eps_phi)
    return tp.mul(scheme.w_t * scheme.w_x_phy, tp.asum(integrand)), events


def entropy_h(a, b):
    """Mixed relative-entropy density h(a, b) >= 0 for a, b in (0, 1)."""
    return tp.add(tp.mul(a, tp.sub(tp.log(a), np.log(b))),
                  tp.mul(tp.sub(1.0, a),
                         tp.sub(tp.log(tp.sub(1.0, a)), np.log1p(-b))))


def thinn_init_loss(w_fn, spec, scheme, rho0, cfg=LossConfig()):
    x = scheme.x_ic[:, 0]
    rho = _eval_rho(w_fn, np.zeros_like(x), x)
    rho_c, events = pb.clamped_density(rho, cfg.eps_phi, through=True)
    b = np.asarray(rho0(x), float)
    if np.any(b <= 0.0) or np.any(b >= 1.0):
        raise LossError("initial profile must take values inside (0, 1)")
    return tp.mul(scheme.w_x_ic, tp.asum(entropy_h(rho_c, b))), events


def _density_bc_fields(w_fn, spec, t, x):
    fields = pb.density_fields(w_fn, spec, t, x)
    return {"rho": fields.rho, "grad": fields.rho_x, "r": fields.r}


def thinn_bc_loss(w_fn, spec, scheme, cfg=LossConfig()):
    acc = 0.0
    for (t, x) in scheme.bd:
        lo = _density_bc_fields(w_fn, spec, t, x[:, 0])
        hi = _density_bc_fields(w_fn, spec, t, x[:, 0] + spec.side)
        for term in cfg.bc_terms:
            diff = tp.sub(hi[term], lo[term])
            acc = tp.add(acc, tp.asum(tp.square(diff)))
    return tp.mul(scheme.w_bd, acc)


def pinn_dyn_loss(w_fn, spec, scheme):
    t, x = scheme.phy_points
    fields = pb.density_fields(w_fn, spec, t, x[:, 0], order3=True)
    return tp.mul(scheme.w_t * scheme.w_x_phy,
                  tp.asum(tp.square(fields.strong_residual)))


def pinn_init_loss(w_fn, scheme, rho0):
    x = scheme.x_ic[:, 0]
    rho = _eval_rho(w_fn, np.zeros_like(x), x)
    diff = tp.sub(rho, np.asarray(rho0(x), float))
    return tp.mul(scheme.w_x_ic, tp.asum(tp.square(diff)))


def density_loss(w_fn, spec, scheme, rho0, kind="thinn", cfg=LossConfig()):
    """Full loss for a density problem; `kind` is 'thinn' or 'pinn-l2'."""
    if kind == "thinn":
        i_dyn, ev_d = thinn_dyn_loss(w_fn, spec, scheme, cfg)
        i_0, ev_0 = thinn_init_loss(w_fn, spec, scheme, rho0, cfg)
        events = ev_d + ev_0
    elif kind == "pinn-l2":
        i_dyn = pinn_dyn_loss(w_fn, spec, scheme)
        i_0 = pinn_init_loss(w_fn, scheme, rho0)
        events = 0
    else:
        raise LossError(f"unknown loss kind {kind!r}")
    l_bc = thinn_bc_loss(w_fn, spec, scheme, cfg)
    return LossBreakdown(i_dyn=tp.mul(cfg.w_dyn, i_dyn),
                         i_0=tp.mul(cfg.w_ic, i_0),
                         l_bc=tp.mul(cfg.w_bc, l_bc),
                         clamp_events=events)


# -- flow problem -----------------------------------------------------------


def residual_mode_sum(Rx, Ry, M, N, fourier=None, mean_mode=False):
    """Sum of |R_k|^2 / |k|^2 over 0 < |k|_inf <= N for each row of R.

    Rx, Ry have shape (n_t, M*M) (arrays or tape nodes); returns a scalar
    summed over rows (times) without the time weight.
    """
    C, S, wk = fourier if fourier is not None else qd.fourier_matrices(M, N)
    inv_m4 = 1.0 / float(M) ** 4
    acc = 0.0
    for R in (Rx, Ry):
        a = tp.matmul(R, C.T)
        b = tp.matmul(R, S.T)
        contrib = tp.add(tp.square(a), tp.square(b))
        acc = tp.add(acc, tp.asum(tp.mul(contrib, wk * inv_m4)))
        if mean_mode:
            mean = tp.mul(1.0 / float(M) ** 2, _row_sum(R))
            acc = tp.add(acc, tp.asum(tp.square(mean)))
    return acc


def _row_sum(R):
    if isinstance(R, tp.Node):
        ones = np.ones((np.shape(R.value)[1], 1))
        return tp.matmul(R, ones)
    return np.sum(R, axis=1, keepdims=True)


def _reshape(x, shape):
    if isinstance(x, tp.Node):
        old = np.shape(x.value)
        return tp.Node(x.tape, x.value.reshape(shape), (x,),
                       lambda g: (g.reshape(old),))
    return np.reshape(x, shape)


def nse_dyn_loss(psi_fn, p_fn, spec, scheme, cfg=LossConfig(), fourier=None):
    n_t = len(scheme.t_phy)
    mm = scheme.grid.shape[0]
    t = np.repeat(scheme.t_phy, mm)
    xy = np.tile(scheme.grid, (n_t, 1))
    fields = pb.velocity_fields(psi_fn, p_fn, spec, t, xy[:, 0], xy[:, 1])
    Rx = _reshape(fields.residual[0], (n_t, mm))
    Ry = _reshape(fields.residual[1], (n_t, mm))
    total = residual_mode_sum(Rx, Ry, scheme.M, scheme.N, fourier=fourier,
                              mean_mode=cfg.mean_mode_penalty)
    return tp.mul(scheme.w_t, total)


def nse_pinn_dyn_loss(psi_fn, p_fn, spec, scheme):
    """L2-in-space residual baseline on the same grid and times."""
    n_t = len(scheme.t_phy)
    mm = scheme.grid.shape[0]
    t = np.repeat(scheme.t_phy, mm)
    xy = np.tile(scheme.grid, (n_t, 1))
    fields = pb.velocity_fields(psi_fn, p_fn, spec, t, xy[:, 0], xy[:, 1])
    cell = spec.volume / mm
    sq = tp.add(tp.square(fields.residual[0]), tp.square(fields.residual[1]))
    return tp.mul(scheme.w_t * cell, tp.asum(sq))


def nse_init_loss(psi_fn, spec, scheme, u0):
    x, y = scheme.x_ic[:, 0], scheme.x_ic[:, 1]
    (u, v), _ = pb.velocity_only(psi_fn, np.zeros_like(x), x, y)
    u0x, u0y = u0(x, y)
    sq = tp.add(tp.square(tp.sub(u, u0x)), tp.square(tp.sub(v, u0y)))
    return tp.mul(scheme.w_x_ic, tp.asum(sq))


def nse_bc_loss(psi_fn, spec, scheme):
    acc = 0.0
    for i, (t, x) in enumerate(scheme.bd):
        shift = np.zeros(2)
        shift[i] = spec.side
        lo_u, lo_g = pb.velocity_only(psi_fn, t, x[:, 0], x[:, 1], with_grad=True)
        hi_u, hi_g = pb.velocity_only(psi_fn, t, x[:, 0] + shift[0],
                                      x[:, 1] + shift[1], with_grad=True)
        for a, b in zip(lo_u + lo_g, hi_u + hi_g):
            acc = tp.add(acc, tp.asum(tp.square(tp.sub(b, a))))
    return tp.mul(scheme.w_bd, acc)


def nse_loss(psi_fn, p_fn, spec, scheme, u0, kind="thinn", cfg=LossConfig(),
             fourier=None):
    if kind == "thinn":
        i_dyn = nse_dyn_loss(psi_fn, p_fn, spec, scheme, cfg, fourier=fourier)
    elif kind == "pinn-l2":
        i_dyn = nse_pinn_dyn_loss(psi_fn, p_fn, spec, scheme)
    else:
        raise LossError(f"unknown loss kind {kind!r}")
    i_0 = nse_init_loss(psi_fn, spec, scheme, u0)
    l_bc = nse_bc_loss(psi_fn, spec, scheme)
    return LossBreakdown(i_dyn=tp.mul(cfg.w_dyn, i_dyn),
                         i_0=tp.mul(cfg.w_ic, i_0),
                         l_bc=tp.mul(cfg.w_bc, l_bc),
                         clamp_events=0)
