"""Evaluation metrics and entropy/Fisher diagnostics.

Relative errors are computed on a fixed uniform tensor grid (reproducible,
disjoint from the random training collocation points).  The certificate
collects every individually computable factor of the non-periodicity defect
bound together with the entropy/Fisher distances to a reference; the unknown
multiplicative constants are deliberately not estimated.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import jets as jt
from . import problems as pb
from . import tape as tp

METRICS_HEADER = "step,eps1,eps2,rate,i_dyn,i_0,l_bc,clamp_events"


class MetricError(ValueError):
    pass


@dataclass
class MetricsRow:
    step: int
    eps1: float
    eps2: float
    rate: float
    i_dyn: float
    i_0: float
    l_bc: float
    clamp_events: int

    def csv_line(self):
        return (f"{self.step},{self.eps1:.17g},{self.eps2:.17g},"
                f"{self.rate:.17g},{self.i_dyn:.17g},{self.i_0:.17g},"
                f"{self.l_bc:.17g},{self.clamp_events}")


def read_metrics_csv(path):
    with open(path) as f:
        reader = csv.DictReader(f)
        rows = list(reader)
    return rows


def relative_error(approx, reference, p):
    """Percent relative L^p distance on a shared evaluation grid."""
    if p not in (1, 2):
        raise MetricError("p must be 1 or 2")
    approx = np.asarray(approx, float)
    reference = np.asarray(reference, float)
    ref_norm = np.mean(np.abs(reference) ** p) ** (1.0 / p)
    if ref_norm == 0.0:
        raise MetricError("reference norm vanishes; relative error undefined")
    err = np.mean(np.abs(approx - reference) ** p) ** (1.0 / p)
    return 100.0 * err / ref_norm


# -- entropy / Fisher -------------------------------------------------------


def _clamp01(f, eps):
    vals = np.asarray(f, float)
    events = int(np.count_nonzero((vals < eps) | (vals > 1.0 - eps)))
    return np.clip(vals, eps, 1.0 - eps), events


def relative_entropy(f, g, weights):
    f = np.asarray(f, float)
    g = np.asarray(g, float)
    return float(np.sum(f * np.log(f / g) * weights))


def symmetric_entropy(f, g, weights, eps=1e-6):
    """H(f|g) + H(1-f|1-g) on a grid with quadrature weights."""
    fc, _ = _clamp01(f, eps)
    gc, _ = _clamp01(g, eps)
    return relative_entropy(fc, gc, weights) + \
        relative_entropy(1.0 - fc, 1.0 - gc, weights)


def _periodic_grad(f, dx):
    return (np.roll(f, -1, axis=-1) - np.roll(f, 1, axis=-1)) / (2.0 * dx)


def symmetric_fisher(f, g, dx, eps=1e-6):
    """Gradient-weighted analogue of the symmetric entropy on a 1-D grid.

    Gradients are central finite differences with periodic wrap; `dx` is the
    grid spacing and the quadrature weight.
    """
    fc, _ = _clamp01(f, eps)
    gc, _ = _clamp01(g, eps)
    out = 0.0
    for a, b in ((fc, gc), (1.0 - fc, 1.0 - gc)):
        grad_log = _periodic_grad(np.log(a / b), dx)
        out += float(np.sum(a * grad_log ** 2) * dx)
    return out


def pinsker_check(f, g, weights, tol=1e-8):
    """lhs = (1/2)(integral |f-g|)^2, rhs = H(f|g); ok iff lhs <= rhs."""
    f = np.asarray(f, float)
    g = np.asarray(g, float)
    for name, h in (("f", f), ("g", g)):
        mass = float(np.sum(h * weights))
        if abs(mass - 1.0) > tol:
            raise MetricError(f"{name} is not normalized (mass {mass:.3e})")
    lhs = 0.5 * float(np.sum(np.abs(f - g) * weights)) ** 2
    rhs = relative_entropy(np.clip(f, 1e-300, None), np.clip(g, 1e-300, None),
                           weights)
    return {"lhs": lhs, "rhs": rhs, "ok": lhs <= rhs + 1e-12}


# -- density evaluation grids -----------------------------------------------


def density_eval_grid(spec, n_t=128, n_x=256):
    """Uniform interior tensor grid (t_i, x_j), cell-centered in x."""
    ts = np.linspace(0.0, spec.T, n_t)
    xs = (np.arange(n_x) + 0.5) / n_x
    return ts, xs


def eval_density_on_grid(w_fn, ts, xs):
    t = np.repeat(ts, len(xs))
    x = np.tile(xs, len(ts))
    jw = w_fn({"t": t, "x": x}, jt.gradient_layout(("t", "x")))
    rho = tp._val(tp.mul(-1.0, jw[("x",)]))
    return np.asarray(rho).reshape(len(ts), len(xs))


def density_errors(w_fn, spec, reference, n_t=128, n_x=256):
    ts, xs = density_eval_grid(spec, n_t, n_x)
    approx = eval_density_on_grid(w_fn, ts, xs)
    ref = reference.sample(ts, xs)
    return relative_error(approx, ref, 1), relative_error(approx, ref, 2)


def velocity_errors(psi_fn, spec, nu, n_t=16, n_m=64):
    from . import reference as rf
    ts = np.linspace(0.0, spec.T, n_t)
    xs = (np.arange(n_m) + 0.5) * (spec.side / n_m)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    t = np.repeat(ts, n_m * n_m)
    x = np.tile(X.ravel(), n_t)
    y = np.tile(Y.ravel(), n_t)
    (u, v), _ = pb.velocity_only(psi_fn, t, x, y)
    u, v = np.asarray(tp._val(u)), np.asarray(tp._val(v))
    ur, vr, _ = rf.taylor_green(nu, t, x, y)
    approx = np.stack([u, v])
    ref = np.stack([ur, vr])
    eps1 = 100.0 * np.mean(np.abs(approx - ref)) / np.mean(np.abs(ref))
    eps2 = 100.0 * np.sqrt(np.mean((approx - ref) ** 2) / np.mean(ref ** 2))
    return eps1, eps2


# -- certificate ------------------------------------------------------------


@dataclass
class Certificate:
    ell_terms: dict = field(default_factory=dict)
    norm_factors: dict = field(default_factory=dict)
    entropy_trace: list = field(default_factory=list)   # (t, H_s)
    fisher_integral: float = 0.0
    pinsker: list = field(default_factory=list)         # (t, lhs, H_s)
    clamp_events: int = 0

    def as_rows(self):
        rows = [("ell_" + k, v) for k, v in sorted(self.ell_terms.items())]
        rows += [("norm_" + k, v) for k, v in sorted(self.norm_factors.items())]
        rows += [(f"entropy_t{t:.6g}", h) for t, h in self.entropy_trace]
        rows.append(("fisher_integral", self.fisher_integral))
        rows.append(("clamp_events", float(self.clamp_events)))
        return rows


def _density_face_values(w_fn, spec, t, x, eps):
    fields = pb.density_fields(w_fn, spec, t, x)

    def trace(a):
        return np.broadcast_to(np.asarray(tp._val(a), float), t.shape)

    rho = trace(fields.rho)
    rho_c, events = _clamp01(rho, eps)
    return {
        "rho": rho,
        "grad_rho": trace(fields.rho_x),
        "r": trace(fields.r),
        "log_rho": np.log(rho_c),
        "log_one_minus_rho": np.log(1.0 - rho_c),
    }, events


def certificate(w_fn, spec, reference, n_t=64, n_x=128, eps=1e-6):
    """Boundary-defect factors, norm factors, and entropy/Fisher distances."""
    if spec.kind not in ("heat", "burgers"):
        raise MetricError("certificate applies to density problems")
    cert = Certificate()
    ts = np.linspace(0.0, spec.T, n_t)
    w_time = spec.T / n_t

    # periodic-mismatch terms, quadrature in time over the two face traces
    lo, ev0 = _density_face_values(w_fn, spec, ts, np.zeros_like(ts), eps)
    hi, ev1 = _density_face_values(w_fn, spec, ts, np.ones_like(ts), eps)
    cert.clamp_events += ev0 + ev1
    for key in lo:
        cert.ell_terms[key] = float(np.sum((hi[key] - lo[key]) ** 2) * w_time)

    # space-time norm factors on a tensor grid
    xs = (np.arange(n_x) + 0.5) / n_x
    t_flat = np.repeat(ts, n_x)
    x_flat = np.tile(xs, n_t)
    fields = pb.density_fields(w_fn, spec, t_flat, x_flat)

    def grid(a):
        vals = np.asarray(tp._val(a), float)
        return np.broadcast_to(vals, t_flat.shape).reshape(n_t, n_x)

    rho = grid(fields.rho)
    rho_x = grid(fields.rho_x)
    w_cell = w_time * (1.0 / n_x)

    def l2(a):
        return float(np.sqrt(np.sum(np.asarray(a) ** 2) * w_cell))

    rho_c, ev = _clamp01(rho, eps)
    cert.clamp_events += ev
    dlog = _periodic_grad(np.log(rho_c), 1.0 / n_x)
    dlog1m = _periodic_grad(np.log(1.0 - rho_c), 1.0 / n_x)
    cert.norm_factors["rho_h2"] = float(np.sqrt(
        np.sum(rho ** 2 + rho_x ** 2 + _periodic_grad(rho_x, 1.0 / n_x) ** 2)
        * w_cell))
    cert.norm_factors["r_l2"] = l2(grid(fields.r))
    cert.norm_factors["log_rho_h1"] = float(np.sqrt(
        np.sum(np.log(rho_c) ** 2 + dlog ** 2) * w_cell))
    cert.norm_factors["log_one_minus_rho_h1"] = float(np.sqrt(
        np.sum(np.log(1.0 - rho_c) ** 2 + dlog1m ** 2) * w_cell))
    if reference is not None:
        ref = reference.sample(ts, xs)
        cert.norm_factors["reference_h2"] = float(np.sqrt(
            np.sum(ref ** 2 + _periodic_grad(ref, 1.0 / n_x) ** 2
                   + _periodic_grad(_periodic_grad(ref, 1.0 / n_x),
                                    1.0 / n_x) ** 2) * w_cell))
        fisher = 0.0
        for i, t in enumerate(ts):
            hs = symmetric_entropy(rho[i], ref[i], np.full(n_x, 1.0 / n_x), eps)
            l1 = float(np.sum(np.abs(rho[i] - ref[i])) / n_x)
            cert.entropy_trace.append((float(t), hs))
            cert.pinsker.append((float(t), 0.5 * l1 ** 2, hs))
            fisher += symmetric_fisher(rho[i], ref[i], 1.0 / n_x, eps) * w_time
        cert.fisher_integral = fisher
    return cert
