"""Ground-truth generators and spectral oracles.

The Burgers reference is an explicit conservative finite-difference scheme
(central diffusion, local Lax-Friedrichs flux) validated by mass
conservation and grid self-convergence.  The heat and Taylor-Green fields
are closed forms.  The spectral negative-Sobolev oracle gives an independent
evaluation route for the flow dynamic loss.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * np.pi


class ReferenceError(ValueError):
    pass


class CFLError(ReferenceError):
    pass


@dataclass
class GridSolution:
    times: np.ndarray
    points: np.ndarray               # (n_x,) sample locations in [0, side)
    values: np.ndarray               # (n_t, n_x) or (n_t, n_x, n_comp)
    metadata: dict = field(default_factory=dict)
    side: float = 1.0

    def sample(self, t, x):
        """Bilinear interpolation at tensor points (t outer, x inner).

        Returns an array of shape (len(t), len(x)); x wraps periodically.
        """
        t = np.atleast_1d(np.asarray(t, float))
        x = np.mod(np.atleast_1d(np.asarray(x, float)), self.side)
        # time interpolation weights
        it = np.searchsorted(self.times, t, side="right") - 1
        it = np.clip(it, 0, len(self.times) - 2)
        dt = self.times[it + 1] - self.times[it]
        wt = np.where(dt > 0, (t - self.times[it]) / np.where(dt > 0, dt, 1.0), 0.0)
        # periodic spatial interpolation
        xs = np.concatenate([self.points, [self.side]])
        vals = np.concatenate([self.values, self.values[:, :1]], axis=1)
        ix = np.searchsorted(xs, x, side="right") - 1
        ix = np.clip(ix, 0, len(xs) - 2)
        wx = (x - xs[ix]) / (xs[ix + 1] - xs[ix])
        lo = vals[it][:, ix]
        hi = vals[it + 1][:, ix]
        row0 = lo * (1 - wx) + vals[it][:, ix + 1] * wx
        row1 = hi * (1 - wx) + vals[it + 1][:, ix + 1] * wx
        return row0 * (1 - wt)[:, None] + row1 * wt[:, None]

    def save_csv(self, path):
        path = Path(path)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["t", "x", "value"])
            for i, t in enumerate(self.times):
                for j, x in enumerate(self.points):
                    writer.writerow([f"{t:.17g}", f"{x:.17g}",
                                     f"{self.values[i, j]:.17g}"])
        meta = path.with_suffix(path.suffix + ".meta")
        with open(meta, "w") as f:
            for k, v in self.metadata.items():
                f.write(f"{k} = {v}\n")

    @classmethod
    def load_csv(cls, path):
        path = Path(path)
        rows = np.loadtxt(path, delimiter=",", skiprows=1)
        times = np.unique(rows[:, 0])
        points = np.unique(rows[:, 1])
        values = rows[:, 2].reshape(len(times), len(points))
        metadata = {}
        meta = path.with_suffix(path.suffix + ".meta")
        if meta.exists():
            for line in meta.read_text().splitlines():
                k, _, v = line.partition("=")
                metadata[k.strip()] = v.strip()
        return cls(times=times, points=points, values=values, metadata=metadata)


# -- closed forms -----------------------------------------------------------


def heat_exact(nu, a, t, x):
    """Single-mode diffusion profile 1/2 + a e^{-4 pi^2 nu t} sin(2 pi x)."""
    if not 0.0 < a < 0.5:
        raise ReferenceError("amplitude must lie in (0, 1/2)")
    t = np.asarray(t, float)
    x = np.asarray(x, float)
    return 0.5 + a * np.exp(-4.0 * np.pi ** 2 * nu * t) * np.sin(TWO_PI * x)


def taylor_green(nu, t, x, y):
    """Decaying vortex: velocity pair and the compatible pressure."""
    t = np.asarray(t, float)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    e = np.exp(-2.0 * nu * t)
    u = np.sin(x) * np.cos(y) * e
    v = -np.cos(x) * np.sin(y) * e
    p = (np.cos(2.0 * x) + np.cos(2.0 * y)) * e * e / 4.0
    return u, v, p


def taylor_green_stream(nu, t, x, y):
    return np.sin(np.asarray(x, float)) * np.sin(np.asarray(y, float)) \
        * np.exp(-2.0 * nu * np.asarray(t, float))


# -- Burgers finite differences ---------------------------------------------


def _flux(rho):
    return rho * (1.0 - rho)


def _rusanov(rho):
    """Interface fluxes F_{j+1/2} with periodic wrap, local wave speed."""
    right = np.roll(rho, -1)
    a = np.maximum(np.abs(1.0 - 2.0 * rho), np.abs(1.0 - 2.0 * right))
    return 0.5 * (_flux(rho) + _flux(right)) - 0.5 * a * (right - rho)


def burgers_cfl_dt(nu, dx, eps=1e-12):
    return min(dx * dx / (2.0 * nu + eps), dx)   # max |f'| = 1 on [0, 1]


def burgers_fd(nu, rho0, n_x, T, n_out=257, dt=None):
    """Explicit conservative solve of the viscous conservation law.

    `rho0` is a callable initial profile on [0, 1).  Output frames are stored
    at `n_out` uniformly spaced times including 0 and T.
    """
    n_x = int(n_x)
    dx = 1.0 / n_x
    admissible = burgers_cfl_dt(nu, dx)
    if dt is None:
        dt = 0.9 * admissible
    elif dt > admissible:
        raise CFLError(f"dt {dt:g} violates the stability bound; "
                       f"use dt <= {admissible:g}")
    xs = np.arange(n_x) * dx
    rho = np.asarray(rho0(xs), float).copy()
    n_steps = int(np.ceil(T / dt))
    dt = T / n_steps
    out_times = np.linspace(0.0, T, int(n_out))
    frames = np.empty((len(out_times), n_x))
    frames[0] = rho
    next_out = 1
    for step in range(1, n_steps + 1):
        F = _rusanov(rho)
        diff = np.roll(rho, -1) - 2.0 * rho + np.roll(rho, 1)
        rho = rho - (dt / dx) * (F - np.roll(F, 1)) + (nu * dt / dx ** 2) * diff
        t_now = step * dt
        while next_out < len(out_times) and out_times[next_out] <= t_now + 1e-12:
            frames[next_out] = rho
            next_out += 1
    if np.any(rho < -1e-10) or np.any(rho > 1.0 + 1e-10):
        raise ReferenceError("solution left the invariant region [0, 1]")
    return GridSolution(
        times=out_times, points=xs, values=frames, side=1.0,
        metadata={"problem": "burgers", "nu": nu, "T": T, "n_x": n_x,
                  "dt": dt, "scheme": "rusanov+central"})


def heat_reference(nu, a, T, n_x=512, n_out=257):
    xs = np.arange(int(n_x)) / int(n_x)
    ts = np.linspace(0.0, T, int(n_out))
    vals = heat_exact(nu, a, ts[:, None], xs[None, :])
    return GridSolution(times=ts, points=xs, values=vals, side=1.0,
                        metadata={"problem": "heat", "nu": nu, "a": a, "T": T})


# -- spectral oracle --------------------------------------------------------


def poisson_h_minus_one(R):
    """Mean-free negative-Sobolev energy of a field on an M x M grid.

    Solves the Poisson problem spectrally and returns the duality pairing
    normalized by the domain area; for a single component this equals the
    truncated mode sum of |R_k|^2 / |k|^2 over all grid modes.
    """
    R = np.asarray(R, float)
    M = R.shape[0]
    if R.shape != (M, M):
        raise ReferenceError("expected a square grid field")
    Rhat = np.fft.fft2(R)
    k = np.fft.fftfreq(M, d=1.0 / M)
    k2 = k[:, None] ** 2 + k[None, :] ** 2
    vhat = np.zeros_like(Rhat)
    nonzero = k2 > 0
    vhat[nonzero] = Rhat[nonzero] / k2[nonzero]
    v = np.real(np.fft.ifft2(vhat))
    Rc = R - np.mean(R)
    return float(np.sum(v * Rc) / M ** 2)
