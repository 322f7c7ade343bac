"""Monte-Carlo collocation sets with product structure and face sets.

Weights follow the Monte-Carlo normalization: summing the weight over a set
reproduces the measure of the integration region exactly (T*vol for the
space-time set, vol for the initial slice, T*area per face).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class QuadratureError(ValueError):
    pass


@dataclass
class QuadratureScheme:
    spec: object
    # product structure for the space-time set (density problems)
    t_phy: np.ndarray = None
    x_phy: np.ndarray = None            # (n_x, d)
    # flow problems use times only; space is a tensor grid
    grid: np.ndarray = None             # (M*M, 2)
    M: int = None
    N: int = None
    x_ic: np.ndarray = None             # (n_ic, d)
    bd: list = None                     # per face: (t, x) arrays, x on the face
    w_t: float = None
    w_x_phy: float = None
    w_x_ic: float = None
    w_bd: float = None                  # combined time*surface weight per point

    @property
    def phy_points(self):
        """Flattened (t, x) product set, shape (n_t*n_x, 1 + d)."""
        n_t, n_x = len(self.t_phy), len(self.x_phy)
        t = np.repeat(self.t_phy, n_x)
        x = np.tile(self.x_phy, (n_t, 1))
        return t, x


def sample(spec, sizes, seed):
    """Draw a scheme for the given problem; `sizes` is a dict with keys
    n_t, n_x, n_ic, n_bd (densities) or n_t, m, n, n_ic, n_bd (flow)."""
    for key, val in sizes.items():
        if int(val) <= 0:
            raise QuadratureError(f"size {key} must be positive")
    rng = np.random.default_rng(seed)
    side, d, T = spec.side, spec.dim, spec.T
    scheme = QuadratureScheme(spec=spec)
    n_ic = int(sizes["n_ic"])
    n_bd = int(sizes["n_bd"])
    scheme.x_ic = rng.uniform(0.0, side, size=(n_ic, d))
    scheme.w_x_ic = spec.volume / n_ic
    scheme.bd = []
    for i in range(d):
        t = rng.uniform(0.0, T, size=n_bd)
        x = rng.uniform(0.0, side, size=(n_bd, d))
        x[:, i] = 0.0
        scheme.bd.append((t, x))
    scheme.w_bd = T * spec.face_area / n_bd

    if spec.kind == "nse":
        n_t = int(sizes["n_t"])
        M, N = int(sizes["m"]), int(sizes["n"])
        scheme.t_phy = rng.uniform(0.0, T, size=n_t)
        scheme.w_t = T / n_t
        scheme.grid = nse_grid(M, N)
        scheme.M, scheme.N = M, N
    else:
        n_t, n_x = int(sizes["n_t"]), int(sizes["n_x"])
        scheme.t_phy = rng.uniform(0.0, T, size=n_t)
        scheme.x_phy = rng.uniform(0.0, side, size=(n_x, d))
        scheme.w_t = T / n_t
        scheme.w_x_phy = spec.volume / n_x
    return scheme


def nse_grid(M, N):
    """Uniform M x M tensor grid on [0, 2*pi)^2, no duplicated edge.

    Requires M >= 2N + 2 so the quadratic residual term is alias-free up to
    the mode cutoff N.
    """
    M, N = int(M), int(N)
    if M < 2 * N + 2:
        raise QuadratureError(f"grid size {M} too small for cutoff {N}"
                              f" (need M >= {2 * N + 2})")
    pts = np.arange(M) * (2.0 * np.pi / M)
    X, Y = np.meshgrid(pts, pts, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def mode_table(N):
    """Integer wave vectors with 0 < |k|_inf <= N, in a fixed order."""
    ks = []
    for kx in range(-N, N + 1):
        for ky in range(-N, N + 1):
            if kx == 0 and ky == 0:
                continue
            ks.append((kx, ky))
    return np.asarray(ks, dtype=float)


def fourier_matrices(M, N):
    """Real DFT matrices for the truncated mode set on the M x M grid.

    Returns (C, S, wk): C[m] . R and S[m] . R give M^2 times the real and
    negative imaginary part of the mode-m coefficient of a grid field R
    (coefficient convention: average of R * exp(-i k.x) over the grid);
    wk[m] = 1 / |k|^2.
    """
    grid = nse_grid(M, N)
    ks = mode_table(N)
    phase = ks @ grid.T                      # (n_modes, M*M)
    C = np.cos(phase)
    S = np.sin(phase)
    wk = 1.0 / np.sum(ks * ks, axis=1)
    return C, S, wk
