"""Fully-connected tanh networks over a flat parameter vector.

Parameters are stored as one contiguous float64 vector (row-major weights
followed by biases, layer by layer), initialized with the Glorot-uniform
scheme and zero biases.  Evaluation accepts either plain input arrays or
jets, and optionally records on a tape for parameter gradients.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import jets as jt
from . import tape as tp


class NetworkError(ValueError):
    pass


def parameter_count(widths):
    return sum(wi * wo + wo for wi, wo in zip(widths[:-1], widths[1:]))


@dataclass
class MLP:
    widths: tuple
    theta: np.ndarray
    seed: int | None = None
    _offsets: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        if len(self.widths) < 2 or any(w <= 0 for w in self.widths):
            raise NetworkError(f"invalid widths {self.widths}")
        if self.theta.shape != (parameter_count(self.widths),):
            raise NetworkError("parameter vector length does not match widths")
        self._offsets = []
        off = 0
        for wi, wo in zip(self.widths[:-1], self.widths[1:]):
            self._offsets.append((off, off + wi * wo, off + wi * wo + wo))
            off += wi * wo + wo
        self.n_params = off

    @classmethod
    def init(cls, widths, seed):
        """Glorot-uniform weights, zero biases, reproducible for a seed."""
        widths = tuple(int(w) for w in widths)
        if len(widths) < 2 or any(w <= 0 for w in widths):
            raise NetworkError(f"invalid widths {widths}")
        rng = np.random.default_rng(seed)
        parts = []
        for wi, wo in zip(widths[:-1], widths[1:]):
            bound = np.sqrt(6.0 / (wi + wo))
            parts.append(rng.uniform(-bound, bound, size=wi * wo))
            parts.append(np.zeros(wo))
        return cls(widths, np.concatenate(parts), seed=seed)

    def layers(self):
        """Views (W, b) into theta; mutating theta mutates the views."""
        out = []
        for (o0, o1, o2), (wi, wo) in zip(self._offsets,
                                          zip(self.widths[:-1], self.widths[1:])):
            out.append((self.theta[o0:o1].reshape(wi, wo), self.theta[o1:o2]))
        return out

    def param_leaves(self, tape):
        return [(tape.leaf(W), tape.leaf(b)) for W, b in self.layers()]

    def flatten_grads(self, leaves, grads):
        """Assemble per-leaf gradients back into a flat vector."""
        flat = np.empty(self.n_params)
        i = 0
        for gW, gb in zip(grads[0::2], grads[1::2]):
            flat[i:i + gW.size] = gW.ravel()
            i += gW.size
            flat[i:i + gb.size] = gb
            i += gb.size
        return flat

    # -- evaluation ---------------------------------------------------------

    def forward(self, X):
        """Plain forward pass, X of shape (n, k_in) -> (n, k_out)."""
        h = np.asarray(X, dtype=float)
        layer_params = self.layers()
        for i, (W, b) in enumerate(layer_params):
            h = h @ W + b
            if i < len(layer_params) - 1:
                h = np.tanh(h)
        return h

    def forward_jets(self, inp, leaves=None):
        """Jet-valued forward pass.

        `inp` is a vector-valued jet (value of shape (n, k_in), as built by
        `jets.stack_inputs`).  When `leaves` (from `param_leaves`) is given
        the computation is recorded on their tape.
        """
        params = leaves if leaves is not None else self.layers()
        if np.shape(tp._val(inp.value))[1] != self.widths[0]:
            raise NetworkError("input jet width does not match network input")
        h = inp
        for i, (W, b) in enumerate(params):
            coeffs = {}
            for key, c in h.coeffs.items():
                if jt._is_zero(c):
                    coeffs[key] = 0.0
                else:
                    z = tp.matmul(c, W)
                    coeffs[key] = tp.add(z, b) if key == () else z
            h = jt.Jet(h.layout, coeffs)
            if i < len(params) - 1:
                h = jt.tanh(h)
        return h

    # -- serialization ------------------------------------------------------

    def save(self, path):
        """Little-endian float64 dump with an 8-byte count header."""
        path = Path(path)
        with open(path, "wb") as f:
            f.write(struct.pack("<Q", self.n_params))
            f.write(self.theta.astype("<f8").tobytes())
        sidecar = path.with_suffix(path.suffix + ".txt")
        with open(sidecar, "w") as f:
            f.write(f"widths = {' '.join(str(w) for w in self.widths)}\n")
            f.write(f"seed = {self.seed if self.seed is not None else ''}\n")

    @classmethod
    def load(cls, path):
        path = Path(path)
        with open(path, "rb") as f:
            (count,) = struct.unpack("<Q", f.read(8))
            theta = np.frombuffer(f.read(8 * count), dtype="<f8").astype(float)
        sidecar = path.with_suffix(path.suffix + ".txt")
        widths, seed = None, None
        for line in sidecar.read_text().splitlines():
            k, _, v = line.partition("=")
            k, v = k.strip(), v.strip()
            if k == "widths":
                widths = tuple(int(t) for t in v.split())
            elif k == "seed" and v:
                seed = int(v)
        if widths is None:
            raise NetworkError(f"missing widths in {sidecar}")
        return cls(widths, theta, seed=seed)
