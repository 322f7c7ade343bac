"""Truncated Taylor jets in the network inputs, up to third order.

A jet carries the value of a field together with a chosen set of input
derivatives, indexed by sorted multi-indices such as ``('x',)`` or
``('t', 'x', 'x')``.  Arithmetic follows the Leibniz and Faa di Bruno rules
exactly.  Coefficients may be plain floats/arrays or tape nodes, so the same
jet code produces either values or parameter-differentiable quantities.

Exact-zero coefficients are kept as the float ``0.0`` and short-circuited,
which keeps seed jets cheap.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from . import tape as tp


class JetError(ValueError):
    pass


def _is_zero(c):
    return isinstance(c, float) and c == 0.0


def _sorted_key(idx):
    return tuple(sorted(idx))


def _partitions3(positions):
    """All set partitions of a 3-element position tuple."""
    a, b, c = positions
    return [
        [(a, b, c)],
        [(a, b), (c,)],
        [(a, c), (b,)],
        [(b, c), (a,)],
        [(a,), (b,), (c,)],
    ]


class JetLayout:
    """Which derivative multi-indices are carried.

    `dirs` are the input coordinate names in order; `pairs` and `triples`
    are the carried second/third multi-indices (as sorted tuples of names).
    Every sub-multi-index of a carried key must itself be carried.
    """

    def __init__(self, dirs, pairs=(), triples=()):
        self.dirs = tuple(dirs)
        self.pairs = tuple(_sorted_key(p) for p in pairs)
        self.triples = tuple(_sorted_key(t) for t in triples)
        self.keys = ((),) + tuple((d,) for d in self.dirs) + self.pairs + self.triples
        keyset = set(self.keys)
        if len(keyset) != len(self.keys):
            raise JetError("duplicate derivative keys in layout")
        for key in self.keys:
            for r in range(len(key)):
                for sub in combinations(range(len(key)), r):
                    subkey = _sorted_key(tuple(key[i] for i in sub))
                    if subkey not in keyset:
                        raise JetError(f"layout misses {subkey}, required by {key}")
        self._mul_rules = {}
        self._compose_rules = {}
        for key in self.keys:
            positions = tuple(range(len(key)))
            splits = []
            for r in range(len(key) + 1):
                for left in combinations(positions, r):
                    right = tuple(i for i in positions if i not in left)
                    splits.append((
                        _sorted_key(tuple(key[i] for i in left)),
                        _sorted_key(tuple(key[i] for i in right)),
                    ))
            self._mul_rules[key] = tuple(splits)
            if len(key) == 0:
                parts = [(0, [])]
            elif len(key) == 1:
                parts = [(1, [key])]
            elif len(key) == 2:
                parts = [(1, [key]), (2, [(key[0],), (key[1],)])]
            else:
                parts = []
                for blocks in _partitions3(positions):
                    named = [_sorted_key(tuple(key[i] for i in blk)) for blk in blocks]
                    parts.append((len(blocks), named))
            self._compose_rules[key] = parts

    def coord_index(self, name):
        return self.dirs.index(name)


# Layouts used by the problem families.  The 1-D density problems carry the
# full third-order tensor in (t, x); the stream-function/pressure setting
# carries second derivatives except (t,t) and the purely spatial triples
# needed for the Laplacian of the velocity.
def full_layout_1d():
    return JetLayout(
        dirs=("t", "x"),
        pairs=(("t", "t"), ("t", "x"), ("x", "x")),
        triples=(("t", "t", "t"), ("t", "t", "x"), ("t", "x", "x"), ("x", "x", "x")),
    )


def density_layout_1d(order3=False):
    if order3:
        return JetLayout(
            dirs=("t", "x"),
            pairs=(("t", "x"), ("x", "x")),
            triples=(("t", "x", "x"), ("x", "x", "x")),
        )
    return JetLayout(dirs=("t", "x"), pairs=(("t", "x"), ("x", "x")))


def stream_layout():
    return JetLayout(
        dirs=("t", "x", "y"),
        pairs=(("t", "x"), ("t", "y"), ("x", "x"), ("x", "y"), ("y", "y")),
        triples=(("x", "x", "x"), ("x", "x", "y"), ("x", "y", "y"), ("y", "y", "y")),
    )


def gradient_layout(dirs):
    return JetLayout(dirs=dirs)


def spatial2_layout(dirs=("t", "x", "y")):
    """First order plus spatial second derivatives (for velocity gradients)."""
    return JetLayout(dirs=dirs, pairs=(("x", "x"), ("x", "y"), ("y", "y")))


class Jet:
    """Value plus carried input derivatives of one (possibly vector) field."""

    __slots__ = ("layout", "coeffs")

    def __init__(self, layout, coeffs):
        self.layout = layout
        self.coeffs = coeffs

    def __getitem__(self, key):
        return self.coeffs.get(_sorted_key(key), 0.0)

    @property
    def value(self):
        return self.coeffs[()]

    def _check(self, other):
        if self.layout is not other.layout and self.layout.keys != other.layout.keys:
            raise JetError("jets carry different direction layouts")

    def __add__(self, other):
        if not isinstance(other, Jet):
            coeffs = dict(self.coeffs)
            coeffs[()] = tp.add(coeffs[()], other)
            return Jet(self.layout, coeffs)
        self._check(other)
        coeffs = {}
        for key in self.layout.keys:
            a = self.coeffs.get(key, 0.0)
            b = other.coeffs.get(key, 0.0)
            if _is_zero(a):
                coeffs[key] = b
            elif _is_zero(b):
                coeffs[key] = a
            else:
                coeffs[key] = tp.add(a, b)
        return Jet(self.layout, coeffs)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.layout, {
            k: (0.0 if _is_zero(c) else tp.mul(-1.0, c))
            for k, c in self.coeffs.items()
        })

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.layout, {
                k: (0.0 if _is_zero(c) else tp.mul(c, other))
                for k, c in self.coeffs.items()
            })
        self._check(other)
        coeffs = {}
        for key in self.layout.keys:
            acc = None
            for left, right in self.layout._mul_rules[key]:
                a = self.coeffs.get(left, 0.0)
                b = other.coeffs.get(right, 0.0)
                if _is_zero(a) or _is_zero(b):
                    continue
                term = tp.mul(a, b)
                acc = term if acc is None else tp.add(acc, term)
            coeffs[key] = 0.0 if acc is None else acc
        return Jet(self.layout, coeffs)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * compose(other, _pow_derivs(-1.0))
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return compose(self, _pow_derivs(-1.0)) * other

    def __pow__(self, p):
        return compose(self, _pow_derivs(float(p)))


def compose(jet, deriv_fn):
    """Apply a scalar function through the jet (Faa di Bruno, order <= 3).

    `deriv_fn(v)` returns the function value and its first three derivatives
    evaluated at the jet value.
    """
    v = jet.value
    f0, f1, f2, f3 = deriv_fn(v)
    fd = (None, f1, f2, f3)
    coeffs = {(): f0}
    for key in jet.layout.keys:
        if not key:
            continue
        acc = None
        for nblocks, blocks in jet.layout._compose_rules[key]:
            prod = None
            for blk in blocks:
                c = jet.coeffs.get(blk, 0.0)
                if _is_zero(c):
                    prod = None
                    break
                prod = c if prod is None else tp.mul(prod, c)
            if prod is None:
                continue
            term = tp.mul(fd[nblocks], prod)
            acc = term if acc is None else tp.add(acc, term)
        coeffs[key] = 0.0 if acc is None else acc
    return Jet(jet.layout, coeffs)


# -- scalar primitives ------------------------------------------------------


def _pow_derivs(p):
    def derivs(v):
        return (
            tp.powc(v, p),
            tp.mul(p, tp.powc(v, p - 1.0)),
            tp.mul(p * (p - 1.0), tp.powc(v, p - 2.0)),
            tp.mul(p * (p - 1.0) * (p - 2.0), tp.powc(v, p - 3.0)),
        )
    return derivs


def tanh(jet):
    def derivs(v):
        y = tp.tanh(v)
        y2 = tp.mul(y, y)
        s = tp.sub(1.0, y2)                      # sech^2
        f2 = tp.mul(-2.0, tp.mul(y, s))
        f3 = tp.mul(s, tp.sub(tp.mul(6.0, y2), 2.0))
        return y, s, f2, f3
    return compose(jet, derivs)


def exp(jet):
    def derivs(v):
        y = tp.exp(v)
        return y, y, y, y
    return compose(jet, derivs)


def log(jet):
    vals = jet.value.value if isinstance(jet.value, tp.Node) else np.asarray(jet.value)
    if np.any(vals <= 0.0):
        bad = int(np.argmax(np.asarray(vals) <= 0.0))
        raise JetError(f"log of nonpositive value at collocation index {bad}")

    def derivs(v):
        inv = tp.powc(v, -1.0)
        inv2 = tp.mul(inv, inv)
        return tp.log(v), inv, tp.mul(-1.0, inv2), tp.mul(2.0, tp.mul(inv2, inv))
    return compose(jet, derivs)


def sin(jet):
    def derivs(v):
        s, c = tp.sin(v), tp.cos(v)
        return s, c, tp.mul(-1.0, s), tp.mul(-1.0, c)
    return compose(jet, derivs)


def cos(jet):
    def derivs(v):
        s, c = tp.sin(v), tp.cos(v)
        return c, tp.mul(-1.0, s), tp.mul(-1.0, c), s
    return compose(jet, derivs)


def sqrt(jet):
    return compose(jet, _pow_derivs(0.5))


# -- seeding ----------------------------------------------------------------


def lift(value, coord, layout):
    """Seed a jet: `coord` is a direction name, or None for a constant."""
    coeffs = {key: 0.0 for key in layout.keys}
    coeffs[()] = value
    if coord is not None:
        if coord not in layout.dirs:
            raise JetError(f"unknown coordinate {coord!r} for layout {layout.dirs}")
        coeffs[(coord,)] = 1.0
    return Jet(layout, coeffs)


def lift_inputs(columns, layout):
    """Seed one jet per coordinate from a dict name -> value array."""
    return {name: lift(columns[name], name, layout) for name in layout.dirs}


def stack_inputs(columns, layout):
    """Seed a single vector-valued jet whose value is the (n, k) input matrix.

    Column order follows `layout.dirs`; the first-derivative coefficients are
    the (k,)-shaped unit rows, letting matmul against weight matrices
    propagate all directions at once.
    """
    k = len(layout.dirs)
    value = np.column_stack([np.asarray(columns[name], dtype=float)
                             for name in layout.dirs])
    coeffs = {key: 0.0 for key in layout.keys}
    coeffs[()] = value
    for i, name in enumerate(layout.dirs):
        e = np.zeros(k)
        e[i] = 1.0
        coeffs[(name,)] = e
    return Jet(layout, coeffs)
