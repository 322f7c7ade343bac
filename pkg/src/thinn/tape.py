"""Reverse-mode automatic differentiation on an explicit tape.

The tape records vectorized numpy operations.  A reverse sweep over the
recorded nodes yields exact gradients with respect to any leaf (in practice
the weight matrices and bias vectors of a network).  Node order is the append
order, so replaying the same computation gives bit-identical gradients.

All dispatch helpers (`tanh`, `exp`, ...) fall back to plain numpy when the
argument is not a `Node`, which lets jet arithmetic run with or without a
tape underneath.
"""

from __future__ import annotations

import numpy as np


class TapeError(RuntimeError):
    pass


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    if np.shape(grad) == tuple(shape):
        return grad
    grad = np.asarray(grad)
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Node:
    __slots__ = ("tape", "value", "parents", "vjp", "grad")

    def __init__(self, tape, value, parents=(), vjp=None):
        self.tape = tape
        self.value = value
        self.parents = parents
        self.vjp = vjp
        self.grad = None
        tape._nodes.append(self)

    @property
    def shape(self):
        return np.shape(self.value)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return Node(self.tape, -self.value, (self,), lambda g: (-g,))

    def __pow__(self, exponent):
        return powc(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def sum(self):
        return asum(self)


class Tape:
    """Append-only record of one scalar computation."""

    def __init__(self):
        self._nodes = []

    def __len__(self):
        return len(self._nodes)

    def leaf(self, value):
        return Node(self, np.asarray(value, dtype=float))

    def constant(self, value):
        # Constants participate in the graph but receive no gradient.
        return Node(self, np.asarray(value, dtype=float))

    def gradient(self, output, leaves):
        """Reverse sweep from scalar `output`; returns grads of `leaves`."""
        if output.tape is not self:
            raise TapeError("output was not recorded on this tape")
        if np.shape(output.value) != ():
            raise TapeError("gradient target must be a scalar node")
        for node in self._nodes:
            node.grad = None
        output.grad = np.float64(1.0)
        for node in reversed(self._nodes):
            if node.grad is None or node.vjp is None:
                continue
            parent_grads = node.vjp(node.grad)
            for parent, pg in zip(node.parents, parent_grads):
                if pg is None:
                    continue
                if parent.grad is None:
                    parent.grad = pg
                else:
                    parent.grad = parent.grad + pg
        out = []
        for leaf in leaves:
            g = leaf.grad
            if g is None:
                g = np.zeros_like(leaf.value)
            out.append(np.asarray(g, dtype=float))
        return out


def _tape_of(*args):
    for a in args:
        if isinstance(a, Node):
            return a.tape
    return None


def _val(x):
    return x.value if isinstance(x, Node) else x


# -- binary primitives ------------------------------------------------------


def add(a, b):
    tape = _tape_of(a, b)
    if tape is None:
        return a + b
    av, bv = _val(a), _val(b)
    out = av + bv
    ash, bsh = np.shape(av), np.shape(bv)
    if isinstance(a, Node) and isinstance(b, Node):
        return Node(tape, out, (a, b),
                    lambda g: (_unbroadcast(g, ash), _unbroadcast(g, bsh)))
    if isinstance(a, Node):
        return Node(tape, out, (a,), lambda g: (_unbroadcast(g, ash),))
    return Node(tape, out, (b,), lambda g: (_unbroadcast(g, bsh),))


def sub(a, b):
    return add(a, mul(-1.0, b)) if isinstance(b, Node) or isinstance(a, Node) else a - b


def mul(a, b):
    tape = _tape_of(a, b)
    if tape is None:
        return a * b
    av, bv = _val(a), _val(b)
    out = av * bv
    ash, bsh = np.shape(av), np.shape(bv)
    if isinstance(a, Node) and isinstance(b, Node):
        return Node(tape, out, (a, b),
                    lambda g: (_unbroadcast(g * bv, ash), _unbroadcast(g * av, bsh)))
    if isinstance(a, Node):
        return Node(tape, out, (a,), lambda g: (_unbroadcast(g * bv, ash),))
    return Node(tape, out, (b,), lambda g: (_unbroadcast(g * av, bsh),))


def div(a, b):
    tape = _tape_of(a, b)
    if tape is None:
        return a / b
    av, bv = _val(a), _val(b)
    out = av / bv
    ash, bsh = np.shape(av), np.shape(bv)
    if isinstance(a, Node) and isinstance(b, Node):
        return Node(tape, out, (a, b),
                    lambda g: (_unbroadcast(g / bv, ash),
                               _unbroadcast(-g * out / bv, bsh)))
    if isinstance(a, Node):
        return Node(tape, out, (a,), lambda g: (_unbroadcast(g / bv, ash),))
    return Node(tape, out, (b,), lambda g: (_unbroadcast(-g * out / bv, bsh),))


def _mm_vjp_a(g, bv):
    bv = np.asarray(bv)
    if bv.ndim == 1:
        return np.outer(g, bv)
    return g @ bv.T


def _mm_vjp_b(g, av):
    av = np.asarray(av)
    if av.ndim == 1:
        return np.outer(av, g)
    return av.T @ g


def matmul(a, b):
    tape = _tape_of(a, b)
    if tape is None:
        return a @ b
    av, bv = _val(a), _val(b)
    out = av @ bv
    if isinstance(a, Node) and isinstance(b, Node):
        return Node(tape, out, (a, b),
                    lambda g: (_mm_vjp_a(g, bv), _mm_vjp_b(g, av)))
    if isinstance(a, Node):
        return Node(tape, out, (a,), lambda g: (_mm_vjp_a(g, bv),))
    return Node(tape, out, (b,), lambda g: (_mm_vjp_b(g, av),))


# -- unary primitives -------------------------------------------------------


def _unary(x, fwd, make_vjp):
    if not isinstance(x, Node):
        return fwd(x)
    out = fwd(x.value)
    return Node(x.tape, out, (x,), make_vjp(x.value, out))


def tanh(x):
    return _unary(x, np.tanh, lambda v, y: lambda g: (g * (1.0 - y * y),))


def exp(x):
    return _unary(x, np.exp, lambda v, y: lambda g: (g * y,))


def log(x):
    return _unary(x, np.log, lambda v, y: lambda g: (g / v,))


def sin(x):
    return _unary(x, np.sin, lambda v, y: lambda g: (g * np.cos(v),))


def cos(x):
    return _unary(x, np.cos, lambda v, y: lambda g: (-g * np.sin(v),))


def sqrt(x):
    return _unary(x, np.sqrt, lambda v, y: lambda g: (g * (0.5 / y),))


def powc(x, p):
    """x**p for a constant exponent p."""
    if not isinstance(x, Node):
        return x ** p
    out = x.value ** p
    v = x.value
    return Node(x.tape, out, (x,), lambda g: (g * p * v ** (p - 1.0),))


def clip(x, lo, hi):
    """Clamp; gradient is passed through only on the interior."""
    if not isinstance(x, Node):
        return np.clip(x, lo, hi)
    v = x.value
    out = np.clip(v, lo, hi)
    mask = (v > lo) & (v < hi)
    return Node(x.tape, out, (x,), lambda g: (g * mask,))


def clip_through(x, lo, hi):
    """Clamp with a straight-through gradient.

    Used where a masked gradient would let clamped points get stuck: the
    downstream slope evaluated at the clamp boundary still points back into
    the interior.
    """
    if not isinstance(x, Node):
        return np.clip(x, lo, hi)
    out = np.clip(x.value, lo, hi)
    return Node(x.tape, out, (x,), lambda g: (g,))


def asum(x):
    if not isinstance(x, Node):
        return np.sum(x)
    shape = np.shape(x.value)
    return Node(x.tape, np.sum(x.value), (x,),
                lambda g: (np.broadcast_to(g, shape),))


def square(x):
    return mul(x, x)
