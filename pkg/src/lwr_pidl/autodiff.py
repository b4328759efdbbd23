"""Minimal tape-based reverse-mode automatic differentiation over NumPy arrays.

A :class:`Var` wraps an array value, remembers the vars it was computed from
and a closure that pushes its adjoint back to them. ``backward()`` visits the
graph in reverse topological order. Only the handful of primitives the MLP and
the PINN losses need are provided; each one also accepts plain arrays so the
same model code runs with or without a tape.
"""

from __future__ import annotations

import numpy as np


class Var:
    __slots__ = ("value", "grad", "parents", "backward_fn")
    __array_priority__ = 100.0

    def __init__(self, value, parents=(), backward_fn=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var(shape={self.value.shape})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(other))

    def __rsub__(self, other):
        return add(neg(self), other)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, idx):
        return take(self, idx)

    def backward(self):
        """Accumulate ``d self / d leaf`` into ``leaf.grad`` for every var upstream.

        ``self`` must be a scalar.
        """
        if self.value.size != 1:
            raise ValueError("backward() needs a scalar output")
        order = _topological(self)
        for v in order:
            v.grad = None
        self.grad = np.ones_like(self.value)
        for v in reversed(order):
            if v.backward_fn is not None and v.grad is not None:
                v.backward_fn(v.grad)


def _topological(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def _accum(v: Var, g):
    if v.grad is None:
        v.grad = g
    else:
        v.grad = v.grad + g


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _val(a):
    return a.value if isinstance(a, Var) else a


def add(a, b):
    if not isinstance(a, Var) and not isinstance(b, Var):
        return a + b
    out = Var(_val(a) + _val(b))
    vars_ = tuple(v for v in (a, b) if isinstance(v, Var))

    def bw(g):
        for v in vars_:
            _accum(v, _unbroadcast(g, v.value.shape))

    out.parents, out.backward_fn = vars_, bw
    return out


def neg(a):
    if not isinstance(a, Var):
        return -a
    out = Var(-a.value, (a,))
    out.backward_fn = lambda g: _accum(a, -g)
    return out


def mul(a, b):
    if not isinstance(a, Var) and not isinstance(b, Var):
        return a * b
    av, bv = _val(a), _val(b)
    out = Var(av * bv)
    vars_ = tuple(v for v in (a, b) if isinstance(v, Var))

    def bw(g):
        if isinstance(a, Var):
            _accum(a, _unbroadcast(g * bv, a.value.shape))
        if isinstance(b, Var):
            _accum(b, _unbroadcast(g * av, b.value.shape))

    out.parents, out.backward_fn = vars_, bw
    return out


def square(a):
    if not isinstance(a, Var):
        return a * a
    av = a.value
    out = Var(av * av, (a,))
    out.backward_fn = lambda g: _accum(a, 2.0 * g * av)
    return out


def matmul(a, b):
    """``a @ b``; ``a`` may carry leading batch axes when ``b`` is a matrix."""
    if not isinstance(a, Var) and not isinstance(b, Var):
        return a @ b
    av, bv = _val(a), _val(b)
    out = Var(av @ bv)
    vars_ = tuple(v for v in (a, b) if isinstance(v, Var))

    def bw(g):
        if isinstance(a, Var):
            _accum(a, g @ bv.T)
        if isinstance(b, Var):
            if av.ndim > 2:
                _accum(b, av.reshape(-1, av.shape[-1]).T @ g.reshape(-1, g.shape[-1]))
            else:
                _accum(b, av.T @ g)

    out.parents, out.backward_fn = vars_, bw
    return out


def tanh(a):
    if not isinstance(a, Var):
        return np.tanh(a)
    y = np.tanh(a.value)
    out = Var(y, (a,))
    out.backward_fn = lambda g: _accum(a, g * (1.0 - y * y))
    return out


def total(a):
    """Sum of all entries."""
    if not isinstance(a, Var):
        return np.sum(a)
    shape = a.value.shape
    out = Var(np.sum(a.value), (a,))
    out.backward_fn = lambda g: _accum(a, np.broadcast_to(g, shape))
    return out


def mean(a):
    n = _val(a).size
    return total(a) * (1.0 / n)


def take(a, idx):
    """Basic indexing / slicing."""
    if not isinstance(a, Var):
        return a[idx]
    shape = a.value.shape
    out = Var(a.value[idx], (a,))

    def bw(g):
        full = np.zeros(shape)
        full[idx] = g
        _accum(a, full)

    out.backward_fn = bw
    return out


def concat(parts, axis=0):
    if not any(isinstance(p, Var) for p in parts):
        return np.concatenate(parts, axis=axis)
    vals = [_val(p) for p in parts]
    out = Var(np.concatenate(vals, axis=axis))
    bounds = np.cumsum([v.shape[axis] for v in vals])[:-1]
    vars_ = tuple(p for p in parts if isinstance(p, Var))

    def bw(g):
        for p, piece in zip(parts, np.split(g, bounds, axis=axis)):
            if isinstance(p, Var):
                _accum(p, piece)

    out.parents, out.backward_fn = vars_, bw
    return out


def value_of(a):
    return _val(a)
