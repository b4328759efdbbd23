"""Fully connected tanh network ``(x, t) -> rho`` with input-derivative jets.

The input derivatives a PDE residual needs (``rho_x``, ``rho_t``, ``rho_xx``)
are carried forward through every layer alongside the activations:

    z   = a W + b        z_x = a_x W       z_xx = a_xx W
    y   = tanh(z)        y_x = s z_x       y_xx = s z_xx - 2 y s z_x**2,   s = 1 - y**2

All of this is written with the primitives in :mod:`lwr_pidl.autodiff`, so a
loss built from jet entries is differentiated with respect to the weights by
one reverse sweep over the same graph.

Parameters are one flat vector ``theta``. Layer ``k`` occupies a block of
``fan_in * fan_out`` weights (row-major, shape ``(fan_in, fan_out)``) followed
by ``fan_out`` biases.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

from . import autodiff as ad
from .core import ConfigError, DimensionError, seeded_rng

SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class MlpShape:
    hidden: tuple[int, ...] = (20,) * 8
    domain: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)
    activation: str = "tanh"
    input_dim: int = 2
    output_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "domain", tuple(float(d) for d in self.domain))
        if any(h < 1 for h in self.hidden):
            raise ConfigError("hidden widths must be >= 1")
        if self.activation != "tanh":
            raise ConfigError("only the tanh activation is supported")
        if self.input_dim != 2 or self.output_dim != 1:
            raise ConfigError("the network maps (x, t) to a scalar density")
        x0, x1, t0, t1 = self.domain
        if not (x1 > x0 and t1 > t0):
            raise ConfigError("domain extents must be increasing")

    @property
    def sizes(self) -> list[int]:
        return [self.input_dim, *self.hidden, self.output_dim]

    @property
    def n_params(self) -> int:
        s = self.sizes
        return sum(a * b + b for a, b in zip(s[:-1], s[1:]))


@dataclass(frozen=True)
class MlpParams:
    shape: MlpShape
    theta: np.ndarray = field(repr=False)

    def __post_init__(self):
        th = np.array(self.theta, dtype=np.float64).ravel()
        if th.size != self.shape.n_params:
            raise DimensionError(f"theta has {th.size} entries, shape needs {self.shape.n_params}")
        if not np.all(np.isfinite(th)):
            raise ConfigError("theta contains non-finite entries")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)

    def with_theta(self, theta) -> "MlpParams":
        return MlpParams(self.shape, theta)


@dataclass
class NetJet:
    rho_hat: np.ndarray
    d_dx: np.ndarray
    d_dt: np.ndarray
    d2_dx2: np.ndarray | None = None


def unpack(shape: MlpShape, theta) -> list[tuple[np.ndarray, np.ndarray]]:
    """Views ``(W, b)`` per layer into the flat parameter vector."""
    layers, k = [], 0
    s = shape.sizes
    for fi, fo in zip(s[:-1], s[1:]):
        W = theta[k:k + fi * fo].reshape(fi, fo)
        k += fi * fo
        b = theta[k:k + fo]
        k += fo
        layers.append((W, b))
    return layers


def init_params(shape: MlpShape, seed: int) -> MlpParams:
    """Glorot-uniform weights, zero biases."""
    rng = seeded_rng(seed)
    theta = np.zeros(shape.n_params)
    for W, _ in unpack(shape, theta):
        fi, fo = W.shape
        bound = np.sqrt(6.0 / (fi + fo))
        W[...] = rng.uniform(-bound, bound, size=W.shape)
    return MlpParams(shape, theta)


def _scales(shape: MlpShape) -> tuple[float, float]:
    x0, x1, t0, t1 = shape.domain
    return 2.0 / (x1 - x0), 2.0 / (t1 - t0)


def _inputs(shape: MlpShape, x, t) -> np.ndarray:
    x0, _, t0, _ = shape.domain
    sx, st = _scales(shape)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    x, t = np.broadcast_arrays(x, t)
    return np.stack([sx * (x - x0) - 1.0, st * (t - t0) - 1.0], axis=1)


def _dense(A, W, b):
    """``A @ W`` over stacked streams ``A[k]``, bias added to the value stream only.

    The jet streams are linear in the layer input, so they carry no bias.
    """
    av, wv = ad.value_of(A), ad.value_of(W)
    z = av @ wv
    z[0] += ad.value_of(b)
    if not any(isinstance(v, ad.Var) for v in (A, W, b)):
        return z
    out = ad.Var(z)

    def bw(g):
        if isinstance(A, ad.Var):
            ad._accum(A, g @ wv.T)
        if isinstance(W, ad.Var):
            ad._accum(W, av.reshape(-1, av.shape[-1]).T @ g.reshape(-1, g.shape[-1]))
        if isinstance(b, ad.Var):
            ad._accum(b, g[0].sum(axis=0))

    out.parents = tuple(v for v in (A, W, b) if isinstance(v, ad.Var))
    out.backward_fn = bw
    return out


@numba.njit(cache=True, fastmath=False)
def _tanh_jet_fwd(z, out, y, s):
    # y holds tanh(z[0]) on entry
    k, n, w = z.shape
    for i in range(n):
        for j in range(w):
            yy = y[i, j]
            ss = 1.0 - yy * yy
            s[i, j] = ss
            out[0, i, j] = yy
            if k >= 3:
                zx = z[1, i, j]
                out[1, i, j] = ss * zx
                out[2, i, j] = ss * z[2, i, j]
                if k == 4:
                    out[3, i, j] = ss * z[3, i, j] - 2.0 * yy * ss * zx * zx


@numba.njit(cache=True, fastmath=False)
def _tanh_jet_bwd(z, y, s, g, gz):
    # adjoints of  y = tanh(z),  y_x = s z_x,  y_t = s z_t,  y_xx = s z_xx - 2 y s z_x^2
    k, n, w = z.shape
    for i in range(n):
        for j in range(w):
            yy = y[i, j]
            ss = s[i, j]
            gv = g[0, i, j] * ss
            if k >= 3:
                ds = -2.0 * yy * ss  # d s / d z
                zx = z[1, i, j]
                gx = g[1, i, j]
                gt = g[2, i, j]
                acc = gx * zx + gt * z[2, i, j]
                gzx = gx * ss
                gz[2, i, j] = gt * ss
                if k == 4:
                    gxx = g[3, i, j]
                    acc += gxx * z[3, i, j]
                    gv -= 2.0 * gxx * (ss * ss + yy * ds) * zx * zx
                    gzx += 2.0 * gxx * ds * zx
                    gz[3, i, j] = gxx * ss
                gz[1, i, j] = gzx
                gv += ds * acc
            gz[0, i, j] = gv


def _tanh_jet(Z):
    """Push stacked streams ``(z, z_x, z_t, z_xx)`` through tanh.

    ``Z`` has shape ``(k, n, width)`` with ``k`` in {1, 3, 4}; stream order is
    value, d/dx, d/dt, d2/dx2.
    """
    zv = np.ascontiguousarray(ad.value_of(Z))
    k, n, w = zv.shape
    out = np.empty_like(zv)
    y = np.tanh(zv[0])
    s = np.empty((n, w))
    _tanh_jet_fwd(zv, out, y, s)
    if not isinstance(Z, ad.Var):
        return out
    res = ad.Var(out, (Z,))

    def bw(g):
        gz = np.empty_like(zv)
        _tanh_jet_bwd(zv, y, s, np.ascontiguousarray(g), gz)
        ad._accum(Z, gz)

    res.backward_fn = bw
    return res


def _propagate(shape: MlpShape, layers, x, t, order: int):
    """Run the layer graph; ``layers`` may hold arrays or :class:`autodiff.Var`.

    ``order`` 0 returns the value, 1 adds ``(d/dx, d/dt)``, 2 also ``d2/dx2``.
    """
    sx, st = _scales(shape)
    a0 = _inputs(shape, x, t)
    n = a0.shape[0]
    k = (1, 3, 4)[order]
    A = np.zeros((k, n, 2))
    A[0] = a0
    if k >= 3:
        A[1, :, 0] = sx
        A[2, :, 1] = st
    last = len(layers) - 1
    for j, (W, b) in enumerate(layers):
        Z = _dense(A, W, b)
        A = Z if j == last else _tanh_jet(Z)
    streams = [ad.take(A, (i, slice(None), 0)) for i in range(k)]
    if order == 0:
        return streams[0]
    if order == 1:
        return streams[0], streams[1], streams[2], None
    return tuple(streams)


def forward(params: MlpParams, x, t) -> np.ndarray:
    """Density estimate at each ``(x, t)``; scalars in, scalar out."""
    layers = unpack(params.shape, params.theta)
    v = _propagate(params.shape, layers, x, t, order=0)
    return float(v[0]) if np.ndim(x) == 0 and np.ndim(t) == 0 else v


def jet(params: MlpParams, x, t, second: bool = True) -> NetJet:
    """Estimate plus its exact ``d/dx``, ``d/dt`` and (optionally) ``d2/dx2``."""
    layers = unpack(params.shape, params.theta)
    v, vx, vt, vxx = _propagate(params.shape, layers, x, t, order=2 if second else 1)
    if vxx is None and second:
        vxx = np.zeros_like(v)
    if np.ndim(x) == 0 and np.ndim(t) == 0:
        return NetJet(float(v[0]), float(vx[0]), float(vt[0]), None if vxx is None else float(vxx[0]))
    return NetJet(v, vx, vt, vxx)


# --- losses ------------------------------------------------------------------


@dataclass
class DataTerm:
    """``weight * mean((rho_hat(x, t) - target)**2)``."""

    x: np.ndarray
    t: np.ndarray
    target: np.ndarray
    weight: float = 1.0


@dataclass
class ResidualTerm:
    """``weight * mean(residual(jet)**2)`` over the points ``(x, t)``.

    ``residual`` receives a :class:`NetJet` whose entries are tape variables
    and must combine them with arithmetic operators only.
    """

    x: np.ndarray
    t: np.ndarray
    residual: Callable[[NetJet], object]
    weight: float = 1.0
    second_order: bool = True


LossSpec = Sequence[DataTerm | ResidualTerm]


def loss_gradient(params: MlpParams, loss_spec: LossSpec, return_terms: bool = False):
    """Loss value and its exact gradient with respect to ``theta``.

    Returns ``(J, grad)``, or ``(J, grad, terms)`` with ``terms`` the unweighted
    per-term means when ``return_terms`` is set.
    """
    terms = list(loss_spec)
    if not terms:
        raise ConfigError("loss_spec is empty")
    shape = params.shape
    # leaf vars per tensor; gradients are scattered back into theta order
    leaves = [(ad.Var(W), ad.Var(b)) for W, b in unpack(shape, params.theta)]
    total = None
    parts = []
    for term in terms:
        if len(np.atleast_1d(term.x)) == 0:
            parts.append(0.0)
            continue
        if isinstance(term, DataTerm):
            pred = _propagate(shape, leaves, term.x, term.t, order=0)
            piece = ad.mean(ad.square(pred - np.asarray(term.target, dtype=np.float64)))
        elif isinstance(term, ResidualTerm):
            order = 2 if term.second_order else 1
            v, vx, vt, vxx = _propagate(shape, leaves, term.x, term.t, order=order)
            if vxx is None:
                vxx = np.zeros(ad.value_of(v).shape)
            piece = ad.mean(ad.square(term.residual(NetJet(v, vx, vt, vxx))))
        else:
            raise ConfigError(f"unknown loss term {type(term).__name__}")
        parts.append(float(ad.value_of(piece)))
        weighted = piece * float(term.weight)
        total = weighted if total is None else total + weighted
    if total is None:
        J = 0.0
        grad = np.zeros_like(params.theta)
    else:
        if not isinstance(total, ad.Var):
            total = ad.Var(total)
        total.backward()
        J = float(total.value)
        grad = np.empty_like(params.theta)
        k = 0
        for Wv, bv in leaves:
            for leaf in (Wv, bv):
                g = leaf.grad if leaf.grad is not None else np.zeros(leaf.value.shape)
                grad[k:k + g.size] = g.ravel()
                k += g.size
    if return_terms:
        return J, grad, tuple(parts)
    return J, grad


# --- snapshot I/O ---------------------------------------------------------------


def save_params(params: MlpParams, path) -> None:
    """Text snapshot: two header lines describing the shape, then one value per line."""
    s = params.shape
    with open(os.fspath(path), "w", encoding="ascii") as fh:
        fh.write(f"# lwr_pidl-mlp v{SNAPSHOT_VERSION}\n")
        fh.write(
            "# hidden=" + ",".join(map(str, s.hidden))
            + ";domain=" + ",".join(repr(float(d)) for d in s.domain)
            + f";activation={s.activation};n_params={s.n_params}\n"
        )
        for v in params.theta:
            fh.write(repr(float(v)) + "\n")


def load_params(path) -> MlpParams:
    with open(os.fspath(path), encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) < 2 or not lines[0].startswith("# lwr_pidl-mlp v"):
        raise DimensionError(f"{path}: not a parameter snapshot")
    version = int(lines[0].rsplit("v", 1)[1])
    if version != SNAPSHOT_VERSION:
        raise DimensionError(f"{path}: unsupported snapshot version {version}")
    meta = dict(kv.split("=", 1) for kv in lines[1].lstrip("#").strip().split(";"))
    shape = MlpShape(
        hidden=tuple(int(h) for h in meta["hidden"].split(",")),
        domain=tuple(float(d) for d in meta["domain"].split(",")),
        activation=meta["activation"],
    )
    theta = np.array([float(v) for v in lines[2:]])
    if theta.size != int(meta["n_params"]):
        raise DimensionError(f"{path}: expected {meta['n_params']} values, found {theta.size}")
    return MlpParams(shape, theta)
