import numpy as np
import pytest

from lwr_pidl import autodiff as ad


def numeric_grad(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


CASES = {
    "add_broadcast": lambda v, c: ad.total(v + c[0]),
    "sub_rsub": lambda v, c: ad.total((1.0 - v) * (v - c)),
    "mul_square": lambda v, c: ad.mean(ad.square(v * c - 0.3)),
    "tanh": lambda v, c: ad.total(ad.tanh(v) * c),
    "matmul": lambda v, c: ad.total(ad.square(v @ c.T)),
    "take": lambda v, c: ad.total(ad.square(v[1] + v[:, 0][0])),
    "concat": lambda v, c: ad.total(ad.concat([v, v * 2.0], axis=0) * np.vstack([c, c])),
}


@pytest.mark.parametrize("name", sorted(CASES))
def test_primitive_gradients(name):
    rng = np.random.default_rng(1)
    x = rng.normal(size=(3, 4))
    c = rng.normal(size=(3, 4))
    fn = CASES[name]
    v = ad.Var(x)
    out = fn(v, c)
    out.backward()
    want = numeric_grad(lambda a: float(ad.value_of(fn(a, c))), x)
    assert np.allclose(v.grad, want, rtol=1e-7, atol=1e-8)


def test_plain_arrays_pass_through():
    a = np.arange(3.0)
    assert isinstance(ad.tanh(a), np.ndarray)
    assert isinstance(ad.add(a, 1.0), np.ndarray)
    assert ad.value_of(ad.mean(a)) == 1.0


def test_shared_subexpression_accumulates():
    v = ad.Var(np.array([2.0]))
    y = v * v + v  # d/dv = 2v + 1
    ad.total(y).backward()
    assert v.grad[0] == pytest.approx(5.0)


def test_deep_chain_is_not_recursive():
    v = ad.Var(np.array([0.5]))
    y = v
    for _ in range(5000):
        y = y * 1.0
    ad.total(y).backward()
    assert v.grad[0] == 1.0
