import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lwr_pidl.core import ConfigError
from lwr_pidl.optim import adam_minimize, lbfgs_minimize


def rosenbrock(th):
    x, y = th
    f = (1 - x) ** 2 + 100 * (y - x * x) ** 2
    g = np.array([-2 * (1 - x) - 400 * x * (y - x * x), 200 * (y - x * x)])
    return f, g


def test_adam_first_step_closed_form():
    # g = 1: m_hat = 1, v_hat = 1, step = lr / (1 + eps_hat)
    rep = adam_minimize(np.zeros(1), lambda th: (float(th[0]), np.ones(1)), lr=1e-3, iters=1)
    assert rep.theta[0] == pytest.approx(-1e-3 / (1 + 1e-8), abs=1e-12)
    assert rep.theta[0] == pytest.approx(-1e-3, abs=1e-10)


def test_adam_hand_two_steps():
    grads = iter([np.array([2.0]), np.array([-1.0])])
    lr, b1, b2, eh = 0.1, 0.9, 0.999, 1e-8
    rep = adam_minimize(np.zeros(1), lambda th: (0.0, next(grads)), lr=lr, iters=2)
    m, v, x = 0.0, 0.0, 0.0
    for k, g in enumerate([2.0, -1.0], start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        x -= lr * (m / (1 - b1**k)) / (math.sqrt(v / (1 - b2**k)) + eh)
    assert rep.theta[0] == pytest.approx(x, abs=1e-15)
    assert rep.iterations == len(rep.trace) == 2


def test_adam_zero_gradient_and_bowl():
    rep = adam_minimize(np.array([0.3, -2.0]), lambda th: (1.0, np.zeros(2)), iters=50)
    assert np.array_equal(rep.theta, [0.3, -2.0])
    bowl = adam_minimize(np.array([1.0]), lambda th: (float(th[0] ** 2), 2 * th), iters=8000)
    assert abs(bowl.theta[0]) <= 1e-3


def test_adam_aborts_on_nan():
    rep = adam_minimize(np.ones(1), lambda th: (math.nan, np.ones(1)), iters=10)
    assert rep.reason.startswith("non-finite") and rep.iterations == 0
    with pytest.raises(ConfigError):
        adam_minimize(np.ones(1), rosenbrock, lr=0.0)


def test_lbfgs_rosenbrock():
    rep = lbfgs_minimize(np.array([-1.2, 1.0]), rosenbrock)
    assert np.linalg.norm(rep.theta - 1.0) <= 1e-6
    assert rep.iterations == len(rep.trace)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 12))
def test_lbfgs_quadratic(seed, dim):
    rng = np.random.default_rng(seed)
    target = rng.normal(size=dim)
    rep = lbfgs_minimize(np.zeros(dim), lambda th: (0.5 * np.sum((th - target) ** 2), th - target))
    assert np.max(np.abs(rep.theta - target)) <= 1e-10
    assert rep.iterations <= dim + 5


def test_lbfgs_ill_conditioned_quadratic():
    d = np.logspace(0, 3, 10)
    rep = lbfgs_minimize(np.ones(10), lambda th: (0.5 * np.sum(d * th * th), d * th), max_iters=500)
    assert np.max(np.abs(rep.theta)) <= 1e-6


def test_lbfgs_already_optimal():
    rep = lbfgs_minimize(np.zeros(3), lambda th: (0.0, np.zeros(3)))
    assert rep.iterations == 0 and rep.reason == "gradient tolerance"
    assert np.array_equal(rep.theta, np.zeros(3))


def test_lbfgs_line_search_failure_is_reported():
    # gradient that lies about the descent direction
    rep = lbfgs_minimize(np.ones(2), lambda th: (float(np.sum(th**2)), -2 * th), max_iters=10)
    assert rep.reason == "line search failure"


def test_lbfgs_max_iters_and_trace_file(tmp_path):
    rep = lbfgs_minimize(np.array([-1.2, 1.0]), lambda th: (*rosenbrock(th), (1.0, 2.0)), max_iters=3)
    assert rep.reason == "max iterations" and rep.iterations == 3
    p = tmp_path / "trace.csv"
    rep.write_trace(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "iteration,J,J_DL,J_PHY" and len(lines) == 4
    assert lines[1].endswith(",1.0,2.0")
    with pytest.raises(ConfigError):
        lbfgs_minimize(np.ones(2), rosenbrock, memory=0)
