"""Adam and L-BFGS minimizers over a flat parameter vector.

Both take ``cost_fn(theta) -> (value, grad)`` or ``(value, grad, extras)``
where ``extras`` is a tuple of auxiliary scalars logged per iteration (the
PINN cost passes its data and physics terms through here).
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError


@dataclass
class TrainReport:
    theta: np.ndarray = field(repr=False)
    trace: list[tuple[float, ...]] = field(repr=False)
    wall_time: float
    iterations: int
    reason: str
    evaluations: int = 0

    @property
    def final_cost(self) -> float:
        return self.trace[-1][0] if self.trace else math.nan

    def write_trace(self, path, columns=("J", "J_DL", "J_PHY")) -> None:
        """``iteration,J,J_DL,J_PHY`` text table, one row per iteration."""
        with open(path, "w", encoding="ascii") as fh:
            fh.write("iteration," + ",".join(columns) + "\n")
            for i, row in enumerate(self.trace):
                vals = list(row) + [math.nan] * (len(columns) - len(row))
                fh.write(f"{i}," + ",".join(repr(float(v)) for v in vals[: len(columns)]) + "\n")


def _call(cost_fn, theta):
    out = cost_fn(theta)
    f, g = float(out[0]), np.asarray(out[1], dtype=np.float64)
    extra = tuple(float(v) for v in out[2]) if len(out) > 2 else ()
    return f, g, extra


def adam_minimize(theta, cost_fn, lr=1e-3, iters=8000, beta1=0.9, beta2=0.999, eps_hat=1e-8) -> TrainReport:
    """Bias-corrected Adam. Stops early only on a non-finite cost."""
    if lr <= 0 or iters < 1:
        raise ConfigError("adam needs lr > 0 and iters >= 1")
    start = time.perf_counter()
    x = np.array(theta, dtype=np.float64)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    trace = []
    reason = "max iterations"
    for k in range(1, iters + 1):
        f, g, extra = _call(cost_fn, x)
        if not (math.isfinite(f) and np.all(np.isfinite(g))):
            reason = f"non-finite cost at iteration {k - 1}"
            break
        trace.append((f, *extra))
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**k)
        v_hat = v / (1.0 - beta2**k)
        x = x - lr * m_hat / (np.sqrt(v_hat) + eps_hat)
    return TrainReport(x, trace, time.perf_counter() - start, len(trace), reason, evaluations=len(trace))


# --- L-BFGS -----------------------------------------------------------------------


def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimizer of the cubic matching values and slopes at ``a`` and ``b``, or None."""
    d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0:
        return None
    d2 = math.copysign(math.sqrt(disc), b - a)
    denom = gb - ga + 2.0 * d2
    if denom == 0:
        return None
    return b - (b - a) * (gb + d2 - d1) / denom


class _LineSearchFailed(Exception):
    pass


def _strong_wolfe(phi, f0, d0, alpha1, c1, c2, max_evals=25, alpha_max=1e10):
    """Strong-Wolfe step along a descent direction (bracketing phase then zoom).

    ``phi(alpha)`` returns ``(f, slope, payload)``.
    """
    evals = 0
    a_prev, f_prev, d_prev = 0.0, f0, d0
    alpha = alpha1
    best = None

    def zoom(lo, flo, dlo, hi, fhi, dhi):
        nonlocal evals, best
        while evals < max_evals:
            a = _cubic_min(lo, flo, dlo, hi, fhi, dhi)
            left, right = min(lo, hi), max(lo, hi)
            pad = 0.1 * (right - left)
            if a is None or not (left + pad <= a <= right - pad):
                a = 0.5 * (lo + hi)
            f, d, pay = phi(a)
            evals += 1
            if f > f0 + c1 * a * d0 or f >= flo:
                hi, fhi, dhi = a, f, d
            else:
                if abs(d) <= -c2 * d0:
                    return a, f, pay, evals
                if d * (hi - lo) >= 0:
                    hi, fhi, dhi = lo, flo, dlo
                lo, flo, dlo = a, f, d
                best = (a, f, pay)
            if abs(hi - lo) <= 1e-16 * max(1.0, abs(lo)):
                break
        if best is not None and best[1] < f0:
            return best[0], best[1], best[2], evals
        raise _LineSearchFailed

    while evals < max_evals:
        f, d, pay = phi(alpha)
        evals += 1
        if not math.isfinite(f):
            # overshoot into a non-finite region: shrink the step
            alpha = 0.5 * (a_prev + alpha)
            continue
        if f > f0 + c1 * alpha * d0 or (evals > 1 and f >= f_prev):
            return zoom(a_prev, f_prev, d_prev, alpha, f, d)
        if abs(d) <= -c2 * d0:
            return alpha, f, pay, evals
        if d >= 0:
            return zoom(alpha, f, d, a_prev, f_prev, d_prev)
        best = (alpha, f, pay)
        a_prev, f_prev, d_prev = alpha, f, d
        alpha = min(2.0 * alpha, alpha_max)
    raise _LineSearchFailed


def lbfgs_minimize(theta, cost_fn, memory=10, max_iters=20000, ftol=2.22e-16, gtol=1e-10,
                   c1=1e-4, c2=0.9) -> TrainReport:
    """Limited-memory BFGS (two-loop recursion) with a strong-Wolfe line search.

    Terminates when the relative decrease ``(f_k - f_{k+1}) / max(|f_k|, |f_{k+1}|, 1)``
    drops to ``ftol``, the gradient max-norm drops below ``gtol``, the line
    search fails, or after ``max_iters`` iterations.
    """
    if memory < 1:
        raise ConfigError("memory must be >= 1")
    start = time.perf_counter()
    x = np.array(theta, dtype=np.float64)
    f, g, extra = _call(cost_fn, x)
    evals = 1
    trace = []
    S: deque = deque(maxlen=memory)
    Y: deque = deque(maxlen=memory)
    reason = "max iterations"
    if not math.isfinite(f):
        return TrainReport(x, trace, time.perf_counter() - start, 0, "non-finite cost", evals)
    if np.max(np.abs(g), initial=0.0) < gtol:
        return TrainReport(x, trace, time.perf_counter() - start, 0, "gradient tolerance", evals)

    for k in range(max_iters):
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y in reversed(list(zip(S, Y))):
            rho = 1.0 / (y @ s)
            a = rho * (s @ q)
            q -= a * y
            alphas.append((a, rho, s, y))
        if S:
            s, y = S[-1], Y[-1]
            q *= (s @ y) / (y @ y)
        for a, rho, s, y in reversed(alphas):
            b = rho * (y @ q)
            q += (a - b) * s
        d = -q
        slope = g @ d
        if not slope < 0:
            S.clear()
            Y.clear()
            d = -g
            slope = -(g @ g)
        alpha1 = 1.0 if S else min(1.0, 1.0 / max(np.linalg.norm(g), 1e-300))

        def phi(a, x=x, d=d):
            fa, ga, ea = _call(cost_fn, x + a * d)
            return fa, float(ga @ d), (ga, ea)

        try:
            alpha, f_new, (g_new, extra_new), n_ev = _strong_wolfe(phi, f, slope, alpha1, c1, c2)
        except _LineSearchFailed:
            reason = "line search failure"
            break
        evals += n_ev
        x_new = x + alpha * d
        s_vec, y_vec = x_new - x, g_new - g
        if s_vec @ y_vec > 1e-12 * (y_vec @ y_vec):
            S.append(s_vec)
            Y.append(y_vec)
        f_old = f
        x, f, g, extra = x_new, f_new, g_new, extra_new
        trace.append((f, *extra))
        if np.max(np.abs(g)) < gtol:
            reason = "gradient tolerance"
            break
        if (f_old - f) / max(abs(f_old), abs(f), 1.0) <= ftol:
            reason = "ftol"
            break
    return TrainReport(x, trace, time.perf_counter() - start, len(trace), reason, evals)
