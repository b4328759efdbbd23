"""Greenshields fundamental diagram and exact Riemann solutions of the LWR model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, FdParams


def _check_density(rho, fd: FdParams):
    r = np.asarray(rho, dtype=np.float64)
    if not np.all(np.isfinite(r)) or np.any(r < 0) or np.any(r > fd.rho_m):
        raise DomainError(f"density outside [0, {fd.rho_m}]")
    return r


def _scalar_or_array(r):
    return float(r) if np.ndim(r) == 0 else r


def flux(rho, fd: FdParams):
    """Traffic flow ``q = rho * v_f * (1 - rho / rho_m)``."""
    r = _check_density(rho, fd)
    return _scalar_or_array(r * fd.v_f * (1.0 - r / fd.rho_m))


def velocity(rho, fd: FdParams):
    r = _check_density(rho, fd)
    return _scalar_or_array(fd.v_f * (1.0 - r / fd.rho_m))


def characteristic_speed(rho, fd: FdParams):
    """``dq/drho = v_f * (1 - 2 rho / rho_m)``; zero at the sonic density."""
    r = _check_density(rho, fd)
    return _scalar_or_array(fd.v_f * (1.0 - 2.0 * r / fd.rho_m))


@dataclass(frozen=True)
class RiemannProblem:
    rho_l: float
    rho_r: float
    fd: FdParams

    def __post_init__(self):
        _check_density([self.rho_l, self.rho_r], self.fd)


def shock_speed(p: RiemannProblem) -> float:
    """Rankine-Hugoniot speed of the discontinuity joining ``rho_l`` and ``rho_r``."""
    if p.rho_l == p.rho_r:
        raise DomainError("shock speed is undefined for equal states")
    return p.fd.v_f * (1.0 - (p.rho_l + p.rho_r) / p.fd.rho_m)


def riemann_entropy_solution(p: RiemannProblem, x, t):
    """Entropy solution of the Riemann problem with the jump at ``x = 0``, ``t = 0``.

    ``rho_l < rho_r`` gives a shock, ``rho_l > rho_r`` a rarefaction fan whose
    interior inverts the characteristic speed: ``rho = (rho_m/2)(1 - (x/t)/v_f)``.
    Accepts scalar or array ``x``.
    """
    if np.any(np.asarray(t) <= 0):
        raise DomainError("riemann_entropy_solution needs t > 0")
    fd = p.fd
    xi = np.asarray(x, dtype=np.float64) / t
    if p.rho_l == p.rho_r:
        out = np.full_like(xi, p.rho_l)
    elif p.rho_l < p.rho_r:
        s = shock_speed(p)
        out = np.where(xi < s, p.rho_l, p.rho_r)
    else:
        lam_l = characteristic_speed(p.rho_l, fd)
        lam_r = characteristic_speed(p.rho_r, fd)
        fan = 0.5 * fd.rho_m * (1.0 - xi / fd.v_f)
        out = np.where(xi < lam_l, p.rho_l, np.where(xi < lam_r, fan, p.rho_r))
    return _scalar_or_array(out)
