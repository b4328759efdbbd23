"""Lax-Friedrichs forward solver for the LWR model with optional diffusion.

Each time step advects with the Lax-Friedrichs scheme and then, when
``epsilon > 0``, relaxes the row with explicit central-difference diffusion
sub-steps (first-order operator splitting).

On a periodic (ring) grid the first and last node are the same physical point:
the ``nx`` unknowns are ``row[:-1]`` and ``row[-1]`` always mirrors ``row[0]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np

from .core import (
    ConfigError,
    DensityField,
    DimensionError,
    DomainError,
    FdParams,
    Grid,
    NumericError,
    StabilityError,
    relative_mse_diff,
)

MAX_DIFFUSION_SUBSTEPS = 100_000

RING_GRID = Grid(0.0, 1.0, 0.0, 3.0, nx=240, nt=960)

RING_PROFILES = {
    # queue on a ring: shock at the tail, fan at the head
    "jam": ("0.2 + 0.6*exp(-((x-0.5)/0.15)^2)",
            lambda x: 0.2 + 0.6 * np.exp(-(((x - 0.5) / 0.15) ** 2))),
    # milder, asymmetric alternative
    "sine-gauss": ("0.5 + 0.4*sin(2*pi*x)*exp(-(x-0.5)^2/0.1)",
                   lambda x: 0.5 + 0.4 * np.sin(2 * np.pi * x) * np.exp(-((x - 0.5) ** 2) / 0.1)),
}
DEFAULT_PROFILE = "jam"
# Bisection target: relative_mse_diff(hyperbolic, parabolic) = 0.35 %.
# Reproduce with calibrate_ring_epsilon(profile=...).
RING_EPSILONS = {"jam": 0.005647, "sine-gauss": 0.009555}
RING_EPSILON = RING_EPSILONS[DEFAULT_PROFILE]


@dataclass(frozen=True)
class Periodic:
    pass


@dataclass(frozen=True)
class Dirichlet:
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "left", np.asarray(self.left, dtype=np.float64))
        object.__setattr__(self, "right", np.asarray(self.right, dtype=np.float64))


BoundaryKind = Union[Periodic, Dirichlet]


def _greenshields(rho, fd: FdParams):
    return fd.v_f * rho * (1.0 - rho / fd.rho_m)


def auto_substeps(grid: Grid, epsilon: float) -> int:
    if epsilon <= 0:
        return 1
    return max(1, math.ceil(epsilon * grid.dt / (0.5 * grid.dx**2)))


@dataclass(frozen=True)
class SolveConfig:
    grid: Grid
    fd: FdParams
    bc: BoundaryKind
    initial: np.ndarray = field(repr=False)
    diffusion_substeps: int | None = None

    def __post_init__(self):
        g = self.grid
        init = np.asarray(self.initial, dtype=np.float64)
        object.__setattr__(self, "initial", init)
        if init.shape != (g.nx + 1,):
            raise DimensionError(f"initial row needs {g.nx + 1} entries, got {init.shape}")
        if not np.all(np.isfinite(init)) or init.min() < 0 or init.max() > self.fd.rho_m:
            raise DomainError("initial density outside [0, rho_m]")
        if self.cfl > 1.0 + 1e-12:
            raise StabilityError(f"CFL number v_f*dt/dx = {self.cfl:.4g} exceeds 1")
        if isinstance(self.bc, Dirichlet):
            for name, s in (("left", self.bc.left), ("right", self.bc.right)):
                if s.shape != (g.nt + 1,):
                    raise DimensionError(f"{name} boundary series needs {g.nt + 1} entries, got {s.shape}")
        k = self.diffusion_substeps
        if k is None:
            k = auto_substeps(g, self.fd.epsilon)
            object.__setattr__(self, "diffusion_substeps", k)
        if k < 1:
            raise ConfigError("diffusion_substeps must be positive")
        if k > MAX_DIFFUSION_SUBSTEPS:
            raise ConfigError(
                f"epsilon={self.fd.epsilon} needs {k} diffusion sub-steps per dt "
                f"(budget {MAX_DIFFUSION_SUBSTEPS})"
            )
        if self.fd.epsilon * (g.dt / k) / g.dx**2 > 0.5 + 1e-12:
            raise StabilityError("diffusion sub-step violates eps*dt_sub/dx^2 <= 1/2")

    @property
    def cfl(self) -> float:
        return self.fd.v_f * self.grid.dt / self.grid.dx


def lax_friedrichs_step(row, cfg: SolveConfig, step: int = 0) -> np.ndarray:
    """Advance one row by ``dt`` with the Lax-Friedrichs scheme.

    ``step`` is the index of the *new* time level; Dirichlet boundaries pin the
    end nodes to ``bc.left[step]`` and ``bc.right[step]``.
    """
    g, fd = cfg.grid, cfg.fd
    row = np.asarray(row, dtype=np.float64)
    if row.shape != (g.nx + 1,):
        raise DimensionError(f"row needs {g.nx + 1} entries, got {row.shape}")
    if cfg.cfl > 1.0 + 1e-12:
        raise StabilityError(f"CFL number {cfg.cfl:.4g} exceeds 1")
    if not np.all(np.isfinite(row)):
        raise NumericError("non-finite density in row")
    c = 0.5 * g.dt / g.dx
    if isinstance(cfg.bc, Periodic):
        u = row[:-1]
        up = np.roll(u, -1)
        um = np.roll(u, 1)
        new = 0.5 * (um + up) - c * (_greenshields(up, fd) - _greenshields(um, fd))
        return np.append(new, new[0])
    out = np.empty_like(row)
    um, up = row[:-2], row[2:]
    out[1:-1] = 0.5 * (um + up) - c * (_greenshields(up, fd) - _greenshields(um, fd))
    out[0] = cfg.bc.left[step]
    out[-1] = cfg.bc.right[step]
    return out


def diffusion_step(row, cfg: SolveConfig) -> np.ndarray:
    """Advance ``d rho/dt = epsilon * rho_xx`` by ``dt`` using explicit sub-steps."""
    g, eps = cfg.grid, cfg.fd.epsilon
    if eps <= 0:
        raise ConfigError("diffusion_step needs epsilon > 0")
    k = cfg.diffusion_substeps
    r = eps * (g.dt / k) / g.dx**2
    row = np.array(row, dtype=np.float64)
    if isinstance(cfg.bc, Periodic):
        u = row[:-1]
        for _ in range(k):
            u = u + r * (np.roll(u, -1) - 2.0 * u + np.roll(u, 1))
        return np.append(u, u[0])
    for _ in range(k):
        row[1:-1] = row[1:-1] + r * (row[2:] - 2.0 * row[1:-1] + row[:-2])
    return row


def solve(cfg: SolveConfig) -> DensityField:
    g = cfg.grid
    values = np.empty(g.shape)
    row = cfg.initial.copy()
    if isinstance(cfg.bc, Periodic):
        row[-1] = row[0]
    else:
        row[0], row[-1] = cfg.bc.left[0], cfg.bc.right[0]
    values[0] = row
    diffuse = cfg.fd.epsilon > 0
    for n in range(1, g.nt + 1):
        row = lax_friedrichs_step(row, cfg, step=n)
        if diffuse:
            row = diffusion_step(row, cfg)
        values[n] = row
    if not np.all(np.isfinite(values)):
        raise NumericError("solver produced non-finite densities")
    return DensityField(g, values)


def reconstruct_lax_friedrichs(initial, left, right, grid: Grid, fd: FdParams) -> DensityField:
    """Numerical baseline: re-solve the field from complete initial and boundary data."""
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    for name, s in (("initial", initial), ("left", left), ("right", right)):
        if not np.all(np.isfinite(np.asarray(s, dtype=np.float64))):
            raise ConfigError(f"{name} data is incomplete (non-finite entries)")
    init = np.clip(np.asarray(initial, dtype=np.float64), 0.0, fd.rho_m)
    cfg = SolveConfig(grid, fd, Dirichlet(left, right), init)
    return solve(cfg)


def _profile(name: str):
    try:
        return RING_PROFILES[name]
    except KeyError:
        raise ConfigError(f"unknown ring profile {name!r}; choose from {sorted(RING_PROFILES)}") from None


def ring_initial_profile(x, profile: str = DEFAULT_PROFILE) -> np.ndarray:
    """Initial ring density. Both profiles straddle the sonic density 0.5, so a
    shock and a rarefaction fan both develop."""
    return _profile(profile)[1](np.asarray(x, dtype=np.float64))


def ring_config(epsilon: float = 0.0, profile: str = DEFAULT_PROFILE) -> SolveConfig:
    fd = FdParams(v_f=1.0, rho_m=1.0, epsilon=epsilon)
    return SolveConfig(RING_GRID, fd, Periodic(), ring_initial_profile(RING_GRID.xs(), profile))


def ring_road_preset(kind: Literal["hyperbolic", "parabolic"],
                     profile: str = DEFAULT_PROFILE) -> tuple[SolveConfig, DensityField]:
    """Normalized ring-road dataset: x in [0, 1], t in [0, 3], 240 x 960 cells, v_f = rho_m = 1.

    The parabolic kind uses the calibrated epsilon for ``profile``.
    """
    _profile(profile)
    if kind == "hyperbolic":
        cfg = ring_config(0.0, profile)
    elif kind == "parabolic":
        cfg = ring_config(RING_EPSILONS[profile], profile)
    else:
        raise ConfigError(f"unknown ring preset kind {kind!r}")
    return cfg, solve(cfg)


def calibrate_ring_epsilon(target: float = 0.0035, lo: float = 1e-5, hi: float = 0.05, iters: int = 40,
                           profile: str = DEFAULT_PROFILE) -> float:
    """Bisect epsilon so the parabolic ring dataset differs from the hyperbolic one by ``target``."""
    hyp = solve(ring_config(0.0, profile))

    def gap(eps):
        return relative_mse_diff(hyp, solve(ring_config(eps, profile))) - target

    if gap(lo) > 0 or gap(hi) < 0:
        raise ConfigError("calibration bracket does not straddle the target")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def preset_manifest(cfg: SolveConfig, profile: str | None = None) -> dict:
    g = cfg.grid
    out = {
        "x0": g.x0, "x1": g.x1, "t0": g.t0, "t1": g.t1, "nx": g.nx, "nt": g.nt,
        "v_f": cfg.fd.v_f, "rho_m": cfg.fd.rho_m, "epsilon": cfg.fd.epsilon,
        "bc": type(cfg.bc).__name__.lower(),
        "diffusion_substeps": cfg.diffusion_substeps,
    }
    if profile is not None:
        out["profile"] = profile
        out["initial_profile"] = _profile(profile)[0]
    return out
