"""Training-point builders: collocation points and the observation scenarios.

* Latin hypercube collocation points over the space-time rectangle.
* A random fraction of the initial-row and boundary-column nodes.
* Fixed roadside sensors (Eulerian), optionally with outage intervals.
* Connected-vehicle samples (Lagrangian) taken along trajectories that follow
  the macroscopic speed ``v(rho)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, DensityField, DomainError, FdParams, Observation, seeded_rng


@dataclass(frozen=True)
class CollocationSet:
    points: np.ndarray = field(repr=False)  # (n, 2) columns x, t

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def t(self) -> np.ndarray:
        return self.points[:, 1]


@dataclass(frozen=True)
class SamplingPlan:
    ic_bc_fraction: float = 0.2
    eulerian_positions: tuple[float, ...] = ()
    eulerian_dropout: tuple[tuple[int, tuple[float, float]], ...] = ()
    cv_count: int = 0
    cv_points: int = 0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.ic_bc_fraction <= 1.0:
            raise ConfigError("ic_bc_fraction must lie in [0, 1]")
        if self.cv_points and self.cv_count < 1:
            raise ConfigError("cv_points requested without any connected vehicles")


def latin_hypercube(n: int, bounds, seed: int) -> CollocationSet:
    """``n`` points in ``bounds = (x0, x1, t0, t1)``, one per stratum in each dimension."""
    if n < 1:
        raise ConfigError("latin_hypercube needs n >= 1")
    x0, x1, t0, t1 = bounds
    rng = seeded_rng(seed)
    cols = []
    for lo, hi in ((x0, x1), (t0, t1)):
        u = (rng.permutation(n) + rng.random(n)) / n
        cols.append(lo + u * (hi - lo))
    return CollocationSet(np.column_stack(cols))


def ic_bc_nodes(field: DensityField) -> np.ndarray:
    """``(n, i)`` index pairs of the initial row and both boundary columns, corners once."""
    g = field.grid
    init = [(0, i) for i in range(g.nx + 1)]
    left = [(n, 0) for n in range(1, g.nt + 1)]
    right = [(n, g.nx) for n in range(1, g.nt + 1)]
    return np.array(init + left + right, dtype=np.intp)


def _round_half_up(v: float) -> int:
    return int(np.floor(v + 0.5))


def _node_observations(field: DensityField, idx: np.ndarray) -> list[Observation]:
    g = field.grid
    xs, ts = g.xs(), g.ts()
    v = field.values
    # missing cells (NaN) in external grids are not observations
    return [Observation(float(xs[i]), float(ts[n]), float(v[n, i])) for n, i in idx if np.isfinite(v[n, i])]


def sample_ic_bc(field: DensityField, fraction: float, seed: int) -> list[Observation]:
    """Uniform subsample (no replacement) of ``round(fraction * #nodes)`` initial/boundary nodes."""
    if not 0.0 < fraction <= 1.0:
        raise ConfigError("fraction must lie in (0, 1]")
    nodes = ic_bc_nodes(field)
    count = _round_half_up(fraction * len(nodes))
    if count == 0:
        raise ConfigError(f"fraction {fraction} selects no initial/boundary nodes")
    rng = seeded_rng(seed)
    pick = np.sort(rng.choice(len(nodes), size=count, replace=False))
    return _node_observations(field, nodes[pick])


def sample_eulerian(field: DensityField, positions, dropout=()) -> list[Observation]:
    """Every time sample at each sensor, minus outages.

    Sensor positions snap to the nearest grid node. ``dropout`` holds
    ``(sensor_index, (t_start, t_end))`` outages; samples with
    ``t_start <= t <= t_end`` are dropped.
    """
    g = field.grid
    ts = g.ts()
    obs = []
    for k, x in enumerate(positions):
        if not g.x0 <= x <= g.x1:
            raise DomainError(f"sensor position {x} outside [{g.x0}, {g.x1}]")
        i = int(round((x - g.x0) / g.dx))
        keep = np.ones(g.nt + 1, dtype=bool)
        for sensor, (a, b) in dropout:
            if sensor == k:
                keep &= ~((ts >= a) & (ts <= b))
        idx = np.array([(n, i) for n in np.flatnonzero(keep)], dtype=np.intp).reshape(-1, 2)
        obs.extend(_node_observations(field, idx))
    return obs


def cv_trajectories(field: DensityField, cv_count: int, seed: int, fd: FdParams | None = None,
                    periodic: bool = True, x_start=None) -> np.ndarray:
    """Vehicle positions at every grid time, shape ``(cv_count, nt + 1)``.

    Explicit Euler at the grid ``dt`` on ``dx/dt = v(rho(x, t))`` with bilinear
    interpolation of the density. Without periodic wrap a vehicle that leaves
    the road is recorded as NaN from then on.
    """
    if cv_count < 1:
        raise ConfigError("cv_count must be >= 1")
    fd = fd or FdParams()
    g = field.grid
    if x_start is None:
        rng = seeded_rng(seed)
        x_start = np.sort(g.x0 + (g.x1 - g.x0) * rng.random(cv_count))
    x = np.asarray(x_start, dtype=np.float64).copy()
    ts = g.ts()
    path = np.full((cv_count, g.nt + 1), np.nan)
    path[:, 0] = x
    alive = np.ones(cv_count, dtype=bool)
    length = g.x1 - g.x0
    for n in range(g.nt):
        rho = np.clip(field.interpolate(x[alive], ts[n], periodic=periodic), 0.0, fd.rho_m)
        x[alive] = x[alive] + g.dt * fd.v_f * (1.0 - rho / fd.rho_m)
        if periodic:
            x = g.x0 + np.mod(x - g.x0, length)
        else:
            alive &= (x >= g.x0) & (x <= g.x1)
        path[alive, n + 1] = x[alive]
    return path


def sample_lagrangian(field: DensityField, cv_count: int, n_points: int, seed: int,
                      fd: FdParams | None = None, periodic: bool = True) -> list[Observation]:
    """Exactly ``n_points`` density samples thinned uniformly from all trajectory points."""
    if n_points < 1:
        raise ConfigError("n_points must be >= 1")
    path = cv_trajectories(field, cv_count, seed, fd, periodic)
    ts = field.grid.ts()
    veh, step = np.nonzero(np.isfinite(path))
    if veh.size == 0:
        raise ConfigError("no trajectory points to sample from")
    if n_points > veh.size:
        raise ConfigError(f"requested {n_points} samples but trajectories only hold {veh.size}")
    rng = seeded_rng(seed + 1)
    pick = np.sort(rng.choice(veh.size, size=n_points, replace=False))
    xs = path[veh[pick], step[pick]]
    tt = ts[step[pick]]
    rho = field.interpolate(xs, tt, periodic=periodic)
    return [Observation(float(a), float(b), float(c)) for a, b, c in zip(xs, tt, rho)]


def build_observations(field: DensityField, plan: SamplingPlan, fd: FdParams | None = None,
                       periodic: bool = True) -> list[Observation]:
    """All observations a plan asks for, in the order IC/BC, Eulerian, Lagrangian."""
    obs: list[Observation] = []
    if plan.ic_bc_fraction > 0:
        obs += sample_ic_bc(field, plan.ic_bc_fraction, plan.seed)
    if plan.eulerian_positions:
        obs += sample_eulerian(field, plan.eulerian_positions, plan.eulerian_dropout)
    if plan.cv_points:
        obs += sample_lagrangian(field, plan.cv_count, plan.cv_points, plan.seed + 7919, fd, periodic)
    if not obs:
        raise ConfigError("sampling plan produced no observations")
    return obs
