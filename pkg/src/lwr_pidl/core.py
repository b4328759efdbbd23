"""Grid and field containers, error metrics, seeded randomness, field CSV I/O.

Density values live on grid *nodes*: a field over ``nx`` spatial cells and
``nt`` time steps is an ``(nt + 1, nx + 1)`` matrix whose row ``n`` is the
density profile at ``t0 + n * dt``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    """Array shapes or grids do not agree."""


class DegenerateError(ValueError):
    """A normalising quantity is zero."""


class DomainError(ValueError):
    """A physical quantity lies outside its admissible range."""


class ConfigError(ValueError):
    """A configuration or sampling request cannot be satisfied."""


class StabilityError(RuntimeError):
    """An explicit scheme was asked to step beyond its stability limit."""


class NumericError(RuntimeError):
    """Non-finite values appeared during a computation."""


@dataclass(frozen=True)
class Grid:
    x0: float
    x1: float
    t0: float
    t1: float
    nx: int
    nt: int

    def __post_init__(self):
        if self.nx < 2 or self.nt < 1:
            raise ConfigError(f"grid needs nx >= 2 and nt >= 1, got nx={self.nx}, nt={self.nt}")
        if not (self.x1 > self.x0 and self.t1 > self.t0):
            raise ConfigError("grid extents must be increasing")

    @property
    def dx(self) -> float:
        return (self.x1 - self.x0) / self.nx

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.nt

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nt + 1, self.nx + 1)

    def xs(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx + 1)

    def ts(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt + 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates as two ``(nt + 1, nx + 1)`` arrays ``(X, T)``."""
        return np.meshgrid(self.xs(), self.ts())

    def contains(self, x, t) -> np.ndarray:
        x = np.asarray(x)
        t = np.asarray(t)
        return (x >= self.x0) & (x <= self.x1) & (t >= self.t0) & (t <= self.t1)


@dataclass(frozen=True)
class FdParams:
    """Greenshields fundamental diagram plus an optional diffusion coefficient."""

    v_f: float = 1.0
    rho_m: float = 1.0
    epsilon: float = 0.0

    def __post_init__(self):
        if not self.v_f > 0 or not self.rho_m > 0:
            raise DomainError("v_f and rho_m must be positive")
        if not self.epsilon >= 0:
            raise DomainError("epsilon must be non-negative")


@dataclass(frozen=True)
class DensityField:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise DimensionError(f"values have shape {vals.shape}, grid expects {self.grid.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def out_of_range(self, rho_m: float) -> int:
        """Number of nodes with density outside ``[0, rho_m]``."""
        v = self.values
        return int(np.count_nonzero((v < 0) | (v > rho_m)))

    def interpolate(self, x, t, periodic: bool = False) -> np.ndarray:
        """Bilinear interpolation of the nodal values at ``(x, t)``."""
        g = self.grid
        x = np.asarray(x, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64)
        if periodic:
            x = g.x0 + np.mod(x - g.x0, g.x1 - g.x0)
        fx = np.clip((x - g.x0) / g.dx, 0.0, g.nx)
        ft = np.clip((t - g.t0) / g.dt, 0.0, g.nt)
        i = np.minimum(np.floor(fx).astype(np.intp), g.nx - 1)
        n = np.minimum(np.floor(ft).astype(np.intp), g.nt - 1)
        wx = fx - i
        wt = ft - n
        v = self.values
        lo = (1 - wx) * v[n, i] + wx * v[n, i + 1]
        hi = (1 - wx) * v[n + 1, i] + wx * v[n + 1, i + 1]
        return (1 - wt) * lo + wt * hi


@dataclass(frozen=True)
class Observation:
    x: float
    t: float
    rho: float


def observations_to_arrays(obs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(obs) == 0:
        empty = np.empty(0)
        return empty, empty.copy(), empty.copy()
    arr = np.array([(o.x, o.t, o.rho) for o in obs], dtype=np.float64)
    return arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy()


def _check_same_grid(a: DensityField, b: DensityField):
    if a.grid != b.grid or a.values.shape != b.values.shape:
        raise DimensionError("fields are defined on different grids")


def relative_l2(truth: DensityField, estimate: DensityField) -> float:
    """Frobenius-norm error of ``estimate`` relative to the norm of ``truth``."""
    _check_same_grid(truth, estimate)
    denom = np.linalg.norm(truth.values)
    if denom == 0:
        raise DegenerateError("truth field has zero norm")
    return float(np.linalg.norm(truth.values - estimate.values) / denom)


def relative_mse_diff(a: DensityField, b: DensityField) -> float:
    """``mean((a - b)**2) / mean(a**2)``."""
    _check_same_grid(a, b)
    ms = np.mean(a.values**2)
    if ms == 0:
        raise DegenerateError("reference field has zero mean square")
    return float(np.mean((a.values - b.values) ** 2) / ms)


def seeded_rng(seed: int) -> np.random.Generator:
    """Deterministic generator: NumPy's PCG64 bit generator seeded with ``seed``.

    PCG64 output for a given seed is fixed across platforms and NumPy releases,
    which is what makes experiment outputs bit-reproducible.
    """
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


# --- CSV I/O ---------------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


def write_field_csv(fld: DensityField, path) -> None:
    """Header line ``# nx,nt,x0,x1,t0,t1`` then one comma-separated row per time step."""
    g = fld.grid
    path = os.fspath(path)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# {g.nx},{g.nt},{_fmt(g.x0)},{_fmt(g.x1)},{_fmt(g.t0)},{_fmt(g.t1)}\n")
        for row in fld.values:
            fh.write(",".join(_fmt(v) for v in row))
            fh.write("\n")


def read_field_csv(path) -> DensityField:
    path = os.fspath(path)
    with open(path, encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise DimensionError(f"{path}: missing '# nx,nt,x0,x1,t0,t1' header")
    head = [h.strip() for h in lines[0].lstrip("#").split(",")]
    if len(head) != 6:
        raise DimensionError(f"{path}: header needs 6 entries, got {len(head)}")
    try:
        nx, nt = int(head[0]), int(head[1])
        x0, x1, t0, t1 = (float(h) for h in head[2:])
    except ValueError as exc:
        raise DimensionError(f"{path}: malformed header: {lines[0]!r}") from exc
    grid = Grid(x0, x1, t0, t1, nx, nt)
    rows = lines[1:]
    if len(rows) != nt + 1:
        raise DimensionError(f"{path}: header says nt={nt} ({nt + 1} rows) but file has {len(rows)} rows")
    values = np.empty((nt + 1, nx + 1))
    for n, ln in enumerate(rows):
        cells = ln.split(",")
        if len(cells) != nx + 1:
            raise DimensionError(
                f"{path}: row {n} has {len(cells)} columns, header says nx={nx} ({nx + 1} columns)"
            )
        try:
            # blank cell = missing measurement
            values[n] = [float(c) if c.strip() else np.nan for c in cells]
        except ValueError as exc:
            raise DimensionError(f"{path}: non-numeric cell in row {n}") from exc
    return DensityField(grid, values)


def write_observations_csv(obs, path) -> None:
    x, t, rho = observations_to_arrays(obs)
    with open(os.fspath(path), "w", encoding="ascii") as fh:
        fh.write("x,t,rho\n")
        for a, b, c in zip(x, t, rho):
            fh.write(f"{_fmt(a)},{_fmt(b)},{_fmt(c)}\n")


def read_observations_csv(path) -> list[Observation]:
    data = np.loadtxt(os.fspath(path), delimiter=",", skiprows=1, ndmin=2)
    return [Observation(float(a), float(b), float(c)) for a, b, c in data]

