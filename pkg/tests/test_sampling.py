import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lwr_pidl import solver
from lwr_pidl.core import ConfigError, DensityField, DomainError, FdParams, Grid, observations_to_arrays
from lwr_pidl.sampling import (
    SamplingPlan,
    build_observations,
    cv_trajectories,
    ic_bc_nodes,
    latin_hypercube,
    sample_eulerian,
    sample_ic_bc,
    sample_lagrangian,
)

RING_BOUNDS = (0.0, 1.0, 0.0, 3.0)


@pytest.fixture(scope="module")
def ring():
    return solver.ring_road_preset("hyperbolic")[1]


def uniform_field(value, grid=solver.RING_GRID):
    return DensityField(grid, np.full(grid.shape, value))


def strata_filled(values, lo, hi, n):
    idx = np.floor((values - lo) / (hi - lo) * n).astype(int)
    return np.array_equal(np.sort(idx), np.arange(n))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 500), st.integers(0, 2**63 - 1))
def test_lhs_stratified(n, seed):
    c = latin_hypercube(n, RING_BOUNDS, seed)
    assert c.count == n
    assert strata_filled(c.x, 0.0, 1.0, n) and strata_filled(c.t, 0.0, 3.0, n)


def test_lhs_examples():
    one = latin_hypercube(1, (0, 1, 0, 1), 0)
    assert 0 <= one.x[0] <= 1 and 0 <= one.t[0] <= 1
    ten = latin_hypercube(10, (0, 1, 0, 1), 3)
    assert strata_filled(ten.x, 0, 1, 10) and strata_filled(ten.t, 0, 1, 10)
    big = latin_hypercube(10_000, RING_BOUNDS, 1)
    assert np.all((big.x >= 0) & (big.x <= 1) & (big.t >= 0) & (big.t <= 3))
    assert np.array_equal(big.points, latin_hypercube(10_000, RING_BOUNDS, 1).points)
    with pytest.raises(ConfigError):
        latin_hypercube(0, RING_BOUNDS, 0)


def test_ic_bc_counts(ring):
    assert len(ic_bc_nodes(ring)) == 241 + 961 + 961 - 2
    assert len(sample_ic_bc(ring, 1.0, 0)) == 2161
    assert len(sample_ic_bc(ring, 0.2, 0)) == 432
    assert len(sample_ic_bc(ring, 0.05, 0)) == 108
    for frac in (0.1, 0.5, 0.9):
        assert len(sample_ic_bc(ring, frac, 4)) == int(np.floor(frac * 2161 + 0.5))


def test_ic_bc_points_lie_on_edges_and_match_field(ring):
    obs = sample_ic_bc(ring, 0.2, 7)
    x, t, rho = observations_to_arrays(obs)
    assert np.all((t == 0) | (x == 0) | (x == 1))
    assert len(set(zip(x, t))) == len(obs)
    assert np.allclose(ring.interpolate(x, t), rho, rtol=0, atol=1e-12)
    assert obs == sample_ic_bc(ring, 0.2, 7)
    assert obs != sample_ic_bc(ring, 0.2, 8)


def test_ic_bc_errors(ring):
    with pytest.raises(ConfigError):
        sample_ic_bc(ring, 0.0, 0)
    with pytest.raises(ConfigError):
        sample_ic_bc(ring, 1e-6, 0)


def test_eulerian(ring):
    assert len(sample_eulerian(ring, [0.5])) == 961
    five = sample_eulerian(ring, [0, 0.25, 0.5, 0.75, 1.0])
    assert len(five) == 5 * 961
    x, t, rho = observations_to_arrays(five)
    assert np.allclose(ring.interpolate(x, t), rho, rtol=0, atol=1e-12)
    gone = sample_eulerian(ring, [0.25, 0.5], dropout=[(0, (0.0, 3.0))])
    assert len(gone) == 961 and {o.x for o in gone} == {0.5}
    gap = sample_eulerian(ring, [0.5], dropout=[(0, (1.0, 2.0))])
    assert len(gap) == 961 - 321
    with pytest.raises(DomainError):
        sample_eulerian(ring, [1.5])


def test_eulerian_snaps_to_nodes(ring):
    obs = sample_eulerian(ring, [0.501])
    assert obs[0].x == pytest.approx(120 / 240)


def test_trajectories_straight_at_constant_density():
    path = cv_trajectories(uniform_field(0.4), 5, seed=1)
    g = solver.RING_GRID
    for row in path:
        unwrapped = row[0] + 0.6 * g.ts()
        assert np.allclose(np.mod(unwrapped, 1.0), row, rtol=0, atol=1e-9)


def test_trajectories_stand_still_in_jam():
    path = cv_trajectories(uniform_field(1.0), 4, seed=2)
    assert np.all(path == path[:, :1])


def test_open_road_truncates():
    g = Grid(0, 1, 0, 3, 40, 120)
    path = cv_trajectories(uniform_field(0.0, g), 3, seed=0, periodic=False, x_start=[0.1, 0.5, 0.9])
    assert np.isnan(path[2, -1]) and np.isfinite(path[2, 0])
    assert np.all(np.isfinite(path[:, :2]))


def test_lagrangian_counts_and_values(ring):
    obs = sample_lagrangian(ring, 20, 4584, seed=3)
    assert len(obs) == 4584
    x, t, rho = observations_to_arrays(obs)
    assert np.allclose(ring.interpolate(x, t, periodic=True), rho, rtol=0, atol=1e-12)
    assert len(sample_lagrangian(ring, 20, 1146, seed=3)) == 1146
    assert obs == sample_lagrangian(ring, 20, 4584, seed=3)
    with pytest.raises(ConfigError):
        sample_lagrangian(ring, 1, 10_000, seed=0)
    with pytest.raises(ConfigError):
        sample_lagrangian(ring, 20, 0, seed=0)


def test_build_observations(ring):
    plan = SamplingPlan(ic_bc_fraction=0.05, cv_count=20, cv_points=4584, seed=2)
    obs = build_observations(ring, plan, FdParams())
    assert len(obs) == 108 + 4584
    plan = SamplingPlan(ic_bc_fraction=0.0, eulerian_positions=(0.0, 0.5), seed=0)
    assert len(build_observations(ring, plan)) == 2 * 961
    with pytest.raises(ConfigError):
        build_observations(ring, SamplingPlan(ic_bc_fraction=0.0))
    with pytest.raises(ConfigError):
        SamplingPlan(ic_bc_fraction=1.5)
    with pytest.raises(ConfigError):
        SamplingPlan(cv_points=10, cv_count=0)


def test_missing_cells_are_not_observed():
    g = Grid(0, 1, 0, 1, 4, 4)
    v = np.full(g.shape, 0.3)
    v[0, 2] = np.nan
    obs = sample_ic_bc(DensityField(g, v), 1.0, 0)
    assert len(obs) == len(ic_bc_nodes(DensityField(g, v))) - 1
