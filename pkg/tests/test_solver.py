import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lwr_pidl import solver
from lwr_pidl.analytic import RiemannProblem, riemann_entropy_solution
from lwr_pidl.core import (
    ConfigError,
    DensityField,
    DimensionError,
    DomainError,
    FdParams,
    Grid,
    NumericError,
    StabilityError,
    relative_l2,
    relative_mse_diff,
)
from lwr_pidl.solver import (
    Dirichlet,
    Periodic,
    SolveConfig,
    diffusion_step,
    lax_friedrichs_step,
    reconstruct_lax_friedrichs,
    solve,
)

UNIT = FdParams(1.0, 1.0)


def periodic_cfg(row, grid, fd=UNIT, **kw):
    return SolveConfig(grid, fd, Periodic(), np.asarray(row, dtype=float), **kw)


def riemann_cfg(nx, rho_l, rho_r, t_end=0.5, cfl=0.75, eps=0.0):
    dx = 2.0 / nx
    nt = int(round(t_end / (cfl * dx)))
    g = Grid(-1.0, 1.0, 0.0, t_end, nx, nt)
    init = np.where(g.xs() < 0, rho_l, rho_r).astype(float)
    bc = Dirichlet(np.full(nt + 1, rho_l), np.full(nt + 1, rho_r))
    return SolveConfig(g, FdParams(1.0, 1.0, eps), bc, init)


def riemann_l1(nx, rho_l, rho_r):
    cfg = riemann_cfg(nx, rho_l, rho_r)
    f = solve(cfg)
    g = cfg.grid
    exact = riemann_entropy_solution(RiemannProblem(rho_l, rho_r, UNIT), g.xs(), g.t1)
    return float(np.sum(np.abs(f.values[-1] - exact)) * g.dx)


# --- Lax-Friedrichs step ---------------------------------------------------------


def test_constant_rows_are_fixed_points():
    g = Grid(0, 1, 0, 1, 20, 40)
    for c in (0.4, 1.0, 0.0):
        row = np.full(21, c)
        assert np.array_equal(lax_friedrichs_step(row, periodic_cfg(row, g)), row)


def test_three_node_periodic_hand_case():
    # nodes 0 and 2 are the same ring point; unknowns are [0.2, 0.8]
    # new_0 = (0.8 + 0.8)/2 - 0.25*(q(0.8) - q(0.8)) = 0.8, new_1 = 0.2
    g = Grid(0.0, 1.0, 0.0, 0.25, nx=2, nt=1)  # dt/dx = 0.5
    row = np.array([0.2, 0.8, 0.2])
    out = lax_friedrichs_step(row, periodic_cfg(row, g))
    assert np.allclose(out, [0.8, 0.2, 0.8], rtol=0, atol=1e-15)


def test_dirichlet_hand_case():
    g = Grid(0.0, 1.0, 0.0, 0.25, nx=4, nt=1)  # dt/dx = 1, c = 0.5
    row = np.array([0.1, 0.3, 0.6, 0.9, 0.5])
    bc = Dirichlet([0.1, 0.15], [0.5, 0.55])
    cfg = SolveConfig(g, UNIT, bc, row)
    q = lambda r: r * (1 - r)  # noqa: E731
    want = [0.15,
            0.5 * (0.1 + 0.6) - 0.5 * (q(0.6) - q(0.1)),
            0.5 * (0.3 + 0.9) - 0.5 * (q(0.9) - q(0.3)),
            0.5 * (0.6 + 0.5) - 0.5 * (q(0.5) - q(0.6)),
            0.55]
    assert np.allclose(lax_friedrichs_step(row, cfg, step=1), want, rtol=0, atol=1e-15)


def test_step_errors():
    g = Grid(0, 1, 0, 1, 10, 5)  # dt/dx = 2
    with pytest.raises(StabilityError):
        periodic_cfg(np.full(11, 0.3), g)
    g = Grid(0, 1, 0, 1, 10, 20)
    cfg = periodic_cfg(np.full(11, 0.3), g)
    with pytest.raises(NumericError):
        lax_friedrichs_step(np.r_[np.nan, np.full(10, 0.3)], cfg)
    with pytest.raises(DimensionError):
        lax_friedrichs_step(np.full(7, 0.3), cfg)


def test_config_validation():
    g = Grid(0, 1, 0, 1, 10, 20)
    with pytest.raises(DomainError):
        periodic_cfg(np.full(11, 1.2), g)
    with pytest.raises(DimensionError):
        periodic_cfg(np.full(5, 0.2), g)
    with pytest.raises(DimensionError):
        SolveConfig(g, UNIT, Dirichlet(np.zeros(3), np.zeros(21)), np.full(11, 0.2))
    with pytest.raises(ConfigError):
        periodic_cfg(np.full(11, 0.2), g, fd=FdParams(1, 1, 1e6))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.1, 1.0))
def test_periodic_mass_conserved_and_bounded(seed, cfl):
    rng = np.random.default_rng(seed)
    nx = 50
    g = Grid(0, 1, 0, 1, nx, int(np.ceil(nx / cfl)))
    row = rng.uniform(0, 1, nx + 1)
    row[-1] = row[0]
    cfg = periodic_cfg(row, g)
    out = lax_friedrichs_step(row, cfg)
    assert abs(out[:-1].sum() * g.dx - row[:-1].sum() * g.dx) <= 1e-12
    assert out.min() >= row.min() - 1e-15 and out.max() <= row.max() + 1e-15


# --- diffusion ---------------------------------------------------------------------


def test_diffusion_constant_and_spike():
    g = Grid(0, 1, 0, 0.1, 40, 10)
    cfg = periodic_cfg(np.full(41, 0.5), g, fd=FdParams(1, 1, 1e-3))
    assert np.allclose(diffusion_step(np.full(41, 0.5), cfg), 0.5, rtol=0, atol=1e-15)
    spike = np.full(41, 0.2)
    spike[20] = 0.9
    out = diffusion_step(spike, cfg)
    assert out.max() < 0.9 and out[:-1].min() >= 0.2 and out[19] > 0.2
    assert abs(out[:-1].sum() - spike[:-1].sum()) <= 1e-12


def test_diffusion_needs_epsilon():
    g = Grid(0, 1, 0, 0.1, 40, 10)
    with pytest.raises(ConfigError):
        diffusion_step(np.full(41, 0.5), periodic_cfg(np.full(41, 0.5), g))


def test_substep_count():
    g = solver.RING_GRID
    assert solver.auto_substeps(g, 0.0) == 1
    eps = 0.01
    k = solver.auto_substeps(g, eps)
    assert eps * (g.dt / k) / g.dx**2 <= 0.5
    assert eps * (g.dt / (k - 1)) / g.dx**2 > 0.5


def test_diffusion_matches_heat_kernel():
    # Gaussian of variance s0^2 spreads to s0^2 + 2 eps t with amplitude s0/s
    nx, eps, s0 = 400, 2e-3, 0.04
    g = Grid(0, 1, 0, 0.05, nx, 10)
    x = g.xs()
    gauss = lambda s: (s0 / s) * np.exp(-((x - 0.5) ** 2) / (2 * s * s))  # noqa: E731
    row = gauss(s0)
    cfg = periodic_cfg(np.clip(row, 0, 1), g, fd=FdParams(1e-3, 1, eps))  # tiny v_f: CFL only
    for _ in range(10):
        row = diffusion_step(row, cfg)
    exact = gauss(np.sqrt(s0**2 + 2 * eps * g.t1))
    assert np.max(np.abs(row - exact)) / exact.max() <= 0.02


# --- solve ---------------------------------------------------------------------------


def test_constant_field():
    g = Grid(0, 1, 0, 1, 30, 60)
    f = solve(periodic_cfg(np.full(31, 0.35), g, fd=FdParams(1, 1, 1e-3)))
    assert np.allclose(f.values, 0.35, rtol=0, atol=1e-14)


@pytest.mark.parametrize("rho_l,rho_r", [(0.2, 0.8), (0.8, 0.2)])
def test_riemann_convergence(rho_l, rho_r):
    errs = [riemann_l1(nx, rho_l, rho_r) for nx in (60, 120, 240)]
    assert errs[2] <= 0.05
    assert errs[0] > errs[1] > errs[2]


def test_reconstruct_riemann_shock_position():
    # moving shock rho_l = 0.1, rho_r = 0.6, speed 0.3
    cfg = riemann_cfg(240, 0.1, 0.6)
    g = cfg.grid
    f = reconstruct_lax_friedrichs(cfg.initial, cfg.bc.left, cfg.bc.right, g, UNIT)
    row = f.values[-1]
    x_half = g.xs()[np.argmax(row >= 0.35)]  # where the smeared jump crosses mid-height
    assert abs(x_half - 0.3 * g.t1) <= 2 * g.dx


def test_reconstruct_constant_and_incomplete():
    g = Grid(0, 1, 0, 1, 20, 40)
    f = reconstruct_lax_friedrichs(np.full(21, 0.3), np.full(41, 0.3), np.full(41, 0.3), g, UNIT)
    assert np.allclose(f.values, 0.3, rtol=0, atol=1e-15)
    left = np.full(41, 0.3)
    left[5] = np.nan
    with pytest.raises(ConfigError, match="left"):
        reconstruct_lax_friedrichs(np.full(21, 0.3), left, np.full(41, 0.3), g, UNIT)


# --- ring preset -------------------------------------------------------------------


@pytest.fixture(scope="module")
def ring_pair():
    return solver.ring_road_preset("hyperbolic")[1], solver.ring_road_preset("parabolic")[1]


def test_ring_preset_grid_and_bounds(ring_pair):
    hyp, par = ring_pair
    assert hyp.grid == solver.RING_GRID and hyp.values.shape == (961, 241)
    for f in ring_pair:
        assert f.values.min() >= 0 and f.values.max() <= 1
        assert np.array_equal(f.values[:, 0], f.values[:, -1])


def test_ring_pair_closeness(ring_pair):
    d = relative_mse_diff(*ring_pair)
    assert d <= 0.01
    assert d == pytest.approx(0.0035, abs=2e-5)


def test_ring_shock_forms(ring_pair):
    hyp = ring_pair[0]
    grad = np.max(np.abs(np.diff(hyp.values, axis=1)), axis=1) / hyp.grid.dx
    # steepening until the shock forms near t = 0.3, then capped by numerical viscosity
    early = grad[:101:20]
    assert np.all(np.diff(early) > 0)
    assert grad[100] > 5 * grad[0]


def test_ring_mass_conserved(ring_pair):
    for f in ring_pair:
        mass = f.values[:, :-1].sum(axis=1) * f.grid.dx
        assert np.max(np.abs(np.diff(mass))) <= 1e-12


def test_ring_epsilon_to_zero():
    g = solver.RING_GRID
    a = solve(solver.ring_config(0.0))
    b = solve(solver.ring_config(1e-8))
    assert relative_l2(a, b) <= 1e-3
    assert g.nx == 240


def test_ring_reconstruction_self_consistent(ring_pair):
    hyp = ring_pair[0]
    v = hyp.values
    rec = reconstruct_lax_friedrichs(v[0], v[:, 0], v[:, -1], hyp.grid, UNIT)
    assert relative_l2(hyp, rec) <= 0.05


@pytest.mark.parametrize("profile", sorted(solver.RING_PROFILES))
def test_shipped_epsilon_hits_target(profile):
    hyp = solve(solver.ring_config(0.0, profile))
    par = solve(solver.ring_config(solver.RING_EPSILONS[profile], profile))
    assert relative_mse_diff(hyp, par) == pytest.approx(0.0035, abs=2e-5)


def test_calibration_reproduces_shipped_value():
    eps = solver.calibrate_ring_epsilon(iters=25)
    assert eps == pytest.approx(solver.RING_EPSILON, abs=5e-6)


def test_unknown_profile_and_kind():
    with pytest.raises(ConfigError):
        solver.ring_initial_profile(0.5, "nope")
    with pytest.raises(ConfigError):
        solver.ring_road_preset("elliptic")


def test_preset_manifest():
    cfg = solver.ring_config(solver.RING_EPSILON)
    m = solver.preset_manifest(cfg, "jam")
    assert m["nx"] == 240 and m["nt"] == 960 and m["bc"] == "periodic"
    assert m["epsilon"] == solver.RING_EPSILON and "exp" in m["initial_profile"]


def test_fields_are_density_fields(ring_pair):
    assert all(isinstance(f, DensityField) for f in ring_pair)
