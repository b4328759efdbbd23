"""
Shocks and fans under Lax-Friedrichs
====================================

Two Riemann problems on the Greenshields flux with unit free-flow speed and
jam density. A slow car ahead of a fast one piles up into a shock; the
reverse spreads into a fan. The scheme smears both, less so as the grid
refines.
"""

import numpy as np

from lwr_pidl.analytic import RiemannProblem, riemann_entropy_solution, shock_speed
from lwr_pidl.core import FdParams, Grid
from lwr_pidl.solver import Dirichlet, SolveConfig, solve

fd = FdParams(1.0, 1.0)


def run(nx, rho_l, rho_r, t_end=0.5):
    nt = int(round(t_end / (0.75 * 2.0 / nx)))
    g = Grid(-1.0, 1.0, 0.0, t_end, nx, nt)
    init = np.where(g.xs() < 0, rho_l, rho_r).astype(float)
    bc = Dirichlet(np.full(nt + 1, rho_l), np.full(nt + 1, rho_r))
    return g, solve(SolveConfig(g, fd, bc, init)).values[-1]


# %%
# A shock from 0.2 into 0.8 moves at 1 - 0.2 - 0.8 = 0, so it stays put.
shock = RiemannProblem(0.2, 0.8, fd)
print("shock speed", shock_speed(shock))

for nx in (60, 120, 240):
    g, row = run(nx, 0.2, 0.8)
    exact = riemann_entropy_solution(shock, g.xs(), g.t1)
    print(f"shock  nx={nx:4d}  L1={np.sum(np.abs(row - exact)) * g.dx:.4f}")

# %%
# The fan: densities between 0.8 and 0.2 leave x=0 at their own
# characteristic speed 1 - 2 rho.
fan = RiemannProblem(0.8, 0.2, fd)
for nx in (60, 120, 240):
    g, row = run(nx, 0.8, 0.2)
    exact = riemann_entropy_solution(fan, g.xs(), g.t1)
    print(f"fan    nx={nx:4d}  L1={np.sum(np.abs(row - exact)) * g.dx:.4f}")

# %%
# Profile at the finest grid, every 20th node.
g, row = run(240, 0.8, 0.2)
exact = riemann_entropy_solution(fan, g.xs(), g.t1)
for x, a, b in list(zip(g.xs(), row, exact))[::20]:
    print(f"x={x:+.3f}  scheme={a:.3f}  exact={b:.3f}")
