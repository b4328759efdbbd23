"""
Adding probe vehicles
=====================

Boundary sensors only see the edges of the space-time box. Vehicles driving
through the interior report the density they experience. This script traces
20 vehicles on the ring, samples them, and compares training on 10% of the
boundary alone against 5% of the boundary plus the vehicle samples.
"""

import numpy as np

from lwr_pidl import solver
from lwr_pidl.core import relative_l2
from lwr_pidl.sampling import SamplingPlan, cv_trajectories, sample_lagrangian
from lwr_pidl.train import OptimizerConfig, PhysicsSpec, train_pidl

cfg, field = solver.ring_road_preset("hyperbolic")
g = field.grid

# %%
# Trajectories: each row is one vehicle's position at every time step.
paths = cv_trajectories(field, 20, seed=0)
print(paths.shape)
laps = (np.diff(np.unwrap(paths * 2 * np.pi, axis=1), axis=1).sum(axis=1)) / (2 * np.pi)
print("laps driven per vehicle", np.round(laps, 2))

obs = sample_lagrangian(field, 20, 4584, seed=0)
print(len(obs), "vehicle samples, e.g.", obs[0])

# %%
# Training comparison at a reduced budget.
opt = OptimizerConfig(max_iters=500)
spec = PhysicsSpec(cfg.fd, "hyperbolic")
for label, plan in (("10% boundary", SamplingPlan(0.1, seed=0)),
                    ("5% boundary + vehicles", SamplingPlan(0.05, cv_count=20, cv_points=4584, seed=0))):
    _, recon = train_pidl(field, plan, spec, optimizer=opt, seed=0, n_collocation=1000)
    print(f"{label:24s} rel L2 {relative_l2(field, recon):.4f}")
