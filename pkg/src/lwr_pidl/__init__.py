"""Physics-informed reconstruction of traffic density on the LWR model.

Pure numpy building blocks: Greenshields flux and Riemann solutions, a
Lax-Friedrichs solver, a tanh MLP with input-derivative jets and reverse-mode
gradients, Adam and L-BFGS, observation samplers, and an experiment runner.
"""

from .analytic import RiemannProblem, characteristic_speed, flux, riemann_entropy_solution, shock_speed, velocity
from .core import (
    ConfigError,
    DegenerateError,
    DensityField,
    DimensionError,
    DomainError,
    FdParams,
    Grid,
    NumericError,
    Observation,
    StabilityError,
    read_field_csv,
    relative_l2,
    relative_mse_diff,
    seeded_rng,
    write_field_csv,
)
from .net import MlpParams, MlpShape, forward, init_params, jet
from .optim import TrainReport, adam_minimize, lbfgs_minimize
from .sampling import SamplingPlan, latin_hypercube
from .solver import Dirichlet, Periodic, SolveConfig, reconstruct_lax_friedrichs, ring_road_preset, solve
from .train import CostWeights, OptimizerConfig, PhysicsSpec, total_cost, train_pidl

__version__ = "0.1.0"
