"""Physics-informed cost and the end-to-end reconstruction run."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import net
from .core import ConfigError, DensityField, FdParams, observations_to_arrays
from .optim import TrainReport, adam_minimize, lbfgs_minimize
from .sampling import CollocationSet, SamplingPlan, build_observations, latin_hypercube

N_COLLOCATION = 10_000


@dataclass(frozen=True)
class PhysicsSpec:
    fd: FdParams
    form: Literal["hyperbolic", "parabolic"] = "hyperbolic"

    def __post_init__(self):
        if self.form not in ("hyperbolic", "parabolic"):
            raise ConfigError(f"unknown physics form {self.form!r}")
        if self.form == "parabolic" and not self.fd.epsilon > 0:
            raise ConfigError("the parabolic form needs epsilon > 0")


@dataclass(frozen=True)
class CostWeights:
    mu1: float = 1.0
    mu2: float = 1.0

    def __post_init__(self):
        if self.mu1 < 0 or self.mu2 < 0 or (self.mu1 == 0 and self.mu2 == 0):
            raise ConfigError("cost weights must be non-negative and not both zero")


@dataclass(frozen=True)
class OptimizerConfig:
    name: Literal["lbfgs", "adam"] = "lbfgs"
    lr: float = 1e-3
    iters: int = 8000
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8
    memory: int = 10
    max_iters: int = 20_000
    ftol: float = 2.22e-16

    def __post_init__(self):
        if self.name not in ("lbfgs", "adam"):
            raise ConfigError(f"unknown optimizer {self.name!r}")


def physics_residual(jet, spec: PhysicsSpec):
    """LWR residual ``v_f (1 - 2 rho/rho_m) rho_x + rho_t``, minus ``eps rho_xx`` if parabolic.

    Works on plain numbers, arrays, or tape variables.
    """
    fd = spec.fd
    r = (fd.v_f - (2.0 * fd.v_f / fd.rho_m) * jet.rho_hat) * jet.d_dx + jet.d_dt
    if spec.form == "parabolic":
        r = r - fd.epsilon * jet.d2_dx2
    return r


def _as_points(collocation):
    if collocation is None:
        return np.empty(0), np.empty(0)
    if isinstance(collocation, CollocationSet):
        return collocation.x, collocation.t
    pts = np.asarray(collocation, dtype=np.float64).reshape(-1, 2)
    return pts[:, 0], pts[:, 1]


def _as_obs(observations):
    if isinstance(observations, tuple) and len(observations) == 3:
        return tuple(np.asarray(a, dtype=np.float64) for a in observations)
    return observations_to_arrays(observations)


def cost_terms(observations, collocation, spec: PhysicsSpec, weights: CostWeights) -> list:
    """Loss spec for :func:`net.loss_gradient`: data term first, physics term second."""
    xo, to, ro = _as_obs(observations)
    xc, tc = _as_points(collocation)
    if xo.size == 0 and xc.size == 0:
        raise ConfigError("need observations or collocation points")
    return [
        net.DataTerm(xo, to, ro, weights.mu1),
        net.ResidualTerm(xc, tc, lambda j: physics_residual(j, spec), weights.mu2,
                         second_order=spec.form == "parabolic"),
    ]


def total_cost(params: net.MlpParams, observations, collocation, spec: PhysicsSpec,
               weights: CostWeights = CostWeights()):
    """``(J, J_DL, J_PHY, grad)`` with ``J = mu1 J_DL + mu2 J_PHY``.

    ``J_DL`` is the mean squared misfit over the observations, ``J_PHY`` the
    mean squared residual over the collocation points.
    """
    J, grad, (j_dl, j_phy) = net.loss_gradient(
        params, cost_terms(observations, collocation, spec, weights), return_terms=True)
    return J, j_dl, j_phy, grad


def make_cost_fn(shape: net.MlpShape, observations, collocation, spec: PhysicsSpec,
                 weights: CostWeights = CostWeights()):
    """``theta -> (J, grad, (J_DL, J_PHY))`` closure for the optimizers."""
    terms = cost_terms(observations, collocation, spec, weights)

    def cost(theta):
        J, grad, parts = net.loss_gradient(net.MlpParams(shape, theta), terms, return_terms=True)
        return J, grad, parts

    return cost


def predict_field(params: net.MlpParams, grid) -> DensityField:
    X, T = grid.mesh()
    return DensityField(grid, net.forward(params, X.ravel(), T.ravel()).reshape(grid.shape))


def minimize(theta, cost_fn, opt: OptimizerConfig) -> TrainReport:
    if opt.name == "adam":
        return adam_minimize(theta, cost_fn, lr=opt.lr, iters=opt.iters, beta1=opt.beta1,
                             beta2=opt.beta2, eps_hat=opt.eps_hat)
    return lbfgs_minimize(theta, cost_fn, memory=opt.memory, max_iters=opt.max_iters, ftol=opt.ftol)


@dataclass
class TrainSetup:
    """Everything a run trained on; returned for inspection and manifests."""

    observations: list = field(repr=False)
    collocation: CollocationSet = field(repr=False)
    shape: net.MlpShape = None


def train_pidl(dataset: DensityField, plan: SamplingPlan, spec: PhysicsSpec,
               weights: CostWeights = CostWeights(), optimizer: OptimizerConfig = OptimizerConfig(),
               seed: int = 0, hidden=(20,) * 8, n_collocation: int = N_COLLOCATION,
               periodic: bool = True, return_setup: bool = False):
    """Sample, train, and evaluate the network on every grid node.

    Returns ``(report, reconstruction)`` (plus a :class:`TrainSetup` when
    ``return_setup``). The observation draw uses ``plan.seed``; collocation
    points and network initialisation use ``seed``.
    """
    g = dataset.grid
    obs = build_observations(dataset, plan, spec.fd, periodic)
    colloc = latin_hypercube(n_collocation, (g.x0, g.x1, g.t0, g.t1), seed) if n_collocation else None
    shape = net.MlpShape(hidden=tuple(hidden), domain=(g.x0, g.x1, g.t0, g.t1))
    params = net.init_params(shape, seed)
    cost = make_cost_fn(shape, obs, colloc, spec, weights)
    report = minimize(params.theta, cost, optimizer)
    recon = predict_field(params.with_theta(report.theta), g)
    if return_setup:
        return report, recon, TrainSetup(obs, colloc, shape)
    return report, recon
