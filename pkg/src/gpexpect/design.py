"""The sequential loop: fit, acquire, evaluate, update, record.

Each iteration fits the surrogate (re-selecting hyperparameters on a
fixed cadence), maximizes the variance-reduction acquisition over the
design box, evaluates the black box at the winner, and records the
updated integral estimate.  A parallel entry point draws points from the
input distribution instead, which is the baseline the acquisition is
meant to beat.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from gpexpect.acquisition import (
    acquisition_gradient,
    acquisition_value,
    build_context,
    multi_theta_acquisition,
    multi_theta_gradient,
)
from gpexpect.errors import EvaluationError, InsufficientDataError
from gpexpect.gp import (
    Dataset,
    GpPosterior,
    HyperparameterSample,
    HyperSearchConfig,
    NoiseModel,
    RbfKernel,
    fit,
    select_hyperparameters,
)
from gpexpect.mixtures import GaussianMixture, sample
from gpexpect.optimize import (
    BoxBounds,
    OptimizerConfig,
    default_bounds,
    maximize,
    mixture_starts,
)

# log-space std of the hyperparameter perturbations used when more than
# one theta sample is requested
_THETA_LOG_STD = 0.2


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


@dataclass(frozen=True)
class RunRecord:
    """One row of run history: the sample taken and the estimate after it."""

    iteration: int
    chosen_x: np.ndarray
    observed_y: float
    mu1: float
    sigma1: float
    acquisition_at_chosen: float
    wall_ms: int


@dataclass(frozen=True, eq=False)
class DesignConfig:
    """Settings for a sequential run.

    ``pinned_theta`` freezes the hyperparameters for the whole run
    (otherwise they are re-selected every ``refit_every`` iterations);
    ``theta_samples > 1`` averages the acquisition over that many
    log-space perturbations of the selected hyperparameters.
    ``center_y`` fits the GP on mean-centered observations and adds the
    offset back into the reported estimate mean.
    """

    n0: int
    budget: int
    seed: int
    sigma_stop: float = 0.0
    refit_every: int = 5
    theta_samples: int = 1
    optimizer: OptimizerConfig = OptimizerConfig()
    bounds: BoxBounds | None = None
    pinned_theta: HyperparameterSample | None = None
    hyper_search: HyperSearchConfig = HyperSearchConfig()
    center_y: bool = False

    def __post_init__(self):
        if self.n0 < 2:
            raise InsufficientDataError("n0 must be at least 2")
        if self.budget < self.n0:
            raise ValueError("budget must be at least n0")
        if self.sigma_stop < 0:
            raise ValueError("sigma_stop must be nonnegative")
        if self.refit_every < 1:
            raise ValueError("refit_every must be at least 1")
        if self.theta_samples < 1:
            raise ValueError("theta_samples must be at least 1")


@dataclass(eq=False)
class DesignState:
    """Single-owner mutable state of a run in progress."""

    data: Dataset
    mix: GaussianMixture
    cfg: DesignConfig
    hyper: HyperparameterSample | None = None
    history: list = field(default_factory=list)
    iteration: int = 0


def initial_design(mix: GaussianMixture, n0: int, seed: int) -> np.ndarray:
    """n0 starting points drawn from the input mixture."""
    if n0 < 2:
        raise InsufficientDataError("initial design needs at least 2 points")
    return sample(mix, n0, seed)


def _perturbed_theta(theta: HyperparameterSample, rng) -> HyperparameterSample:
    ls = np.exp(np.log(theta.kernel.lengthscales) + _THETA_LOG_STD * rng.standard_normal(
        theta.kernel.dim
    ))
    s2 = float(np.exp(np.log(theta.kernel.amplitude_sq) + _THETA_LOG_STD * rng.standard_normal()))
    nv = theta.noise.variance
    if nv > 0:
        nv = float(np.exp(np.log(nv) + _THETA_LOG_STD * rng.standard_normal()))
    return HyperparameterSample(
        kernel=RbfKernel(amplitude_sq=s2, lengthscales=ls), noise=NoiseModel(variance=nv)
    )


def _select_theta(state: DesignState) -> HyperparameterSample:
    cfg = state.cfg
    if cfg.pinned_theta is not None:
        return cfg.pinned_theta
    if state.hyper is None or state.iteration % cfg.refit_every == 0:
        return select_hyperparameters(state.data, cfg.hyper_search)
    return state.hyper


def _offset(state: DesignState) -> float:
    if state.cfg.center_y and state.data.n > 0:
        return float(state.data.y.mean())
    return 0.0


def _fit_gp(state: DesignState, theta: HyperparameterSample, offset: float) -> GpPosterior:
    data = state.data
    if offset != 0.0:
        data = Dataset(X=data.X, y=data.y - offset)
    return fit(data, theta.kernel, theta.noise)


def _acquisition_functions(state: DesignState, gp: GpPosterior, theta, iteration: int):
    """Value/gradient callables, either single-theta or averaged."""
    ctx = build_context(gp, state.mix)
    if state.cfg.theta_samples <= 1:
        return ctx, (lambda x: acquisition_value(ctx, x)), (
            lambda x: acquisition_gradient(ctx, x)
        )
    rng = np.random.default_rng(_derive_seed(state.cfg.seed, iteration, 1))
    contexts = [ctx]
    offset = _offset(state)
    for _ in range(state.cfg.theta_samples - 1):
        extra = _perturbed_theta(theta, rng)
        contexts.append(build_context(_fit_gp(state, extra, offset), state.mix))
    return ctx, (lambda x: multi_theta_acquisition(contexts, x)), (
        lambda x: multi_theta_gradient(contexts, x)
    )


def step(state: DesignState, black_box) -> DesignState:
    """Run one acquisition iteration, appending a data point and a record."""
    t0 = time.perf_counter()
    cfg = state.cfg
    theta = _select_theta(state)
    offset = _offset(state)
    gp = _fit_gp(state, theta, offset)
    _, value_fn, gradient_fn = _acquisition_functions(state, gp, theta, state.iteration)

    bounds = cfg.bounds if cfg.bounds is not None else default_bounds(state.mix)
    starts = mixture_starts(
        state.mix, bounds, cfg.optimizer.starts, _derive_seed(cfg.seed, state.iteration, 2)
    )
    x_star, acq = maximize(value_fn, gradient_fn, bounds, cfg.optimizer, start_points=starts)

    y = float(black_box(x_star))
    if not np.isfinite(y):
        raise EvaluationError(f"black box returned non-finite value at {x_star.tolist()}")

    state.data = state.data.append(x_star, y)
    state.hyper = theta
    # estimate reported after the new point is absorbed
    new_offset = _offset(state)
    new_ctx = build_context(_fit_gp(state, theta, new_offset), state.mix)
    wall_ms = int(round(1000.0 * (time.perf_counter() - t0)))
    state.history.append(
        RunRecord(
            iteration=state.data.n - 1,
            chosen_x=x_star,
            observed_y=y,
            mu1=new_ctx.mu1 + new_offset,
            sigma1=float(np.sqrt(new_ctx.sigma1_sq)),
            acquisition_at_chosen=float(acq),
            wall_ms=max(wall_ms, 0),
        )
    )
    state.iteration += 1
    return state


def _random_step(state: DesignState, black_box) -> DesignState:
    """Baseline iteration: next point drawn from the mixture, no acquisition."""
    t0 = time.perf_counter()
    cfg = state.cfg
    theta = _select_theta(state)
    x_star = sample(state.mix, 1, _derive_seed(cfg.seed, state.iteration, 3))[0]
    y = float(black_box(x_star))
    if not np.isfinite(y):
        raise EvaluationError(f"black box returned non-finite value at {x_star.tolist()}")
    state.data = state.data.append(x_star, y)
    state.hyper = theta
    new_offset = _offset(state)
    new_ctx = build_context(_fit_gp(state, theta, new_offset), state.mix)
    wall_ms = int(round(1000.0 * (time.perf_counter() - t0)))
    state.history.append(
        RunRecord(
            iteration=state.data.n - 1,
            chosen_x=x_star,
            observed_y=y,
            mu1=new_ctx.mu1 + new_offset,
            sigma1=float(np.sqrt(new_ctx.sigma1_sq)),
            acquisition_at_chosen=0.0,
            wall_ms=max(wall_ms, 0),
        )
    )
    state.iteration += 1
    return state


def _start_state(mix: GaussianMixture, black_box, cfg: DesignConfig) -> DesignState:
    X0 = initial_design(mix, cfg.n0, _derive_seed(cfg.seed, 0, 0))
    y0 = np.array([float(black_box(x)) for x in X0])
    if not np.all(np.isfinite(y0)):
        bad = X0[~np.isfinite(y0)][0]
        raise EvaluationError(f"black box returned non-finite value at {bad.tolist()}")
    state = DesignState(data=Dataset(X=X0, y=y0), mix=mix, cfg=cfg)

    theta = _select_theta(state)
    offset = _offset(state)
    ctx = build_context(_fit_gp(state, theta, offset), mix)
    state.hyper = theta
    mu1 = ctx.mu1 + offset
    sigma1 = float(np.sqrt(ctx.sigma1_sq))
    # initial points share the post-initial-fit estimate; acquisition 0
    for i in range(cfg.n0):
        state.history.append(
            RunRecord(
                iteration=i,
                chosen_x=X0[i],
                observed_y=float(y0[i]),
                mu1=mu1,
                sigma1=sigma1,
                acquisition_at_chosen=0.0,
                wall_ms=0,
            )
        )
    state.iteration = 0
    return state


def _run_loop(mix, black_box, cfg: DesignConfig, step_fn) -> list:
    state = _start_state(mix, black_box, cfg)
    while state.data.n < cfg.budget:
        if state.history[-1].sigma1 < cfg.sigma_stop:
            break
        step_fn(state, black_box)
    return state.history


def run(mix: GaussianMixture, black_box, cfg: DesignConfig) -> list:
    """Full acquisition-driven run; returns the record history.

    Executes the initial design then acquisition steps until the budget
    is spent or sigma1 drops below ``cfg.sigma_stop``.  Deterministic
    given ``cfg.seed`` (assuming a deterministic black box).
    """
    return _run_loop(mix, black_box, cfg, step)


def run_random_baseline(mix: GaussianMixture, black_box, cfg: DesignConfig) -> list:
    """Same loop with points drawn from p(x) instead of the acquisition."""
    return _run_loop(mix, black_box, cfg, _random_step)
