"""Bandit policies: the batched vanishing-noise policy and its baselines.

All policies expose the same "choose actions, observe rewards" step:

    step(state, config, center_prev, env, rng) -> (state', StepResult)

* ``linucb-vn`` plays one batch of ``2(d-1)`` paired actions built from the
  low eigenvectors of the design matrix around the normalized estimate, then
  absorbs the rewards with a common inverse-variance weight.
* ``linucb`` is the standard one-action-per-round baseline maximizing the
  upper confidence bound over the sphere with unit weights.
* ``fixed`` always plays the true parameter (zero-regret sanity baseline).

The batch construction keeps the deterministic eigenvalue relation
``lambda_min(V) >= sqrt(2/(3(d-1)) * lambda_max(V))`` for any center
sequence, which is what makes the vanishing-noise regret polylogarithmic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import estimator as est
from . import linalg
from .env import EnvironmentSpec, _require_unit, instantaneous_regret, sample_reward
from .errors import ConfigurationError, InvariantError, PreconditionError

_LAMBDA0_TOL = 1e-12


class PolicyKind(str, enum.Enum):
    LINUCB_VN = "linucb-vn"
    LINUCB_BASELINE = "linucb"
    FIXED_ORACLE = "fixed"


class OmegaMode(str, enum.Enum):
    VANISHING = "vanishing"
    UNIT = "unit"


@dataclass(frozen=True)
class BaselineMaximizerConfig:
    """Settings for the baseline's UCB argmax over the sphere."""

    grid_size: int = 1024
    restarts: int = 32
    iterations: int = 200


@dataclass(frozen=True)
class PolicyConfig:
    kind: PolicyKind
    dim: int
    delta: float
    lambda0: float
    omega_mode: OmegaMode = OmegaMode.VANISHING
    baseline_maximizer: BaselineMaximizerConfig = field(
        default_factory=BaselineMaximizerConfig
    )

    def __post_init__(self):
        if self.dim < 2:
            raise ConfigurationError(f"policy dim must be >= 2, got {self.dim}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigurationError(f"delta must lie in (0, 1), got {self.delta}")
        bound = compute_lambda0(self.dim)
        if self.lambda0 < bound - _LAMBDA0_TOL:
            raise ConfigurationError(
                f"lambda0={self.lambda0} is below the eigenvalue-control bound "
                f"{bound} for dim={self.dim}; overrides this low void the "
                "deterministic invariants"
            )

    @property
    def actions_per_batch(self) -> int:
        if self.kind is PolicyKind.LINUCB_VN:
            return 2 * (self.dim - 1)
        return 1


@dataclass(frozen=True)
class BatchPlan:
    """One batch of actions: pairs (a+_i, a-_i) around ``center``."""

    actions: list[NDArray[np.float64]]
    weight: float
    center: NDArray[np.float64]


@dataclass(frozen=True)
class StepResult:
    """Everything one policy step produced, for bookkeeping and invariants."""

    actions: list[NDArray[np.float64]]
    rewards: list[float]
    regret_increment: float
    lambda_min: float
    lambda_max: float
    trace: float
    beta: float
    in_confidence: bool
    weight: float
    center: NDArray[np.float64]
    alpha: float
    max_center_dist2: float


def compute_lambda0(dim: int) -> float:
    """Smallest admissible regularizer for the eigenvalue-control guarantee.

    Evaluates ``max(2, sqrt(2/(3(d-1))) * d/(6 sqrt(d-1)) + 2/(3(d-1)))``; the
    constant 2 binds for every d >= 2.
    """
    if dim < 2:
        raise ConfigurationError(f"dim must be >= 2, got {dim}")
    d = float(dim)
    second = math.sqrt(2.0 / (3.0 * (d - 1.0))) * d / (6.0 * math.sqrt(d - 1.0)) + 2.0 / (
        3.0 * (d - 1.0)
    )
    return max(2.0, second)


def omega(
    lambda_max_prev: float,
    beta_prev: float,
    dim: int,
    mode: OmegaMode = OmegaMode.VANISHING,
) -> float:
    """Per-batch weight ``1/sigma_hat^2`` for the next batch.

    Vanishing mode uses ``sqrt(lambda_max) / (12 sqrt(d-1) beta)`` computed
    from the state after the previous batch; since beta >= 1 this always
    satisfies the hypothesis ``omega <= sqrt(lambda_max) / (12 sqrt(d-1))``
    needed by the eigenvalue-control argument. Unit mode returns 1 and
    recovers standard unit-variance behavior.
    """
    if mode is OmegaMode.UNIT:
        return 1.0
    if not lambda_max_prev > 0.0 or not beta_prev > 0.0:
        raise PreconditionError("omega inputs must be positive")
    return math.sqrt(lambda_max_prev) / (12.0 * math.sqrt(dim - 1.0) * beta_prev)


def build_batch(
    state: est.EstimatorState,
    center_prev: NDArray,
    mode: OmegaMode = OmegaMode.VANISHING,
) -> BatchPlan:
    """Construct the next batch of ``2(d-1)`` actions from the current state.

    The center is the normalized estimate when it is nonzero, else the
    previous center carried forward. For each of the d-1 lowest eigenvectors
    v_i the pair ``normalize(center +/- v_i / sqrt(lambda_min))`` is emitted,
    ordered (a+_1, a-_1, ..., a+_{d-1}, a-_{d-1}).
    """
    if not state.eig_fresh:
        raise InvariantError(
            "eigendecomposition is stale; call refresh_eig before building a batch"
        )
    lam_min = state.eig.lambda_min
    if not lam_min > 1.0:
        raise InvariantError(
            f"batch construction needs lambda_min > 1, got {lam_min} "
            "(regularizer misconfigured?)"
        )
    est_vec = state.theta_tilde
    norm_est = math.sqrt(float(est_vec @ est_vec))
    if norm_est > 1e-9:
        center = est_vec / norm_est
    else:
        center = _require_unit(center_prev, what="center")
    scale = 1.0 / math.sqrt(lam_min)
    actions: list[NDArray] = []
    for i in range(state.dim - 1):
        direction = state.eig.eigenvectors[:, i]
        for sign in (1.0, -1.0):
            raw = center + (sign * scale) * direction
            actions.append(raw / math.sqrt(float(raw @ raw)))
    weight = omega(state.eig.lambda_max, est.beta(state), state.dim, mode)
    return BatchPlan(actions=actions, weight=weight, center=center)


def linucbvn_step(
    state: est.EstimatorState,
    config: PolicyConfig,
    center_prev: NDArray,
    env: EnvironmentSpec,
    rng: np.random.Generator,
) -> tuple[est.EstimatorState, StepResult]:
    """Play one batch, absorb all rewards, refresh the eigendecomposition."""
    plan = build_batch(state, center_prev, config.omega_mode)
    alpha = float(state.eig.eigenvectors[:, 0] @ plan.center)
    max_dist2 = 0.0
    rewards: list[float] = []
    regret = 0.0
    for action in plan.actions:
        diff = action - plan.center
        max_dist2 = max(max_dist2, float(diff @ diff))
        sample = sample_reward(env, action, rng)
        rewards.append(sample.value)
        regret += instantaneous_regret(env, action)
        state = est.absorb(state, action, sample.value, plan.weight)
    state = est.refresh_eig(state)
    report = est.confidence_report(state, env.theta)
    result = StepResult(
        actions=plan.actions,
        rewards=rewards,
        regret_increment=regret,
        lambda_min=state.eig.lambda_min,
        lambda_max=state.eig.lambda_max,
        trace=state.design.trace(),
        beta=report.beta,
        in_confidence=report.member,
        weight=plan.weight,
        center=plan.center,
        alpha=alpha,
        max_center_dist2=max_dist2,
    )
    return state, result


def _ucb_objective_grid(
    grid: NDArray, theta_tilde: NDArray, v_inv: NDArray, sqrt_beta: float
) -> NDArray:
    quad = np.einsum("ij,jk,ik->i", grid, v_inv, grid)
    return grid @ theta_tilde + sqrt_beta * np.sqrt(np.maximum(quad, 0.0))


def _ucb_objective(a: NDArray, theta_tilde: NDArray, v_inv: NDArray, sqrt_beta: float) -> float:
    return float(a @ theta_tilde) + sqrt_beta * math.sqrt(max(0.0, float(a @ (v_inv @ a))))


_ANGLE_CACHE: dict[int, NDArray] = {}


def _unit_circle(grid_size: int) -> NDArray:
    cached = _ANGLE_CACHE.get(grid_size)
    if cached is None:
        angles = np.linspace(0.0, 2.0 * math.pi, grid_size, endpoint=False)
        cached = np.column_stack([np.cos(angles), np.sin(angles)])
        _ANGLE_CACHE[grid_size] = cached
    return cached


def _inverse_spd(design: linalg.SymMat) -> NDArray:
    d = design.dim
    if d == 2:
        a, b = design.entries[0]
        c = design.entries[1, 1]
        det = a * c - b * b
        return np.array([[c, -b], [-b, a]]) / det
    cols = [linalg.solve_spd(design, np.eye(d)[:, j]) for j in range(d)]
    return np.column_stack(cols)


def maximize_ucb_2d(
    theta_tilde: NDArray,
    design: linalg.SymMat,
    beta_value: float,
    grid_size: int = 1024,
) -> NDArray:
    """Angular grid scan plus golden-section refinement of the UCB objective."""
    v_inv = _inverse_spd(design)
    sqrt_beta = math.sqrt(beta_value)
    grid = _unit_circle(grid_size)
    values = _ucb_objective_grid(grid, theta_tilde, v_inv, sqrt_beta)
    best = int(np.argmax(values))
    step = 2.0 * math.pi / grid_size
    center_angle = best * step

    t0 = float(theta_tilde[0])
    t1 = float(theta_tilde[1])
    v00 = float(v_inv[0, 0])
    v01 = float(v_inv[0, 1])
    v11 = float(v_inv[1, 1])

    def f(angle: float) -> float:
        c = math.cos(angle)
        s = math.sin(angle)
        quad = v00 * c * c + 2.0 * v01 * c * s + v11 * s * s
        return t0 * c + t1 * s + sqrt_beta * math.sqrt(max(0.0, quad))

    lo, hi = center_angle - step, center_angle + step
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(48):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = f(x1)
    angle = x1 if f1 >= f2 else x2
    if f(angle) >= float(values[best]):
        return np.array([math.cos(angle), math.sin(angle)])
    return grid[best].copy()


def maximize_ucb_nd(
    theta_tilde: NDArray,
    design: linalg.SymMat,
    beta_value: float,
    cfg: BaselineMaximizerConfig,
    rng: np.random.Generator,
) -> NDArray:
    """Projected gradient ascent on the sphere from multiple starts.

    Never fails hard: whatever candidate scored best is returned, ties broken
    by the deterministic start order.
    """
    from .env import random_unit_vector

    d = design.dim
    v_inv = _inverse_spd(design)
    sqrt_beta = math.sqrt(beta_value)
    starts: list[NDArray] = []
    norm_est = float(np.linalg.norm(theta_tilde))
    if norm_est > 1e-12:
        starts.append(theta_tilde / norm_est)
    else:
        starts.append(np.eye(d)[:, 0])
    for _ in range(cfg.restarts):
        starts.append(random_unit_vector(d, rng))

    best_action = starts[0]
    best_value = _ucb_objective(best_action, theta_tilde, v_inv, sqrt_beta)
    for start in starts:
        a = start
        fa = _ucb_objective(a, theta_tilde, v_inv, sqrt_beta)
        for _ in range(cfg.iterations):
            grad = theta_tilde.copy()
            quad = max(float(a @ (v_inv @ a)), 1e-300)
            grad += sqrt_beta * (v_inv @ a) / math.sqrt(quad)
            tangent = grad - float(grad @ a) * a
            tnorm = float(np.linalg.norm(tangent))
            if tnorm < 1e-13:
                break
            eta = 1.0
            improved = False
            while eta > 1e-12:
                cand = a + eta * tangent
                cand /= float(np.linalg.norm(cand))
                fc = _ucb_objective(cand, theta_tilde, v_inv, sqrt_beta)
                if fc > fa:
                    a, fa = cand, fc
                    improved = True
                    break
                eta *= 0.5
            if not improved:
                break
        if fa > best_value:
            best_action, best_value = a, fa
    return best_action


def linucb_baseline_step(
    state: est.EstimatorState,
    config: PolicyConfig,
    center_prev: NDArray,
    env: EnvironmentSpec,
    rng: np.random.Generator,
) -> tuple[est.EstimatorState, StepResult]:
    """One round of the standard optimistic baseline with unit weights."""
    if config.omega_mode is not OmegaMode.UNIT:
        raise ConfigurationError("the baseline policy requires unit weights")
    beta_value = est.beta(state)
    if config.dim == 2:
        action = maximize_ucb_2d(
            state.theta_tilde, state.design, beta_value, config.baseline_maximizer.grid_size
        )
    else:
        action = maximize_ucb_nd(
            state.theta_tilde, state.design, beta_value, config.baseline_maximizer, rng
        )
    sample = sample_reward(env, action, rng)
    regret = instantaneous_regret(env, action)
    state = est.absorb(state, action, sample.value, 1.0)
    state = est.refresh_eig(state)
    report = est.confidence_report(state, env.theta)
    result = StepResult(
        actions=[action],
        rewards=[sample.value],
        regret_increment=regret,
        lambda_min=state.eig.lambda_min,
        lambda_max=state.eig.lambda_max,
        trace=state.design.trace(),
        beta=report.beta,
        in_confidence=report.member,
        weight=1.0,
        center=action,
        alpha=float(state.eig.eigenvectors[:, 0] @ action),
        max_center_dist2=0.0,
    )
    return state, result


def fixed_oracle_step(
    state: est.EstimatorState,
    config: PolicyConfig,
    center_prev: NDArray,
    env: EnvironmentSpec,
    rng: np.random.Generator,
) -> tuple[est.EstimatorState, StepResult]:
    """Always play the true parameter; the estimator stays at initialization."""
    action = env.theta
    sample = sample_reward(env, action, rng)
    regret = instantaneous_regret(env, action)
    report = est.confidence_report(state, env.theta)
    result = StepResult(
        actions=[action],
        rewards=[sample.value],
        regret_increment=regret,
        lambda_min=state.eig.lambda_min,
        lambda_max=state.eig.lambda_max,
        trace=state.design.trace(),
        beta=report.beta,
        in_confidence=report.member,
        weight=1.0,
        center=action,
        alpha=float(state.eig.eigenvectors[:, 0] @ action),
        max_center_dist2=0.0,
    )
    return state, result


_STEP_FUNCTIONS = {
    PolicyKind.LINUCB_VN: linucbvn_step,
    PolicyKind.LINUCB_BASELINE: linucb_baseline_step,
    PolicyKind.FIXED_ORACLE: fixed_oracle_step,
}


def policy_step(
    state: est.EstimatorState,
    config: PolicyConfig,
    center_prev: NDArray,
    env: EnvironmentSpec,
    rng: np.random.Generator,
) -> tuple[est.EstimatorState, StepResult]:
    """Dispatch one batch of the configured policy."""
    return _STEP_FUNCTIONS[config.kind](state, config, center_prev, env, rng)
