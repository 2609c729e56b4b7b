"""Weighted regularized least squares with a confidence ellipsoid.

State carries the design matrix ``V = lambda0*I + sum_s w_s a_s a_s^T``, the
weighted response accumulator ``b = sum_s w_s a_s r_s`` and the estimate
``theta_tilde = V^{-1} b``. The squared confidence radius is

    beta = (sqrt(2 log(1/delta) + log det V - log det V_0) + sqrt(lambda0))^2,

so the ellipsoid ``{x : ||x - theta_tilde||_V^2 <= beta}`` contains the true
parameter with probability at least 1 - delta per run, provided the weights
upper-bound the true noise at every step.

The estimate is recomputed from a fresh SPD factorization on every absorb
(robust as the weights grow); the factor is kept on the state so the
log-determinant in ``beta`` costs nothing extra. The eigendecomposition
refresh is deferred to once per batch via :func:`refresh_eig`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

from . import linalg
from .env import _require_unit
from .errors import ConfigurationError, PreconditionError


@dataclass(frozen=True)
class EstimatorState:
    lambda0: float
    delta: float
    design: linalg.SymMat
    chol: NDArray[np.float64]
    response: NDArray[np.float64]
    theta_tilde: NDArray[np.float64]
    logdet_v0: float
    eig: linalg.EigenDecomp
    steps: int
    eig_steps: int

    @property
    def dim(self) -> int:
        return self.design.dim

    @property
    def eig_fresh(self) -> bool:
        return self.eig_steps == self.steps


@dataclass(frozen=True)
class ConfidenceReport:
    beta: float
    member: bool
    mahalanobis2: float


def new_state(dim: int, lambda0: float, delta: float) -> EstimatorState:
    """Fresh state with design ``lambda0 * I`` and zero estimate."""
    if not lambda0 > 0.0:
        raise ConfigurationError(f"lambda0 must be positive, got {lambda0}")
    if not 0.0 < delta < 1.0:
        raise ConfigurationError(f"delta must lie in (0, 1), got {delta}")
    design = linalg.SymMat.identity(dim, scale=lambda0)
    return EstimatorState(
        lambda0=float(lambda0),
        delta=float(delta),
        design=design,
        chol=linalg.cholesky_lower(design),
        response=np.zeros(dim),
        theta_tilde=np.zeros(dim),
        logdet_v0=dim * math.log(lambda0),
        eig=linalg.eigh(design),
        steps=0,
        eig_steps=0,
    )


def absorb(
    state: EstimatorState, action: NDArray, reward: float, weight: float
) -> EstimatorState:
    """Fold one observation into the state.

    The eigendecomposition is left stale on purpose; call :func:`refresh_eig`
    once per batch.
    """
    if not weight > 0.0:
        raise PreconditionError(f"observation weight must be positive, got {weight}")
    vec = _require_unit(action)
    design = linalg.rank_one_add(state.design, weight, vec)
    response = state.response + (weight * reward) * vec
    chol = linalg.cholesky_lower(design)
    theta_tilde = linalg.solve_cholesky(chol, response)
    return EstimatorState(
        lambda0=state.lambda0,
        delta=state.delta,
        design=design,
        chol=chol,
        response=response,
        theta_tilde=theta_tilde,
        logdet_v0=state.logdet_v0,
        eig=state.eig,
        steps=state.steps + 1,
        eig_steps=state.eig_steps,
    )


def refresh_eig(state: EstimatorState) -> EstimatorState:
    """Recompute the cached eigendecomposition of the design matrix."""
    return replace(state, eig=linalg.eigh(state.design), eig_steps=state.steps)


def beta(state: EstimatorState) -> float:
    """Squared confidence radius of the current ellipsoid."""
    gain = linalg.logdet_from_cholesky(state.chol) - state.logdet_v0
    radical = 2.0 * math.log(1.0 / state.delta) + max(0.0, gain)
    return (math.sqrt(radical) + math.sqrt(state.lambda0)) ** 2


def confidence_report(state: EstimatorState, theta: NDArray) -> ConfidenceReport:
    """Whether ``theta`` lies in the current confidence ellipsoid.

    Diagnostic only: the policy never sees the true parameter.
    """
    vec = _require_unit(theta, what="theta")
    diff = vec - state.theta_tilde
    mahal2 = max(0.0, float(diff @ (state.design.entries @ diff)))
    radius2 = beta(state)
    return ConfidenceReport(beta=radius2, member=mahal2 <= radius2, mahalanobis2=mahal2)
