"""Bandit environment: hidden unit vector and reward sampling.

The reward for playing a unit action ``a`` against the hidden unit parameter
``theta`` is Gaussian around ``<theta, a>``. Three noise modes are supported:

* ``vanishing``        -- variance ``1 - <theta, a>^2`` (shrinks to zero as the
  action approaches the hidden parameter; the subgaussian budget is met with
  equality),
* ``vanishing_floor``  -- vanishing variance plus a constant Gaussian
  perturbation ``N(floor_mu, floor_sigma2)``,
* ``unit``             -- constant unit variance.

Gaussianity is a modeling choice, made to match the reference numerical
experiments; only the subgaussian bound is structurally required.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError, PreconditionError

_UNIT_TOL_SPEC = 1e-12
_UNIT_TOL_ACTION = 1e-9


class NoiseMode(str, enum.Enum):
    VANISHING = "vanishing"
    VANISHING_PLUS_FLOOR = "vanishing_floor"
    UNIT = "unit"


@dataclass(frozen=True)
class EnvironmentSpec:
    """Immutable description of one bandit environment instance."""

    dim: int
    theta: NDArray[np.float64]
    noise_mode: NoiseMode = NoiseMode.VANISHING
    floor_mu: float = 0.0
    floor_sigma2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.dim < 2:
            raise ConfigurationError(f"environment dim must be >= 2, got {self.dim}")
        theta = np.array(self.theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ConfigurationError(
                f"theta shape {theta.shape} does not match dim {self.dim}"
            )
        norm = float(np.linalg.norm(theta))
        if not math.isfinite(norm) or abs(norm - 1.0) > _UNIT_TOL_SPEC:
            raise ConfigurationError(
                f"theta must be a unit vector within {_UNIT_TOL_SPEC}, |norm-1|={abs(norm-1.0):.3e}"
            )
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        if self.floor_sigma2 < 0.0:
            raise ConfigurationError("floor_sigma2 must be nonnegative")
        if self.noise_mode is NoiseMode.VANISHING_PLUS_FLOOR and not self.floor_sigma2 > 0.0:
            raise ConfigurationError("vanishing_floor mode requires floor_sigma2 > 0")


@dataclass(frozen=True)
class RewardSample:
    mean: float
    noise_std: float
    value: float


def _require_unit(action: NDArray, what: str = "action") -> NDArray:
    vec = np.asarray(action, dtype=float)
    norm = math.sqrt(float(vec @ vec))
    if not math.isfinite(norm) or abs(norm - 1.0) > _UNIT_TOL_ACTION:
        raise PreconditionError(
            f"{what} must have unit norm within {_UNIT_TOL_ACTION}, |norm-1|={abs(norm-1.0):.3e}"
        )
    return vec


def random_unit_vector(dim: int, rng: np.random.Generator) -> NDArray:
    """Uniform draw on the unit sphere (normalized standard normal sample)."""
    if dim < 2:
        raise PreconditionError(f"dim must be >= 2, got {dim}")
    while True:
        z = rng.standard_normal(dim)
        norm = float(np.linalg.norm(z))
        if norm > 1e-12:
            return z / norm


def sample_reward(
    spec: EnvironmentSpec, action: NDArray, rng: np.random.Generator
) -> RewardSample:
    """Draw one reward for ``action``; see the module docstring for the modes.

    The inner product is clamped to [-1, 1] before the variance is formed so
    floating-point overshoot can never produce a negative variance.
    """
    vec = _require_unit(action)
    mean = float(vec @ spec.theta)
    mean = max(-1.0, min(1.0, mean))
    shift = 0.0
    if spec.noise_mode is NoiseMode.VANISHING:
        variance = 1.0 - mean * mean
    elif spec.noise_mode is NoiseMode.VANISHING_PLUS_FLOOR:
        variance = (1.0 - mean * mean) + spec.floor_sigma2
        shift = spec.floor_mu
    else:
        variance = 1.0
    std = math.sqrt(variance)
    value = mean + shift + std * float(rng.standard_normal())
    return RewardSample(mean=mean, noise_std=std, value=value)


def instantaneous_regret(spec: EnvironmentSpec, action: NDArray) -> float:
    """Regret of one play: ``1 - <theta, a>``, computed as ``0.5 ||theta - a||^2``.

    The two forms agree to 1e-12 on unit vectors; the squared-distance form is
    exactly zero when the optimal action is played and never negative, which
    keeps cumulative regret monotone.
    """
    vec = _require_unit(action)
    diff = spec.theta - vec
    return 0.5 * float(diff @ diff)
