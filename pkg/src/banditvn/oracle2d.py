"""Analytical verification oracles for the two-dimensional case.

For d = 2 the minimum eigenvalue after one batch update has a closed form in
terms of the previous eigenvalues, the batch weight and the overlap between
the batch center and the minimal eigenvector. These helpers exist purely as
an independent check of the simulated traces (tests and the ``verify``
subcommand); the policy never calls them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .env import _require_unit
from .errors import PreconditionError


@dataclass(frozen=True)
class Oracle2dInput:
    """Previous eigenvalues, batch weight and center overlap ``<v_min, c>``."""

    lambda_min_t: float
    lambda_max_t: float
    omega: float
    alpha: float

    def __post_init__(self):
        if not self.lambda_min_t >= 1.0:
            raise PreconditionError(
                f"closed form requires lambda_min >= 1, got {self.lambda_min_t}"
            )
        if self.lambda_max_t < self.lambda_min_t:
            raise PreconditionError("lambda_max must be >= lambda_min")
        if self.omega < 0.0:
            raise PreconditionError("omega must be nonnegative")
        if abs(self.alpha) > 1.0 + 1e-12:
            raise PreconditionError(f"alpha must lie in [-1, 1], got {self.alpha}")


def exact_min_eigenvalue_2d(inp: Oracle2dInput) -> float:
    """Minimum eigenvalue of the batch-updated 2x2 design matrix.

    The update adds ``omega * (a+ a+^T + a- a-^T)`` where the action pair is
    built from the center (overlap ``alpha`` with the minimal eigenvector) and
    the scale ``1/sqrt(lambda_min)``. In the eigenbasis the perturbation is
    [[x, z], [z, 2-x]], giving the eigenvalue directly.
    """
    lam_min = inp.lambda_min_t
    lam_max = inp.lambda_max_t
    alpha = max(-1.0, min(1.0, inp.alpha))
    u = 1.0 / math.sqrt(lam_min)
    den_plus = 1.0 + 2.0 * u * alpha + u * u
    den_minus = 1.0 - 2.0 * u * alpha + u * u
    if den_plus <= 0.0 or den_minus <= 0.0:
        raise PreconditionError("degenerate action pair (lambda_min=1 with |alpha|=1)")
    x = (alpha + u) ** 2 / den_plus + (alpha - u) ** 2 / den_minus
    z = ((alpha + u) / den_plus + (alpha - u) / den_minus) * math.sqrt(
        max(0.0, 1.0 - alpha * alpha)
    )
    gap_term = lam_max - lam_min + 2.0 * inp.omega * (1.0 - x)
    disc = gap_term * gap_term + 4.0 * inp.omega * inp.omega * z * z
    return (lam_max + lam_min) / 2.0 + inp.omega - 0.5 * math.sqrt(disc)


def check_distance_lemma(c: NDArray, v: NDArray, lam: float) -> bool:
    """Check ``||a+- - c||^2 <= 2/lam`` for the normalized pair around ``c``.

    The pair is ``normalize(c +/- v / sqrt(lam))``; the bound holds for any
    unit c, v and lam > 1 (worst case at overlap ``1/sqrt(lam)``). Allows
    1e-12 slack for rounding.
    """
    if not lam > 1.0:
        raise PreconditionError(f"distance bound requires lambda > 1, got {lam}")
    center = _require_unit(c, what="c")
    direction = _require_unit(v, what="v")
    scale = 1.0 / math.sqrt(lam)
    bound = 2.0 / lam + 1e-12
    for sign in (1.0, -1.0):
        raw = center + (sign * scale) * direction
        a = raw / float(np.linalg.norm(raw))
        diff = a - center
        if float(diff @ diff) > bound:
            return False
    return True
