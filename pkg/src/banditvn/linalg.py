"""Dense symmetric linear algebra for small dimensions (d <= 64).

Everything the bandit loop needs from a design matrix lives here: a cyclic
Jacobi eigendecomposition, an SPD Cholesky solve, rank-one accumulation and
the log-determinant. All routines are deterministic (fixed sweep order, fixed
eigenvector sign convention) so simulation traces reproduce exactly; none of
them mutate their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import EigenConvergenceError, NotPositiveDefiniteError, PreconditionError

_SIGN_EPS = 1e-12


@dataclass(frozen=True)
class SymMat:
    """Dense symmetric matrix stored as a full float64 grid.

    Instances built through :meth:`identity` / :meth:`from_array` (or returned
    by operations in this module) carry exactly mirrored entries; callers
    constructing one directly are responsible for that.
    """

    entries: NDArray[np.float64]

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @staticmethod
    def identity(dim: int, scale: float = 1.0) -> "SymMat":
        if dim < 2:
            raise PreconditionError(f"symmetric matrices need dim >= 2, got {dim}")
        return SymMat(np.eye(dim) * float(scale))

    @staticmethod
    def from_array(values, atol: float = 0.0) -> "SymMat":
        """Build from an array-like, mirroring the upper triangle exactly.

        ``atol`` bounds the allowed asymmetry of the input; the stored matrix
        is always bit-exactly symmetric.
        """
        a = np.array(values, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise PreconditionError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 2:
            raise PreconditionError(f"symmetric matrices need dim >= 2, got {a.shape[0]}")
        if not np.all(np.isfinite(a)):
            raise PreconditionError("matrix entries must be finite")
        if np.abs(a - a.T).max() > atol:
            raise PreconditionError("matrix is not symmetric within tolerance")
        upper = np.triu(a)
        return SymMat(upper + np.triu(a, 1).T)

    def trace(self) -> float:
        return float(np.trace(self.entries))


@dataclass(frozen=True)
class EigenDecomp:
    """Eigenvalues sorted ascending with matching orthonormal column vectors."""

    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.float64]

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])


def _rotation(app: float, aqq: float, apq: float) -> tuple[float, float, float]:
    """Jacobi rotation (c, s, t) annihilating the (p, q) entry."""
    theta = (aqq - app) / (2.0 * apq)
    if theta >= 0.0:
        t = 1.0 / (theta + math.sqrt(theta * theta + 1.0))
    else:
        t = -1.0 / (-theta + math.sqrt(theta * theta + 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    return c, t * c, t


def _jacobi_rotate(a: NDArray, v: NDArray, p: int, q: int) -> None:
    """One cyclic-Jacobi rotation, updating ``a`` and ``v`` in place."""
    apq = a[p, q]
    c, s, _ = _rotation(a[p, p], a[q, q], apq)
    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q
    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p - s * row_q
    a[q, :] = s * row_p + c * row_q
    # The rotation zeroes the (p, q) entry analytically; pin it to avoid
    # round-off residue breaking exact symmetry.
    a[p, q] = 0.0
    a[q, p] = 0.0
    v_p = v[:, p].copy()
    v_q = v[:, q].copy()
    v[:, p] = c * v_p - s * v_q
    v[:, q] = s * v_p + c * v_q


def _off_norm(a: NDArray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def _sweep_2x2(a: NDArray, skip: float) -> tuple[NDArray, NDArray]:
    """Closed form for d = 2: a single Jacobi rotation diagonalizes exactly."""
    app = a[0, 0]
    aqq = a[1, 1]
    apq = a[0, 1]
    if abs(apq) <= skip:
        return np.array([app, aqq]), np.eye(2)
    c, s, t = _rotation(app, aqq, apq)
    values = np.array([app - t * apq, aqq + t * apq])
    vectors = np.array([[c, s], [-s, c]])
    return values, vectors


def eigh(m: SymMat) -> EigenDecomp:
    """Eigendecomposition by cyclic Jacobi sweeps.

    Deterministic for identical input: fixed (row-cyclic) sweep order, stable
    ascending sort, and a sign convention making the first coordinate of each
    eigenvector with magnitude above 1e-12 positive. Raises
    :class:`EigenConvergenceError` after 10*d^2 sweeps.
    """
    a = np.array(m.entries, dtype=float)
    d = a.shape[0]
    scale = math.sqrt(float(np.einsum("ij,ij->", a, a)))
    if not math.isfinite(scale):
        raise PreconditionError("matrix entries must be finite")
    skip = 1e-14 * max(1.0, scale) / (d * d)

    if d == 2:
        diag, vectors = _sweep_2x2(a, skip)
        return _finalize_eig(diag, vectors)

    v = np.eye(d)
    max_sweeps = 10 * d * d
    converged = False
    for _ in range(max_sweeps):
        rotated = False
        for p in range(d - 1):
            for q in range(p + 1, d):
                if abs(a[p, q]) > skip:
                    _jacobi_rotate(a, v, p, q)
                    rotated = True
        if not rotated:
            converged = True
            break
    if not converged:
        residual = _off_norm(a)
        raise EigenConvergenceError(
            f"Jacobi sweeps did not converge after {max_sweeps} sweeps "
            f"(off-diagonal residual {residual:.3e})",
            off_diagonal_residual=residual,
        )
    return _finalize_eig(np.diag(a).copy(), v)


def _finalize_eig(diag: NDArray, vectors: NDArray) -> EigenDecomp:
    order = np.argsort(diag, kind="stable")
    values = diag[order]
    vectors = vectors[:, order].copy()
    d = vectors.shape[0]
    for j in range(d):
        col = vectors[:, j]
        for i in range(d):
            if abs(col[i]) > _SIGN_EPS:
                if col[i] < 0.0:
                    vectors[:, j] = -col
                break
    return EigenDecomp(eigenvalues=values, eigenvectors=vectors)


def rank_one_add(m: SymMat, weight: float, u: NDArray) -> SymMat:
    """Return ``m + weight * u u^T``.

    Symmetry is preserved bit-exactly: the (i, j) and (j, i) entries are
    computed by the same commutative float expression.
    """
    if not weight > 0.0:
        raise PreconditionError(f"rank-one weight must be positive, got {weight}")
    vec = np.asarray(u, dtype=float)
    if vec.shape != (m.dim,):
        raise PreconditionError(f"vector shape {vec.shape} does not match dim {m.dim}")
    sq = float(vec @ vec)
    if not math.isfinite(sq):
        raise PreconditionError("vector entries must be finite")
    return SymMat(m.entries + weight * np.outer(vec, vec))


def cholesky_lower(m: SymMat) -> NDArray:
    """Lower Cholesky factor; a non-positive pivot means not positive definite."""
    a = m.entries
    d = a.shape[0]
    if d == 2:
        pivot0 = a[0, 0]
        if not pivot0 > 0.0 or not math.isfinite(pivot0):
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite (pivot {pivot0:.3e} at column 0)"
            )
        l00 = math.sqrt(pivot0)
        l10 = a[1, 0] / l00
        pivot1 = a[1, 1] - l10 * l10
        if not pivot1 > 0.0 or not math.isfinite(pivot1):
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite (pivot {pivot1:.3e} at column 1)"
            )
        return np.array([[l00, 0.0], [l10, math.sqrt(pivot1)]])
    lower = np.zeros((d, d))
    for j in range(d):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if not (pivot > 0.0) or not math.isfinite(pivot):
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite (pivot {pivot:.3e} at column {j})"
            )
        ljj = math.sqrt(pivot)
        lower[j, j] = ljj
        if j + 1 < d:
            lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / ljj
    return lower


def solve_cholesky(lower: NDArray, b: NDArray) -> NDArray:
    """Solve ``L L^T x = b`` given the lower factor."""
    d = lower.shape[0]
    if d == 2:
        y0 = b[0] / lower[0, 0]
        y1 = (b[1] - lower[1, 0] * y0) / lower[1, 1]
        x1 = y1 / lower[1, 1]
        x0 = (y0 - lower[1, 0] * x1) / lower[0, 0]
        return np.array([x0, x1])
    y = np.zeros(d)
    for i in range(d):
        y[i] = (b[i] - lower[i, :i] @ y[:i]) / lower[i, i]
    x = np.zeros(d)
    for i in range(d - 1, -1, -1):
        x[i] = (y[i] - lower[i + 1 :, i] @ x[i + 1 :]) / lower[i, i]
    return x


def logdet_from_cholesky(lower: NDArray) -> float:
    """Sum of log squared pivots of an existing factorization."""
    d = lower.shape[0]
    if d == 2:
        return 2.0 * (math.log(lower[0, 0]) + math.log(lower[1, 1]))
    return 2.0 * float(np.sum(np.log(np.diag(lower))))


def solve_spd(m: SymMat, b: NDArray) -> NDArray:
    """Solve ``m x = b`` for symmetric positive definite ``m`` via Cholesky."""
    rhs = np.asarray(b, dtype=float)
    if rhs.shape != (m.dim,):
        raise PreconditionError(f"rhs shape {rhs.shape} does not match dim {m.dim}")
    return solve_cholesky(cholesky_lower(m), rhs)


def logdet_spd(m: SymMat) -> float:
    """log det of a symmetric positive definite matrix, from Cholesky pivots."""
    return logdet_from_cholesky(cholesky_lower(m))
