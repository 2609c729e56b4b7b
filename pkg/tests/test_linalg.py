"""Symmetric kernel: eigendecomposition, SPD solve, rank-one updates, logdet."""

import math

import numpy as np
import pytest

from banditvn.errors import NotPositiveDefiniteError, PreconditionError
from banditvn.linalg import (
    EigenDecomp,
    SymMat,
    cholesky_lower,
    eigh,
    logdet_spd,
    rank_one_add,
    solve_spd,
)


def random_spd(rng, dim, cond=None):
    """Random SPD matrix with a prescribed condition number (eigenvalue ratio)."""
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    if cond is None:
        eigs = rng.uniform(0.5, 5.0, size=dim)
    else:
        eigs = np.geomspace(1.0, cond, dim)
    m = (q * eigs) @ q.T
    m = (m + m.T) / 2.0  # exact symmetrization
    return SymMat.from_array(m)


def check_decomp(m: SymMat, decomp: EigenDecomp):
    w, v = decomp.eigenvalues, decomp.eigenvectors
    d = m.dim
    assert np.all(np.diff(w) >= 0.0)
    for i in range(d):
        assert abs(np.linalg.norm(v[:, i]) - 1.0) <= 1e-12
        for j in range(i + 1, d):
            assert abs(v[:, i] @ v[:, j]) <= 1e-10
    recon = (v * w) @ v.T
    fro = np.linalg.norm(m.entries)
    assert np.linalg.norm(recon - m.entries) <= 1e-9 * max(1.0, fro)


class TestEigh:
    def test_identity(self):
        decomp = eigh(SymMat.identity(2))
        assert np.allclose(decomp.eigenvalues, [1.0, 1.0])
        check_decomp(SymMat.identity(2), decomp)

    def test_diagonal(self):
        decomp = eigh(SymMat.from_array(np.diag([3.0, 2.0])))
        assert np.allclose(decomp.eigenvalues, [2.0, 3.0], atol=1e-14)
        # ascending order pairs e2 with the smaller eigenvalue, up to sign
        assert np.allclose(np.abs(decomp.eigenvectors[:, 0]), [0.0, 1.0], atol=1e-14)
        assert np.allclose(np.abs(decomp.eigenvectors[:, 1]), [1.0, 0.0], atol=1e-14)

    def test_two_by_two_hand_case(self):
        # characteristic polynomial of [[2,1],[1,2]] gives roots 1 and 3
        decomp = eigh(SymMat.from_array([[2.0, 1.0], [1.0, 2.0]]))
        assert np.allclose(decomp.eigenvalues, [1.0, 3.0], atol=1e-14)
        s = 1.0 / math.sqrt(2.0)
        assert np.allclose(decomp.eigenvectors[:, 0], [s, -s], atol=1e-14)
        assert np.allclose(decomp.eigenvectors[:, 1], [s, s], atol=1e-14)

    def test_sign_convention(self):
        decomp = eigh(SymMat.from_array([[2.0, -1.0], [-1.0, 2.0]]))
        for j in range(2):
            col = decomp.eigenvectors[:, j]
            lead = col[np.abs(col) > 1e-12][0]
            assert lead > 0.0

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        m = random_spd(rng, 5)
        a = eigh(m)
        b = eigh(m)
        assert np.array_equal(a.eigenvalues, b.eigenvalues)
        assert np.array_equal(a.eigenvectors, b.eigenvectors)

    @pytest.mark.parametrize("dim", [2, 3, 4, 5, 6, 7, 8])
    def test_random_spd_batch(self, dim):
        rng = np.random.default_rng(100 + dim)
        for _ in range(10_000 // 7):
            m = random_spd(rng, dim)
            check_decomp(m, eigh(m))

    def test_random_spd_bulk_small(self):
        # remaining bulk of the 10^4-matrix contract at d in {2, 3}
        rng = np.random.default_rng(42)
        for _ in range(10_000 - 7 * (10_000 // 7)):
            dim = int(rng.integers(2, 4))
            m = random_spd(rng, dim)
            check_decomp(m, eigh(m))

    def test_nonfinite_rejected(self):
        m = SymMat(np.array([[np.inf, 0.0], [0.0, 1.0]]))
        with pytest.raises(PreconditionError):
            eigh(m)


class TestRankOneAdd:
    def test_zero_plus_basis(self):
        m = SymMat(np.zeros((3, 3)))
        out = rank_one_add(m, 1.0, np.array([1.0, 0.0, 0.0]))
        assert np.array_equal(out.entries, np.diag([1.0, 0.0, 0.0]))

    def test_identity_plus_diagonal_pair(self):
        s = 1.0 / math.sqrt(2.0)
        out = rank_one_add(SymMat.identity(2), 2.0, np.array([s, s]))
        assert np.allclose(out.entries, [[2.0, 1.0], [1.0, 2.0]], atol=1e-15)

    def test_axis_aligned(self):
        out = rank_one_add(
            SymMat.from_array(np.diag([2.0, 3.0])), 0.5, np.array([0.0, 1.0])
        )
        assert np.array_equal(out.entries, np.diag([2.0, 3.5]))

    def test_exact_symmetry(self):
        rng = np.random.default_rng(3)
        m = SymMat.identity(5)
        for _ in range(200):
            u = rng.standard_normal(5)
            m = rank_one_add(m, float(rng.uniform(0.1, 3.0)), u)
        assert np.array_equal(m.entries, m.entries.T)

    def test_rejects_nonpositive_weight(self):
        with pytest.raises(PreconditionError):
            rank_one_add(SymMat.identity(2), 0.0, np.array([1.0, 0.0]))
        with pytest.raises(PreconditionError):
            rank_one_add(SymMat.identity(2), -1.0, np.array([1.0, 0.0]))


class TestSolveSpd:
    def test_scalar_matrix(self):
        x = solve_spd(SymMat.identity(2, scale=2.0), np.array([4.0, 6.0]))
        assert np.allclose(x, [2.0, 3.0], atol=1e-15)

    def test_diagonal(self):
        x = solve_spd(SymMat.from_array(np.diag([3.0, 2.0])), np.array([0.5, 0.0]))
        assert np.allclose(x, [1.0 / 6.0, 0.0], atol=1e-15)

    def test_hand_case_multiply_back(self):
        m = SymMat.from_array([[2.0, 1.0], [1.0, 2.0]])
        b = np.array([3.0, 3.0])
        x = solve_spd(m, b)
        assert np.allclose(x, [1.0, 1.0], atol=1e-14)
        assert np.linalg.norm(m.entries @ x - b) <= 1e-9 * max(1.0, np.linalg.norm(b))

    @pytest.mark.parametrize("cond", [1.0, 1e2, 1e4, 1e6, 1e8])
    def test_residual_under_conditioning(self, cond):
        rng = np.random.default_rng(int(math.log10(cond)) + 5)
        for dim in (2, 3, 5, 8):
            m = random_spd(rng, dim, cond=cond)
            x_true = rng.standard_normal(dim)
            b = m.entries @ x_true
            x = solve_spd(m, b)
            residual = np.linalg.norm(m.entries @ x - b)
            assert residual <= 1e-9 * max(1.0, np.linalg.norm(b))

    def test_not_positive_definite(self):
        m = SymMat.from_array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues -1, 3
        with pytest.raises(NotPositiveDefiniteError, match="not positive definite"):
            solve_spd(m, np.array([1.0, 1.0]))


class TestLogdet:
    def test_identity(self):
        assert logdet_spd(SymMat.identity(4)) == 0.0

    def test_diag_two_two(self):
        assert logdet_spd(SymMat.identity(2, scale=2.0)) == pytest.approx(
            2.0 * math.log(2.0), abs=1e-12
        )

    def test_hand_case(self):
        # det [[2,1],[1,2]] = 3
        m = SymMat.from_array([[2.0, 1.0], [1.0, 2.0]])
        assert logdet_spd(m) == pytest.approx(math.log(3.0), abs=1e-12)

    def test_matches_eigenvalue_product(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            dim = int(rng.integers(2, 7))
            m = random_spd(rng, dim)
            from_eigs = float(np.sum(np.log(eigh(m).eigenvalues)))
            value = logdet_spd(m)
            assert abs(value - from_eigs) <= 1e-8 * max(1.0, abs(value))


class TestSymMat:
    def test_from_array_mirrors_exactly(self):
        a = np.array([[1.0, 2.0], [2.0 + 5e-13, 3.0]])
        m = SymMat.from_array(a, atol=1e-12)
        assert np.array_equal(m.entries, m.entries.T)

    def test_rejects_asymmetric(self):
        with pytest.raises(PreconditionError):
            SymMat.from_array([[1.0, 2.0], [0.0, 3.0]])

    def test_rejects_small_dim(self):
        with pytest.raises(PreconditionError):
            SymMat.identity(1)

    def test_cholesky_factor_reconstructs(self):
        rng = np.random.default_rng(9)
        m = random_spd(rng, 4)
        lower = cholesky_lower(m)
        assert np.allclose(lower @ lower.T, m.entries, atol=1e-12)
