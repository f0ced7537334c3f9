import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sigma_opt import (
    RngState,
    haar_orthogonal,
    omega,
    omega_star,
    sample_without_replacement,
    spd_solve,
)
from sigma_opt.errors import DomainError, InvalidDimensions, NotPositiveDefinite


class TestSpdSolve:
    def test_identity(self):
        assert np.allclose(spd_solve(np.eye(2), np.array([3.0, 4.0])), [3.0, 4.0])

    def test_diagonal(self):
        x = spd_solve(np.diag([1.0, 4.0]), np.array([1.0, 4.0]))
        assert np.allclose(x, [1.0, 1.0], atol=1e-12)

    def test_row_sums(self):
        A = np.array([[2.0, 1.0], [1.0, 2.0]])
        assert np.allclose(spd_solve(A, np.array([3.0, 3.0])), [1.0, 1.0], atol=1e-12)

    def test_residual_bound(self, gen):
        for _ in range(20):
            n = int(gen.integers(2, 12))
            M = gen.standard_normal((n, n))
            A = M.T @ M + np.eye(n)
            rhs = gen.standard_normal(n)
            x = spd_solve(A, rhs)
            assert np.linalg.norm(A @ x - rhs) <= 1e-8 * np.linalg.norm(rhs)

    def test_shift_retry_recovers_semidefinite(self):
        # rank-deficient PSD: plain Cholesky fails, the shifted retry succeeds
        A = np.array([[1.0, 1.0], [1.0, 1.0]])
        x = spd_solve(A, np.array([2.0, 2.0]))
        assert np.allclose(A @ x, [2.0, 2.0], atol=1e-4)

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            spd_solve(np.array([[1.0, 0.0], [0.0, -1.0]]), np.array([1.0, 1.0]))

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidDimensions):
            spd_solve(np.eye(3), np.ones(2))


class TestOmega:
    def test_zero(self):
        assert omega(0.0) == 0.0
        assert omega_star(0.0) == 0.0

    def test_values(self):
        assert omega(1.0) == pytest.approx(1.0 - np.log(2.0), abs=1e-12)
        assert omega_star(0.5) == pytest.approx(-0.5 - np.log(0.5), abs=1e-12)

    def test_domains(self):
        with pytest.raises(DomainError):
            omega(-1e-9)
        with pytest.raises(DomainError):
            omega_star(1.0)
        with pytest.raises(DomainError):
            omega_star(-0.1)

    @given(st.floats(min_value=0.0, max_value=0.999))
    @settings(max_examples=200, deadline=None)
    def test_order_and_positivity(self, x):
        w, ws = omega(x), omega_star(x)
        assert w >= 0.0 and ws >= 0.0
        assert w <= ws + 1e-15
        if x == 0.0:
            assert w == 0.0 and ws == 0.0
        elif x > 1e-7:  # below this, x^2/2 underflows the subtraction
            assert w > 0.0 and ws > 0.0

    def test_square_bound_up_to_068(self):
        xs = np.linspace(0.0, 0.68, 500)
        assert np.all(omega_star(xs) <= xs**2 + 1e-15)

    def test_convex_increasing(self):
        xs = np.linspace(0.0, 0.95, 400)
        for fn in (omega, omega_star):
            ys = fn(xs)
            d1 = np.diff(ys)
            assert np.all(d1 >= -1e-15)  # increasing
            assert np.all(np.diff(d1) >= -1e-12)  # convex


class TestSampling:
    def test_full_sample_forced(self):
        assert sample_without_replacement(5, 5, RngState(0)).tolist() == [0, 1, 2, 3, 4]

    def test_singleton(self):
        assert sample_without_replacement(1, 1, RngState(3)).tolist() == [0]

    def test_golden_seed(self):
        # fixed-seed draw recorded once; guards the RNG plumbing
        assert sample_without_replacement(4, 2, RngState(42)).tolist() == [1, 3]

    def test_invalid(self):
        with pytest.raises(InvalidDimensions):
            sample_without_replacement(4, 5, RngState(0))
        with pytest.raises(InvalidDimensions):
            sample_without_replacement(4, 0, RngState(0))

    def test_strictly_increasing_and_bounded(self):
        rng = RngState(7)
        for _ in range(50):
            idx = sample_without_replacement(20, 6, rng)
            assert np.all(np.diff(idx) > 0)
            assert idx[0] >= 0 and idx[-1] < 20

    def test_marginal_inclusion_frequency(self):
        rng = RngState(2024)
        counts = np.zeros(10)
        trials = 10_000
        for _ in range(trials):
            counts[sample_without_replacement(10, 3, rng)] += 1
        freq = counts / trials
        assert np.all(np.abs(freq - 0.3) <= 0.02)

    def test_advances_stream(self):
        rng = RngState(5)
        a = sample_without_replacement(100, 10, rng)
        b = sample_without_replacement(100, 10, rng)
        assert rng.stream == 2
        assert not np.array_equal(a, b)


class TestHaar:
    def test_dim_one(self):
        q = haar_orthogonal(1, RngState(0))
        assert q.shape == (1, 1)
        assert abs(abs(q[0, 0]) - 1.0) < 1e-12

    def test_orthogonality(self):
        q = haar_orthogonal(3, RngState(11))
        assert np.max(np.abs(q.T @ q - np.eye(3))) <= 1e-10

    def test_determinism(self):
        a = haar_orthogonal(4, RngState(7))
        b = haar_orthogonal(4, RngState(7))
        assert np.array_equal(a, b)

    def test_det_is_unit(self):
        for seed in range(5):
            q = haar_orthogonal(6, RngState(seed))
            assert abs(abs(np.linalg.det(q)) - 1.0) <= 1e-8

    def test_invalid_dim(self):
        with pytest.raises(InvalidDimensions):
            haar_orthogonal(0, RngState(0))


@given(st.integers(min_value=0, max_value=2**63 - 1))
@settings(max_examples=30, deadline=None)
def test_rng_child_determinism(seed):
    a = RngState(seed).child().standard_normal(4)
    b = RngState(seed).child().standard_normal(4)
    assert np.array_equal(a, b)
