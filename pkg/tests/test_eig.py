import math

import numpy as np
import pytest

from covspectra import (
    EmpiricalCDF,
    EntryDistribution,
    LimitCDF,
    SpectralMeasure,
    count_in_interval,
    hermitian_eigenvalues,
    ks_distance,
    sample_entries,
    singular_values_scaled,
)
from covspectra.eig import EigenSpectrum
from covspectra.errors import ConvergenceError
from covspectra.models import form_sample_covariance

H1 = SpectralMeasure.point_mass(1.0)
GAUSS = EntryDistribution.gaussian_real()


def cubic_eigenvalues(A):
    """Closed-form eigenvalues of a 3x3 Hermitian matrix.

    Roots of the characteristic cubic via the trigonometric method on the
    shifted, scaled matrix; exact for any Hermitian input up to roundoff.
    """
    A = np.asarray(A, dtype=complex)
    q = np.trace(A).real / 3.0
    p1 = abs(A[0, 1]) ** 2 + abs(A[0, 2]) ** 2 + abs(A[1, 2]) ** 2
    p2 = sum((A[i, i].real - q) ** 2 for i in range(3)) + 2.0 * p1
    p = math.sqrt(p2 / 6.0)
    if p == 0.0:
        return np.full(3, q)
    B = (A - q * np.eye(3)) / p
    r = np.linalg.det(B).real / 2.0
    r = min(1.0, max(-1.0, r))
    phi = math.acos(r) / 3.0
    lam1 = q + 2.0 * p * math.cos(phi)
    lam3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    lam2 = 3.0 * q - lam1 - lam3
    return np.sort(np.array([lam1, lam2, lam3]))


def random_hermitian(rng, n, cplx=True):
    A = rng.standard_normal((n, n))
    if cplx:
        A = A + 1j * rng.standard_normal((n, n))
    return (A + A.conj().T) / 2.0


def random_unitary(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


class TestHermitianEigenvalues:
    def test_diagonal(self):
        assert np.array_equal(hermitian_eigenvalues(np.diag([3.0, 1.0, 2.0])).values, [1, 2, 3])

    def test_identity(self):
        assert np.array_equal(hermitian_eigenvalues(np.eye(7)).values, np.ones(7))

    def test_three_by_three_against_cubic_formula(self):
        rng = np.random.default_rng(17)
        for trial in range(100):
            A = random_hermitian(rng, 3, cplx=trial % 2 == 0)
            got = hermitian_eigenvalues(A).values
            want = cubic_eigenvalues(A)
            scale = max(1.0, np.max(np.abs(want)))
            assert np.max(np.abs(got - want)) < 1e-10 * scale

    def test_against_lapack(self):
        rng = np.random.default_rng(18)
        for n in (2, 5, 16, 40):
            A = random_hermitian(rng, n)
            got = hermitian_eigenvalues(A).values
            want = np.linalg.eigvalsh(A)
            assert np.max(np.abs(got - want)) < 1e-12 * max(1.0, np.max(np.abs(want)))

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            hermitian_eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]))

    @pytest.mark.parametrize("n", [16, 64, 256])
    def test_trace_conservation(self, n):
        rng = np.random.default_rng(n)
        A = random_hermitian(rng, n)
        vals = hermitian_eigenvalues(A).values
        norm = np.linalg.norm(A, ord=np.inf)
        assert abs(vals.sum() - np.trace(A).real) < 1e-8 * n * norm

    @pytest.mark.parametrize("n", [16, 64, 256])
    def test_unitary_invariance(self, n):
        rng = np.random.default_rng(n + 1)
        A = random_hermitian(rng, n)
        U = random_unitary(rng, n)
        base = hermitian_eigenvalues(A).values
        rotated = hermitian_eigenvalues(U @ A @ U.conj().T).values
        assert np.max(np.abs(base - rotated)) < 1e-8 * max(1.0, np.max(np.abs(base)))

    def test_psd_floor_on_sample_covariances(self):
        rng = np.random.default_rng(23)
        for _ in range(5):
            B = rng.standard_normal((12, 15))
            X = rng.standard_normal((15, 20))
            S = form_sample_covariance(B, X, 20)
            vals = hermitian_eigenvalues(S).values
            assert vals[0] >= -1e-9 * np.linalg.norm(S, ord=np.inf)

    def test_rank_one_perturbation_bound(self):
        # |lambda_k(M + E) - lambda_k(M)| <= ||E|| for Hermitian perturbations
        rng = np.random.default_rng(29)
        M = random_hermitian(rng, 24)
        v = rng.standard_normal(24) + 1j * rng.standard_normal(24)
        E = 0.05 * np.outer(v, v.conj())
        norm_e = float(np.linalg.eigvalsh(E)[-1])
        before = hermitian_eigenvalues(M).values
        after = hermitian_eigenvalues(M + E).values
        assert np.max(np.abs(after - before)) <= norm_e + 1e-8

    def test_sweep_budget_raises(self):
        from covspectra.eig import _ql_eigenvalues

        rng = np.random.default_rng(3)
        d = rng.standard_normal(50)
        e = rng.standard_normal(49)
        with pytest.raises(ConvergenceError):
            _ql_eigenvalues(d, e, max_total_sweeps=1)


class TestSingularValuesScaled:
    def test_diagonal_example(self):
        spec = singular_values_scaled(np.eye(2), np.diag([2.0, 3.0]), n=1)
        assert np.allclose(spec.values, [4.0, 9.0])

    def test_zero_filter(self):
        spec = singular_values_scaled(np.zeros((3, 4)), np.ones((4, 6)))
        assert np.array_equal(spec.values, np.zeros(3))

    def test_pads_rank_deficit_with_zeros(self):
        rng = np.random.default_rng(4)
        spec = singular_values_scaled(rng.standard_normal((6, 3)), rng.standard_normal((3, 5)), 5)
        assert len(spec) == 6
        assert np.count_nonzero(spec.values < 1e-12) >= 3

    def test_cross_check_against_eigensolver(self):
        rng = np.random.default_rng(41)
        B = rng.standard_normal((50, 60))
        X = rng.standard_normal((60, 100))
        sv = singular_values_scaled(B, X, 100).values
        ev = hermitian_eigenvalues(form_sample_covariance(B, X, 100)).values
        top = slice(25, None)
        assert np.max(np.abs(sv[top] - ev[top]) / ev[top]) < 1e-8

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            singular_values_scaled(np.eye(3), np.zeros((4, 2)))


class TestCountInInterval:
    SPEC = EigenSpectrum(values=np.array([1.0, 2.0, 3.0]))

    def test_interior(self):
        assert count_in_interval(self.SPEC, 1.5, 2.5) == 1

    def test_empty(self):
        assert count_in_interval(self.SPEC, 4.0, 5.0) == 0

    def test_closed_endpoints(self):
        assert count_in_interval(self.SPEC, 1.0, 3.0) == 3

    def test_rejects_inverted(self):
        with pytest.raises(ValueError):
            count_in_interval(self.SPEC, 2.0, 1.0)


class TestLimitCDF:
    def test_total_mass_near_one(self):
        lim = LimitCDF(0.5, H1)
        assert abs(lim.total_mass - 1.0) < 1e-3

    def test_oversampled_keeps_atom(self):
        lim = LimitCDF(2.0, H1)
        assert abs(lim.zero_atom - 0.5) < 1e-15
        assert abs(lim.total_mass - 1.0) < 1e-3

    def test_rank_deficient_population_keeps_zero_mass(self):
        # half the population directions are null: the limit keeps mass 0.5 at 0
        H = SpectralMeasure([(0.0, 0.5), (1.0, 0.5)])
        lim = LimitCDF(0.25, H)
        assert abs(lim.zero_atom - 0.5) < 1e-15
        assert abs(lim.total_mass - 1.0) < 1e-3
        p, n = 200, 800
        B = np.diag(np.concatenate([np.zeros(p // 2), np.ones(p // 2)]))
        spec = singular_values_scaled(B, sample_entries(p, n, GAUSS, seed=55), n)
        assert ks_distance(EmpiricalCDF(spec.values), 0.25, H, limit=lim) < 0.06

    def test_cdf_monotone(self):
        lim = LimitCDF(0.3, SpectralMeasure([(1.0, 0.5), (4.0, 0.5)]))
        xs = np.linspace(0.0, 9.0, 500)
        vals = lim.cdf(xs)
        assert np.all(np.diff(vals) >= -1e-12)

    def test_quantile_inverts_cdf(self):
        lim = LimitCDF(0.5, H1)
        for q in (0.1, 0.4, 0.7, 0.95):
            x = lim.quantile(q)
            assert abs(float(lim.cdf(x)[0]) - q) < 1e-6


class TestKSDistance:
    def test_self_distance_of_quantile_sample(self):
        lim = LimitCDF(0.5, H1)
        qs = (np.arange(1, 1001) - 0.5) / 1000.0
        sample = np.array([lim.quantile(q) for q in qs])
        d = ks_distance(EmpiricalCDF(sample), 0.5, H1, limit=lim)
        assert d <= 1e-3 + 1e-3  # discretization plus quadrature error

    def test_single_trial_at_moderate_size(self):
        X = sample_entries(400, 800, GAUSS, seed=77)
        spec = singular_values_scaled(np.eye(400), X, 800)
        assert ks_distance(EmpiricalCDF(spec.values), 0.5, H1) < 0.05

    def test_distance_shrinks_with_size(self):
        lim = LimitCDF(0.5, H1)
        wins = 0
        for t in range(20):
            small = singular_values_scaled(
                np.eye(50), sample_entries(50, 100, GAUSS, seed=500 + t), 100
            )
            large = singular_values_scaled(
                np.eye(400), sample_entries(400, 800, GAUSS, seed=500 + t), 800
            )
            d_small = ks_distance(EmpiricalCDF(small.values), 0.5, H1, limit=lim)
            d_large = ks_distance(EmpiricalCDF(large.values), 0.5, H1, limit=lim)
            wins += d_large < d_small
        assert wins >= 18
