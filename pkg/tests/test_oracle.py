import math

import numpy as np
import pytest

from ebbm.errors import CapacityError
from ebbm.model import (
    BoltzmannMachine,
    PriorFamily,
    PriorSpec,
    exact_moments,
    log_partition,
)
from ebbm.moments import Dataset, compute_stats
from ebbm.oracle import (
    eb_likelihood_mc,
    finite_difference,
    georges_check,
    ml_fit_exact,
    psi_identity_check,
    replicated_states,
)


def moments_example():
    return Dataset(samples=np.array([[1, 1, -1], [1, -1, -1]], dtype=np.int8))


def random_dataset(N, n, seed):
    return Dataset(samples=np.random.default_rng(seed).choice([-1, 1], size=(N, n)).astype(np.int8))


class TestPsiIdentity:
    def test_decoupled_spins(self):
        d = moments_example()
        H, tau = 0.4, 2
        lhs, rhs, gap = psi_identity_check(d, H, 0.0, tau)
        stats = compute_stats(d)
        n, N = 3, 2
        expected = n * tau * math.log(2 * math.cosh(H)) + n * N * H * stats.M
        assert gap <= 1e-12
        assert lhs == pytest.approx(expected, rel=1e-12)

    def test_moments_example(self):
        _, _, gap = psi_identity_check(moments_example(), 0.1, 0.3, 2)
        assert gap <= 1e-9

    def test_single_replica_reduces_to_modified_machine(self):
        d = moments_example()
        H, gamma = 0.2, 0.3
        stats = compute_stats(d)
        n, N = stats.n, stats.N
        lhs, _, gap = psi_identity_check(d, H, gamma, tau=1)
        assert gap <= 1e-10
        # tau=1: pair interaction reduces to a single machine with couplings
        # gamma N d_ij / n plus data-dependent constants
        iu = np.triu_indices(n, k=1)
        machine = BoltzmannMachine.from_upper(n, H, gamma * N * stats.d_ij[iu] / n)
        const = (
            n * N * H * stats.M
            + (gamma / (2 * n)) * ((N * stats.d_ij[iu]) ** 2).sum()
            + gamma * len(iu[0]) / (2 * n)
        )
        assert lhs == pytest.approx(const + log_partition(machine), rel=1e-10)

    def test_randomized_grid(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(2, 5))
            tau = int(rng.integers(1, 4))
            N = int(rng.integers(1, 4))
            d = random_dataset(N, n, int(rng.integers(10**6)))
            _, _, gap = psi_identity_check(
                d, float(rng.uniform(-0.5, 0.5)), float(rng.uniform(0, 0.5)), tau
            )
            assert gap <= 1e-9

    def test_capacity_bound(self):
        with pytest.raises(CapacityError):
            replicated_states(5, 4)


class TestGeorges:
    def test_mean_zero_operator(self):
        report = georges_check(moments_example(), 0.4, 2)
        assert abs(report.u0_mean) <= 1e-12

    def test_m_zero(self):
        report = georges_check(moments_example(), 0.0, 2)
        assert report.e_int_mean == pytest.approx(0.0, abs=1e-12)
        assert report.e_int_formula == 0.0

    def test_moments_example_identities(self):
        report = georges_check(moments_example(), 0.4, 2)
        assert report.first_order_gap <= 1e-10
        assert report.second_order_gap <= 1e-10

    def test_grid(self):
        for n, tau in ((3, 2), (4, 3)):
            d = random_dataset(3, n, seed=n * 10 + tau)
            for m in (0.0, 0.3, -0.7):
                report = georges_check(d, m, tau)
                assert report.first_order_gap <= 1e-10
                assert report.second_order_gap <= 1e-10
                assert abs(report.u0_mean) <= 1e-12


class TestEvidenceMC:
    def test_deterministic_prior(self):
        # gamma = 0 makes every prior draw identical; zero MC variance
        d = Dataset(samples=np.array([[1, 1, -1, 1]], dtype=np.int8))
        H = 0.3
        prior = PriorSpec(PriorFamily.GAUSSIAN, gamma=0.0, H=H)
        est, se = eb_likelihood_mc(d, prior, 200, seed=0)
        stats = compute_stats(d)
        expected = H * stats.M - math.log(2 * math.cosh(H))
        assert est == pytest.approx(expected, rel=1e-10)
        assert se <= 1e-12

    def test_seed_agreement(self):
        d = random_dataset(20, 6, seed=1)
        prior = PriorSpec(PriorFamily.GAUSSIAN, gamma=0.3, H=0.1)
        e1, s1 = eb_likelihood_mc(d, prior, 3000, seed=10)
        e2, s2 = eb_likelihood_mc(d, prior, 3000, seed=20)
        assert abs(e1 - e2) <= 3 * math.hypot(s1, s2)

    def test_capacity_bound(self):
        d = random_dataset(5, 13, seed=2)
        with pytest.raises(CapacityError):
            eb_likelihood_mc(d, PriorSpec(PriorFamily.GAUSSIAN, 0.1, 0.0), 200, seed=0)


class TestExactML:
    def test_symmetric_fixed_point(self):
        # all 2^4 states once: every moment vanishes
        states = np.array(
            [[1 if (k >> b) & 1 else -1 for b in range(4)] for k in range(16)], dtype=np.int8
        )
        h, j = ml_fit_exact(Dataset(samples=states))
        assert abs(h) <= 1e-8
        assert np.all(np.abs(j) <= 1e-8)

    def test_model_matched_large_sample(self):
        rng = np.random.default_rng(3)
        n = 8
        true = BoltzmannMachine.from_upper(n, 0.15, rng.normal(0, 0.4 / np.sqrt(n), size=28))
        # exact sampling via the enumerated distribution
        from ebbm.model import _chunk_exponents, _state_chunk

        states = _state_chunk(n, 0, 1 << n)
        e = _chunk_exponents(true, states)
        p = np.exp(e - e.max())
        p /= p.sum()
        draws = rng.choice(1 << n, size=10**5, p=p)
        data = Dataset(samples=states[draws].astype(np.int8))
        h_ml, j_ml = ml_fit_exact(data)
        stats = compute_stats(data)
        fitted = BoltzmannMachine.from_upper(n, h_ml, j_ml)
        site, pair = exact_moments(fitted)
        iu = np.triu_indices(n, k=1)
        assert abs(site.sum() - stats.d_i.sum()) / n <= 1e-6
        assert np.all(np.abs(pair[iu] - stats.d_ij[iu]) <= 1e-6)

    def test_gamma_recovery_in_large_sample_limit(self):
        # the per-pair ML variance formula should recover gamma_true
        rng = np.random.default_rng(4)
        n, gamma_true = 8, 0.16
        from ebbm.model import _chunk_exponents, _state_chunk, sample_parameters

        prior = PriorSpec(PriorFamily.GAUSSIAN, gamma=gamma_true, H=0.0)
        true = sample_parameters(prior, n, seed=5)
        states = _state_chunk(n, 0, 1 << n)
        e = _chunk_exponents(true, states)
        p = np.exp(e - e.max())
        p /= p.sum()
        draws = rng.choice(1 << n, size=10**5, p=p)
        _, j_ml = ml_fit_exact(Dataset(samples=states[draws].astype(np.int8)))
        npairs = j_ml.size
        gamma_ml = n * (j_ml**2).sum() / npairs
        gamma_ref = n * (true.upper() ** 2).sum() / npairs
        # chi-square spread of the 28 squared couplings dominates
        se = gamma_ref * math.sqrt(2.0 / npairs)
        assert abs(gamma_ml - gamma_ref) <= 0.1 * gamma_ref + 3 * se / math.sqrt(1)


class TestFiniteDifference:
    def test_quadratic_exact(self):
        assert finite_difference(lambda x: x**2, 1.0, 0.1) == pytest.approx(2.0, rel=1e-12)

    def test_entropy_derivative(self):
        from ebbm.estimator import mean_field_entropy

        fd = finite_difference(mean_field_entropy, 0.3, 1e-5)
        assert fd == pytest.approx(math.atanh(0.3), abs=1e-9)

    def test_second_order_convergence(self):
        f = math.sin
        e1 = abs(finite_difference(f, 0.7, 1e-2) - math.cos(0.7))
        e2 = abs(finite_difference(f, 0.7, 5e-3) - math.cos(0.7))
        assert e1 / e2 == pytest.approx(4.0, rel=0.1)
