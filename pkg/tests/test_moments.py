import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebbm.moments import Dataset, compute_stats


def naive_stats(samples):
    """O(N n^2) double-loop reference, no linear algebra."""
    N, n = samples.shape
    d_i = np.array([sum(samples[mu, i] for mu in range(N)) / N for i in range(n)])
    d_ij = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            d_ij[i, j] = d_ij[j, i] = sum(
                int(samples[mu, i]) * int(samples[mu, j]) for mu in range(N)
            ) / N
    M = d_i.mean()
    pairs = [d_ij[i, j] for i in range(n) for j in range(i + 1, n)]
    C1 = float(np.mean(pairs))
    C2 = float(np.mean(np.square(pairs)))
    omega = np.array([np.mean([d_ij[i, j] for j in range(n) if j != i]) - C1 for i in range(n)])
    return d_i, d_ij, M, C1, C2, omega, float(np.mean(omega**2))


def random_dataset(N, n, seed):
    return Dataset(samples=np.random.default_rng(seed).choice([-1, 1], size=(N, n)).astype(np.int8))


def test_hand_example():
    d = Dataset(samples=np.array([[1, 1, -1], [1, -1, -1]], dtype=np.int8))
    s = compute_stats(d)
    assert np.allclose(s.d_i, [1, 0, -1])
    assert s.d_ij[0, 1] == 0 and s.d_ij[0, 2] == -1 and s.d_ij[1, 2] == 0
    assert s.M == 0
    assert s.C1 == pytest.approx(-1 / 3)
    assert s.C2 == pytest.approx(1 / 3)
    assert np.allclose(s.omega_i, [-1 / 6, 1 / 3, -1 / 6])
    assert s.Omega == pytest.approx(1 / 18)


def test_constant_data():
    d = Dataset(samples=np.ones((4, 5), dtype=np.int8))
    s = compute_stats(d)
    assert s.M == 1 and s.C1 == 1 and s.C2 == 1 and s.Omega == 0


def test_single_sample_c2():
    s = compute_stats(random_dataset(1, 6, seed=0))
    assert s.C2 == pytest.approx(1.0)


def test_matches_naive_reference():
    d = random_dataset(17, 7, seed=1)
    s = compute_stats(d)
    d_i, d_ij, M, C1, C2, omega, Omega = naive_stats(d.samples)
    assert np.allclose(s.d_i, d_i, atol=1e-12)
    assert np.allclose(s.d_ij, d_ij, atol=1e-12)
    assert s.M == pytest.approx(M, abs=1e-12)
    assert s.C1 == pytest.approx(C1, abs=1e-12)
    assert s.C2 == pytest.approx(C2, abs=1e-12)
    assert np.allclose(s.omega_i, omega, atol=1e-12)
    assert s.Omega == pytest.approx(Omega, abs=1e-12)


def test_spin_permutation_invariance():
    d = random_dataset(11, 6, seed=2)
    perm = np.random.default_rng(3).permutation(6)
    s = compute_stats(d)
    sp = compute_stats(Dataset(samples=d.samples[:, perm]))
    assert sp.M == s.M and sp.C1 == s.C1 and sp.C2 == s.C2 and sp.Omega == s.Omega
    assert np.array_equal(sp.d_i, s.d_i[perm])
    assert np.array_equal(sp.omega_i, s.omega_i[perm])


def test_sample_order_invariance():
    d = random_dataset(11, 6, seed=4)
    perm = np.random.default_rng(5).permutation(11)
    s, sp = compute_stats(d), compute_stats(Dataset(samples=d.samples[perm]))
    assert np.array_equal(sp.d_i, s.d_i)
    assert np.array_equal(sp.d_ij, s.d_ij)


def test_global_spin_flip():
    d = random_dataset(9, 5, seed=6)
    s, sf = compute_stats(d), compute_stats(Dataset(samples=-d.samples))
    assert sf.M == -s.M
    assert np.array_equal(sf.d_i, -s.d_i)
    assert np.array_equal(sf.d_ij, s.d_ij)
    assert sf.C1 == s.C1 and sf.C2 == s.C2 and sf.Omega == s.Omega


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(2, 8),
    N=st.integers(1, 20),
    seed=st.integers(0, 10**6),
)
def test_bounds_and_centering(n, N, seed):
    s = compute_stats(random_dataset(N, n, seed))
    assert abs(s.M) <= 1 and abs(s.C1) <= 1
    assert s.C1**2 <= s.C2 + 1e-12 and s.C2 <= 1
    assert 0 <= s.Omega <= 4
    assert abs(s.omega_i.mean()) <= 1e-12


def test_input_validation():
    with pytest.raises(ValueError):
        Dataset(samples=np.array([[1, 0], [1, -1]]))
    with pytest.raises(ValueError):
        Dataset(samples=np.array([[1], [-1]]))
