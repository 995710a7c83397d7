"""Brute-force verifiers for the estimator's algebra.

These cross-check the closed-form machinery against independent computations:
exact enumeration of the replicated system (replica identity and fluctuation-
operator checks), Monte-Carlo evidence with exact partition functions, and an
exact maximum-likelihood fit for the large-sample limit.  Everything here is
deliberately slow and simple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import CapacityError, ConvergenceError
from .estimator import PlefkaContext, phi1_general, phi2_general
from .model import BoltzmannMachine, PriorSpec, exact_moments, log_partition, sample_parameters
from .moments import Dataset, compute_stats

MAX_REPLICATED_SPINS = 15
MC_MAX_N = 12
ML_MAX_N = 12


def replicated_states(n: int, tau: int) -> np.ndarray:
    """All 2^(n*tau) configurations of a tau-replica system, shape
    (states, tau, n) with +/-1 entries."""
    total_spins = n * tau
    if total_spins > MAX_REPLICATED_SPINS:
        raise CapacityError(
            f"replicated enumeration limited to n*tau <= {MAX_REPLICATED_SPINS}, got {total_spins}"
        )
    idx = np.arange(1 << total_spins, dtype=np.uint32)[:, None]
    bits = (idx >> np.arange(total_spins, dtype=np.uint32)) & 1
    return (bits.astype(np.float64) * 2.0 - 1.0).reshape(-1, tau, n)


def _pair_indices(n: int):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _replica_pair_sums(states: np.ndarray):
    """Per-state same-replica pair sums A_ij = sum_a S_i^a S_j^a and
    cross-replica four-spin sums B_ij = sum_{a<b} (S S)(S S)."""
    n = states.shape[2]
    tau = states.shape[1]
    a_sums, b_sums = {}, {}
    for i, j in _pair_indices(n):
        prod = states[:, :, i] * states[:, :, j]  # (states, tau)
        a_sums[(i, j)] = prod.sum(axis=1)
        b_sums[(i, j)] = (prod.sum(axis=1) ** 2 - tau) / 2.0
    return a_sums, b_sums


def psi_identity_check(
    dataset: Dataset, H: float, gamma: float, tau: int
) -> tuple[float, float, float]:
    """Compare the two exact log-domain forms of the replicated evidence for
    a natural replica count tau (so x = tau/N).

    Left side: the per-pair Gaussian coupling integral done in closed form,
    E[exp(J A)] = exp(gamma A^2 / (2n)).  Right side: the data-moment prefactor
    times the replicated partition sum.  Returns (lhs, rhs, |gap|).
    """
    stats = compute_stats(dataset)
    n, N = stats.n, stats.N
    x = tau / N
    states = replicated_states(n, tau)
    a_sums, _ = _replica_pair_sums(states)

    field_sum = states.sum(axis=(1, 2))  # sum_{i,a} S_i^a
    lhs_exp = H * (field_sum + N * stats.d_i.sum())
    rhs_exp = H * field_sum
    for i, j in _pair_indices(n):
        a = a_sums[(i, j)]
        d = stats.d_ij[i, j]
        lhs_exp = lhs_exp + (gamma / (2.0 * n)) * (a + N * d) ** 2
        rhs_exp = rhs_exp + (gamma * N / n) * d * a + (gamma / (2.0 * n)) * (a**2 - tau)
    lhs = float(logsumexp(lhs_exp))
    rhs = float(
        n * N * H * stats.M
        + gamma * (n - 1) * N**2 / 4.0 * (stats.C2 + x / N)
        + logsumexp(rhs_exp)
    )
    return lhs, rhs, abs(lhs - rhs)


@dataclass(frozen=True)
class GeorgesReport:
    e_int_mean: float
    e_int_formula: float
    u0_mean: float
    u0_sq_mean: float
    u0_sq_formula: float

    @property
    def first_order_gap(self) -> float:
        return abs(self.e_int_mean - self.e_int_formula)

    @property
    def second_order_gap(self) -> float:
        return abs(self.u0_sq_mean - self.u0_sq_formula)


def georges_check(dataset: Dataset, m: float, tau: int) -> GeorgesReport:
    """Verify both expansion coefficients against enumeration under the
    independent-spin product measure with <S> = m.

    Checks <E_int>_0 = nN phi1(m), <U(0)>_0 = 0 and <U(0)^2>_0 = -2nN phi2(m),
    where U(0) is the zero-coupling fluctuation operator.
    """
    if abs(m) >= 1:
        raise ValueError(f"need |m| < 1, got {m}")
    stats = compute_stats(dataset)
    n, N = stats.n, stats.N
    ctx = PlefkaContext.from_stats(stats, x=tau / N)
    states = replicated_states(n, tau)
    # product-measure weights: prod over spins of (1 + m S)/2
    logw = np.log((1.0 + m * states.reshape(states.shape[0], -1)) / 2.0).sum(axis=1)
    w = np.exp(logw - logsumexp(logw))

    a_sums, b_sums = _replica_pair_sums(states)
    e_int = np.zeros(states.shape[0])
    u0 = ((n - 1) * N / n) * (stats.omega_i[None, :] * m * (states - m).sum(axis=1)).sum(axis=1)
    for i, j in _pair_indices(n):
        d = stats.d_ij[i, j]
        e_int -= (N / n) * d * a_sums[(i, j)] + (1.0 / n) * b_sums[(i, j)]
        centered = ((states[:, :, i] - m) * (states[:, :, j] - m)).sum(axis=1)
        u0 += (N / n) * (d + (tau - 1.0) * m**2 / N) * centered
        prod = states[:, :, i] * states[:, :, j] - m**2  # (states, tau)
        u0 += (1.0 / n) * ((prod.sum(axis=1) ** 2 - (prod**2).sum(axis=1)) / 2.0)
    return GeorgesReport(
        e_int_mean=float(w @ e_int),
        e_int_formula=n * N * phi1_general(m, ctx),
        u0_mean=float(w @ u0),
        u0_sq_mean=float(w @ u0**2),
        u0_sq_formula=-2.0 * n * N * phi2_general(m, ctx),
    )


def eb_likelihood_mc(
    dataset: Dataset, prior: PriorSpec, n_mc: int, seed, n_blocks: int = 20
) -> tuple[float, float]:
    """Monte-Carlo estimate of the normalized log evidence
    (1/nN) ln E_prior[ prod_mu P(S_mu | h, J) ], with an exact partition
    function per prior draw.

    Returns (estimate, jackknife standard error over n_blocks blocks).
    """
    n, N = dataset.n, dataset.N
    if n > MC_MAX_N:
        raise CapacityError(f"MC evidence limited to n <= {MC_MAX_N}, got {n}")
    if n_mc < 100:
        raise ValueError("need n_mc >= 100 draws")
    stats = compute_stats(dataset)
    ss = np.random.SeedSequence(entropy=seed)
    lls = np.empty(n_mc)
    iu = np.triu_indices(n, k=1)
    d_upper = stats.d_ij[iu]
    for k, child in enumerate(ss.spawn(n_mc)):
        machine = sample_parameters(prior, n, child)
        data_term = machine.h * N * stats.d_i.sum() + N * machine.upper() @ d_upper
        lls[k] = data_term - N * log_partition(machine)
    estimate = (logsumexp(lls) - math.log(n_mc)) / (n * N)
    blocks = np.array_split(lls, n_blocks)
    loo = np.empty(n_blocks)
    for b in range(n_blocks):
        rest = np.concatenate([blocks[i] for i in range(n_blocks) if i != b])
        loo[b] = (logsumexp(rest) - math.log(rest.size)) / (n * N)
    se = math.sqrt((n_blocks - 1) / n_blocks * ((loo - loo.mean()) ** 2).sum())
    return float(estimate), float(se)


def ml_fit_exact(
    dataset: Dataset, tol: float = 1e-8, max_iter: int = 200
) -> tuple[float, np.ndarray]:
    """Exact maximum-likelihood fit of (h, J) by damped Newton ascent on the
    concave log-likelihood; moment matching to infinity-norm ``tol``.

    Returns (h_ml, upper-triangle coupling vector).
    """
    n, N = dataset.n, dataset.N
    if n > ML_MAX_N:
        raise CapacityError(f"exact ML fit limited to n <= {ML_MAX_N}, got {n}")
    stats = compute_stats(dataset)
    iu = np.triu_indices(n, k=1)
    target = np.concatenate(([stats.d_i.sum()], stats.d_ij[iu]))

    from .model import _chunk_exponents, _state_chunk

    states = _state_chunk(n, 0, 1 << n)
    feats = np.column_stack([states.sum(axis=1)] + [states[:, i] * states[:, j] for i, j in zip(*iu)])

    theta = np.zeros(1 + iu[0].size)  # (h, J_upper)
    for _ in range(max_iter):
        machine = BoltzmannMachine.from_upper(n, theta[0], theta[1:])
        e = _chunk_exponents(machine, states)
        p = np.exp(e - e.max())
        p /= p.sum()
        mean = feats.T @ p
        grad = target - mean
        if np.abs(grad / np.array([n] + [1] * iu[0].size)).max() <= tol:
            return float(theta[0]), theta[1:].copy()
        cov = (feats * p[:, None]).T @ feats - np.outer(mean, mean)
        cov[np.diag_indices_from(cov)] += 1e-10
        step = np.linalg.solve(cov, grad)
        # damp long steps; the likelihood is concave so full Newton is safe
        # once near the optimum
        scale = min(1.0, 2.0 / max(1e-12, np.abs(step).max()))
        theta = theta + scale * step
    raise ConvergenceError(f"ML fit did not reach gradient tolerance {tol} in {max_iter} iterations")


def finite_difference(f, m: float, step: float) -> float:
    """Central difference (f(m+step) - f(m-step)) / (2 step)."""
    return (f(m + step) - f(m - step)) / (2.0 * step)
