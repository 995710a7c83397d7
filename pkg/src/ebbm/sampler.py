"""Annealed heat-bath sampling of Boltzmann machine configurations.

Each sample is the end state of an independent chain annealed through an
inverse-temperature ladder beta = 0 -> 1 (step 0.03 by default), one full
sequential heat-bath sweep per ladder rung.  Chains draw all their uniforms
from a per-chain stream seeded by (master_seed, chain index), so datasets are
bit-identical regardless of how chains are scheduled across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .model import BoltzmannMachine, as_spins, exponent
from .moments import Dataset


@dataclass(frozen=True)
class AnnealSchedule:
    betas: np.ndarray
    delta_beta: float

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=np.float64)
        if b[0] != 0.0 or b[-1] != 1.0:
            raise ValueError("schedule must start at beta=0 and end at beta=1")
        d = np.diff(b)
        if np.any(d <= 0) or np.any(d > self.delta_beta + 1e-12):
            raise ValueError("betas must increase in steps of at most delta_beta")
        object.__setattr__(self, "betas", b)

    @property
    def stages(self) -> int:
        """Number of transitions (sweep stages) after the beta=0 init."""
        return len(self.betas) - 1


@dataclass(frozen=True)
class SamplerConfig:
    delta_beta: float = 0.03
    sweeps_per_beta: int = 1
    track_weights: bool = False

    def __post_init__(self):
        if not (0.0 < self.delta_beta <= 1.0):
            raise ValueError(f"delta_beta must be in (0, 1], got {self.delta_beta}")
        if self.sweeps_per_beta < 1:
            raise ValueError("sweeps_per_beta must be >= 1")


def make_schedule(delta_beta: float) -> AnnealSchedule:
    """Ladder beta_t = min(t * delta_beta, 1), ending exactly at 1."""
    if delta_beta <= 0:
        raise ValueError(f"delta_beta must be positive, got {delta_beta}")
    n_steps = int(np.ceil(1.0 / delta_beta - 1e-12))
    betas = np.minimum(np.arange(n_steps + 1) * delta_beta, 1.0)
    betas[-1] = 1.0
    return AnnealSchedule(betas=betas, delta_beta=delta_beta)


@njit(cache=True)
def _sweep_stage(jmat, h, beta, sweeps, u, s):  # pragma: no cover - jit
    """In-place sequential heat-bath sweeps on one chain at fixed beta.

    ``u`` holds sweeps*n uniforms consumed site-major; each site is resampled
    from P(S_i=+1) = 1/(1+exp(-2 beta (h + sum_j J_ij S_j))) using the current
    neighbor values.
    """
    n = jmat.shape[0]
    k = 0
    for _ in range(sweeps):
        for i in range(n):
            f = h
            for j in range(n):
                f += jmat[i, j] * s[j]
            p = 1.0 / (1.0 + np.exp(-2.0 * beta * f))
            s[i] = 1.0 if u[k] < p else -1.0
            k += 1


@njit(cache=True)
def _run_chains(jmat, h, betas, sweeps, u, out):  # pragma: no cover - jit
    """Anneal every chain from a uniform beta=0 state to beta=1.

    ``u`` has one row per chain: n init uniforms followed by
    stages*sweeps*n sweep uniforms, in consumption order.
    """
    n = jmat.shape[0]
    for c in range(u.shape[0]):
        s = out[c]
        for i in range(n):
            s[i] = 1.0 if u[c, i] < 0.5 else -1.0
        k = n
        block = sweeps * n
        for t in range(1, betas.shape[0]):
            _sweep_stage(jmat, h, betas[t], sweeps, u[c, k : k + block], s)
            k += block


def gibbs_sweep(machine: BoltzmannMachine, beta: float, state, rng) -> np.ndarray:
    """One sequential heat-bath sweep; returns the new configuration."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    s = as_spins(state, machine.n).astype(np.float64)
    u = rng.random(machine.n)
    _sweep_stage(machine.j, machine.h, float(beta), 1, u, s)
    return s.astype(np.int8)


def _chain_uniform_count(n: int, schedule: AnnealSchedule, config: SamplerConfig) -> int:
    return n * (1 + schedule.stages * config.sweeps_per_beta)


def annealed_sample(
    machine: BoltzmannMachine,
    schedule: AnnealSchedule,
    config: SamplerConfig,
    rng,
) -> tuple[np.ndarray, float | None]:
    """Run one annealed chain; returns (final state, log-weight or None).

    The log-weight, when tracked, is the annealed-importance-sampling
    accumulator sum_t (beta_{t+1} - beta_t) * exponent(state after stage t);
    exp of it averages to Z / 2^n over chains.
    """
    n = machine.n
    u = rng.random(_chain_uniform_count(n, schedule, config))
    s = np.where(u[:n] < 0.5, 1.0, -1.0)
    logw = 0.0 if config.track_weights else None
    k = n
    block = config.sweeps_per_beta * n
    betas = schedule.betas
    for t in range(1, len(betas)):
        if config.track_weights:
            logw += (betas[t] - betas[t - 1]) * exponent(machine, np.sign(s))
        _sweep_stage(machine.j, machine.h, betas[t], config.sweeps_per_beta, u[k : k + block], s)
        k += block
    return s.astype(np.int8), logw


def _chain_seed(master_seed, chain_index: int) -> np.random.SeedSequence:
    """Fixed chain-seed mixing: SeedSequence(master, spawn_key=(..., chain)).

    ``master_seed`` may be an int or a SeedSequence (whose spawn key is
    extended), so harness-level seed derivation composes with chain seeding.
    """
    if isinstance(master_seed, np.random.SeedSequence):
        return np.random.SeedSequence(
            entropy=master_seed.entropy, spawn_key=tuple(master_seed.spawn_key) + (chain_index,)
        )
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(chain_index,))


def generate_dataset(
    machine: BoltzmannMachine,
    N: int,
    config: SamplerConfig,
    master_seed,
    workers: int = 1,
) -> Dataset:
    """Draw N independent annealed samples.

    Chains are processed in ``workers`` contiguous blocks; every chain owns a
    pre-drawn uniform stream, so the output is identical for any block count.
    """
    if N < 1:
        raise ValueError(f"need N >= 1 samples, got {N}")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    schedule = make_schedule(config.delta_beta)
    n = machine.n
    per_chain = _chain_uniform_count(n, schedule, config)
    out = np.empty((N, n), dtype=np.float64)
    bounds = np.linspace(0, N, workers + 1).astype(int)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi == lo:
            continue
        u = np.empty((hi - lo, per_chain))
        for c in range(lo, hi):
            u[c - lo] = np.random.default_rng(_chain_seed(master_seed, c)).random(per_chain)
        _run_chains(machine.j, machine.h, schedule.betas, config.sweeps_per_beta, u, out[lo:hi])
    return Dataset(samples=out.astype(np.int8))
