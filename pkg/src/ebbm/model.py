"""Fully-connected Boltzmann machine over +/-1 spins, its priors, and exact
small-system evaluation.

A machine is parametrized by a uniform external field ``h`` and couplings
``J_ij`` over unordered pairs i < j.  Couplings are stored as a dense symmetric
matrix with zero diagonal so that local fields are plain matrix-vector
products.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import CapacityError

LOG_PARTITION_MAX_N = 20
EXACT_MOMENTS_MAX_N = 16
_ENUM_CHUNK_BITS = 16


class PriorFamily(Enum):
    GAUSSIAN = "gauss"
    LAPLACE = "laplace"


@dataclass(frozen=True)
class PriorSpec:
    """Coupling prior (Gaussian or Laplace, Var[J_ij] = gamma/n) plus the
    point-mass field value H."""

    family: PriorFamily = PriorFamily.GAUSSIAN
    gamma: float = 0.0
    H: float = 0.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")


@dataclass(frozen=True)
class BoltzmannMachine:
    """Field h and symmetric coupling matrix over n >= 2 spins."""

    n: int
    h: float
    j: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need n >= 2 spins, got {self.n}")
        j = np.asarray(self.j, dtype=np.float64)
        if j.shape != (self.n, self.n):
            raise ValueError(f"coupling matrix shape {j.shape} != ({self.n}, {self.n})")
        if not np.allclose(j, j.T) or np.any(np.diag(j) != 0.0):
            raise ValueError("coupling matrix must be symmetric with zero diagonal")
        if not (np.isfinite(self.h) and np.all(np.isfinite(j))):
            raise ValueError("parameters must be finite")
        object.__setattr__(self, "j", j)

    @classmethod
    def from_upper(cls, n: int, h: float, upper: np.ndarray) -> "BoltzmannMachine":
        """Build from the condensed upper-triangle coupling vector (row-major,
        n(n-1)/2 entries)."""
        upper = np.asarray(upper, dtype=np.float64)
        npairs = n * (n - 1) // 2
        if upper.shape != (npairs,):
            raise ValueError(f"expected {npairs} couplings, got shape {upper.shape}")
        j = np.zeros((n, n))
        iu = np.triu_indices(n, k=1)
        j[iu] = upper
        j += j.T
        return cls(n=n, h=h, j=j)

    def upper(self) -> np.ndarray:
        """Condensed upper-triangle coupling vector."""
        return self.j[np.triu_indices(self.n, k=1)]


def as_spins(s, n: int | None = None) -> np.ndarray:
    """Validate a +/-1 spin configuration and return it as an int8 array."""
    s = np.asarray(s)
    if s.ndim != 1:
        raise ValueError(f"spin configuration must be 1-D, got shape {s.shape}")
    if not np.all(np.abs(s) == 1):
        raise ValueError("spin entries must be exactly -1 or +1")
    if n is not None and s.shape[0] != n:
        raise ValueError(f"configuration length {s.shape[0]} != n = {n}")
    return s.astype(np.int8)


def exponent(machine: BoltzmannMachine, s) -> float:
    """Argument of the exponential in the Boltzmann distribution:
    h * sum_i s_i + sum_{i<j} J_ij s_i s_j."""
    s = as_spins(s, machine.n).astype(np.float64)
    return float(machine.h * s.sum() + 0.5 * s @ machine.j @ s)


def _state_chunk(n: int, start: int, stop: int) -> np.ndarray:
    """Rows ``start:stop`` of the canonical 2^n state table, as +/-1 floats.

    Bit b of the row index gives the sign of spin b, so enumeration order is
    fixed and independent of chunking.
    """
    idx = np.arange(start, stop, dtype=np.uint64)[:, None]
    bits = (idx >> np.arange(n, dtype=np.uint64)) & 1
    return bits.astype(np.float64) * 2.0 - 1.0


def _chunk_exponents(machine: BoltzmannMachine, states: np.ndarray) -> np.ndarray:
    return machine.h * states.sum(axis=1) + 0.5 * np.einsum(
        "ki,ij,kj->k", states, machine.j, states
    )


def log_partition(machine: BoltzmannMachine) -> float:
    """ln Z by exact enumeration over all 2^n states (n <= 20), accumulated
    with a running max shift."""
    n = machine.n
    if n > LOG_PARTITION_MAX_N:
        raise CapacityError(f"exact log_partition limited to n <= {LOG_PARTITION_MAX_N}, got {n}")
    chunk = 1 << min(n, _ENUM_CHUNK_BITS)
    total = 1 << n
    running_max = -np.inf
    running_sum = 0.0
    for start in range(0, total, chunk):
        e = _chunk_exponents(machine, _state_chunk(n, start, min(start + chunk, total)))
        m = float(e.max())
        if m > running_max:
            running_sum *= np.exp(running_max - m)
            running_max = m
        running_sum += float(np.exp(e - running_max).sum())
    return running_max + float(np.log(running_sum))


def exact_moments(machine: BoltzmannMachine) -> tuple[np.ndarray, np.ndarray]:
    """Exact site means <S_i> and pair means <S_i S_j> (full symmetric matrix
    with unit diagonal) by enumeration; n <= 16."""
    n = machine.n
    if n > EXACT_MOMENTS_MAX_N:
        raise CapacityError(f"exact_moments limited to n <= {EXACT_MOMENTS_MAX_N}, got {n}")
    states = _state_chunk(n, 0, 1 << n)
    e = _chunk_exponents(machine, states)
    p = np.exp(e - e.max())
    p /= p.sum()
    site = states.T @ p
    pair = (states * p[:, None]).T @ states
    return site, pair


def sample_parameters(prior: PriorSpec, n: int, seed) -> BoltzmannMachine:
    """Draw a machine from the prior: h = H exactly, couplings i.i.d. with
    Var[J_ij] = gamma/n.  Deterministic given the seed."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    npairs = n * (n - 1) // 2
    if prior.gamma == 0.0:
        upper = np.zeros(npairs)
    elif prior.family is PriorFamily.GAUSSIAN:
        upper = rng.normal(0.0, np.sqrt(prior.gamma / n), size=npairs)
    else:
        # two-sided exponential with rate sqrt(2n/gamma) via inverse CDF
        rate = np.sqrt(2.0 * n / prior.gamma)
        u = rng.random(npairs)
        v = u - 0.5
        upper = -np.sign(v) * np.log1p(-2.0 * np.abs(v)) / rate
    return BoltzmannMachine.from_upper(n, prior.H, upper)


def log_prior_density(prior: PriorSpec, machine: BoltzmannMachine) -> float:
    """Sum of per-pair log prior densities of the couplings.  The point-mass
    factor on h is excluded; h must equal H."""
    if prior.gamma <= 0:
        raise ValueError("coupling prior density needs gamma > 0")
    if machine.h != prior.H:
        raise ValueError(f"machine.h = {machine.h} does not match prior H = {prior.H}")
    n = machine.n
    upper = machine.upper()
    npairs = upper.size
    if prior.family is PriorFamily.GAUSSIAN:
        return float(
            0.5 * npairs * np.log(n / (2.0 * np.pi * prior.gamma))
            - n * (upper**2).sum() / (2.0 * prior.gamma)
        )
    rate = np.sqrt(2.0 * n / prior.gamma)
    return float(0.5 * npairs * np.log(n / (2.0 * prior.gamma)) - rate * np.abs(upper).sum())
