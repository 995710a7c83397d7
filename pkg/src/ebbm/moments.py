"""Sufficient statistics of a spin dataset.

Everything the closed-form estimator needs is a handful of sample moments:
per-site means d_i, per-pair means d_ij, the magnetization M, the first two
moments C_1, C_2 of the pair means, and the variance Omega of the per-site
average correlations omega_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """N observed configurations of n spins, entries in {-1, +1}."""

    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 2:
            raise ValueError(f"samples must be 2-D (N, n), got shape {s.shape}")
        if s.shape[1] < 2:
            raise ValueError(f"need n >= 2 spins, got {s.shape[1]}")
        if s.shape[0] < 1:
            raise ValueError("need at least one sample")
        if not np.all(np.abs(s) == 1):
            raise ValueError("dataset entries must be exactly -1 or +1")
        object.__setattr__(self, "samples", s.astype(np.int8))

    @property
    def N(self) -> int:
        return self.samples.shape[0]

    @property
    def n(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class SufficientStats:
    n: int
    N: int
    M: float
    d_i: np.ndarray = field(repr=False)
    d_ij: np.ndarray = field(repr=False)  # full symmetric matrix, unit diagonal
    C1: float = 0.0
    C2: float = 0.0
    omega_i: np.ndarray = field(default=None, repr=False)
    Omega: float = 0.0
    max_abs_dij: float = 0.0

    def pair_upper(self) -> np.ndarray:
        return self.d_ij[np.triu_indices(self.n, k=1)]


def compute_stats(dataset: Dataset) -> SufficientStats:
    """One O(N n^2) pass over the data (the pair block is a Gram matrix).

    Scalar reductions use fsum, so the derived statistics are exactly
    invariant under spin relabeling and sample reordering.
    """
    s = dataset.samples.astype(np.float64)
    N, n = s.shape
    d_i = s.sum(axis=0) / N
    d_ij = (s.T @ s) / N
    np.fill_diagonal(d_ij, 1.0)
    M = math.fsum(d_i) / n
    iu = np.triu_indices(n, k=1)
    pairs = d_ij[iu]
    C1 = math.fsum(pairs) / pairs.size
    C2 = math.fsum(pairs**2) / pairs.size
    omega_i = np.array([math.fsum(d_ij[i]) - 1.0 for i in range(n)]) / (n - 1) - C1
    Omega = math.fsum(omega_i**2) / n
    return SufficientStats(
        n=n,
        N=N,
        M=M,
        d_i=d_i,
        d_ij=d_ij,
        C1=C1,
        C2=C2,
        omega_i=omega_i,
        Omega=Omega,
        max_abs_dij=float(np.abs(pairs).max()),
    )


def stats_from_values(n: int, N: int, M: float, C1: float, C2: float, Omega: float) -> SufficientStats:
    """Scalar-only stats container for coefficient-level computations where
    the per-site arrays are not needed."""
    return SufficientStats(
        n=n, N=N, M=M, d_i=np.empty(0), d_ij=np.empty((0, 0)),
        C1=C1, C2=C2, omega_i=np.empty(0), Omega=Omega, max_abs_dij=1.0,
    )
