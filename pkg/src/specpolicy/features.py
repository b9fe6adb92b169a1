"""Core value types: feature matrices, strategy ids, per-sample seed derivation.

A feature matrix is a plain 2-D numpy array of shape (tau, nu): tau frames
by nu channels, row-major by frame. Files store float32; in memory the
kernels accept any float dtype and preserve it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import SpecPolicyError

_MASK64 = (1 << 64) - 1

# splitmix64 mixing constants; fixed so seeds are bit-reproducible anywhere
_GAMMA_EPOCH = 0x9E3779B97F4A7C15
_GAMMA_INDEX = 0xBF58476D1CE4E5B9
_MIX_1 = 0xBF58476D1CE4E5B9
_MIX_2 = 0x94D049BB133111EB


class Strategy(IntEnum):
    """The three augmentation strategies, in stable ordinal order."""

    TIME_WARP = 0
    FREQ_MASK = 1
    TIME_MASK = 2


N_STRATEGIES = 3


def validate_matrix(m: np.ndarray) -> np.ndarray:
    """Check feature-matrix invariants; returns m unchanged if valid.

    Raises SpecPolicyError with code EMPTY, DIMENSION_MISMATCH or NON_FINITE.
    """
    m = np.asarray(m)
    if m.ndim != 2:
        raise SpecPolicyError("DIMENSION_MISMATCH", f"expected 2-D array, got ndim={m.ndim}")
    tau, nu = m.shape
    if tau < 1 or nu < 1:
        raise SpecPolicyError("EMPTY", f"degenerate shape ({tau}, {nu})")
    if not np.issubdtype(m.dtype, np.floating):
        raise SpecPolicyError("NON_FINITE", f"non-float dtype {m.dtype}")
    if not np.all(np.isfinite(m)):
        raise SpecPolicyError("NON_FINITE", "matrix contains NaN or Inf")
    return m


def matrix_from_values(tau: int, nu: int, values) -> np.ndarray:
    """Build a (tau, nu) matrix from a flat row-major value sequence."""
    if tau < 1 or nu < 1:
        raise SpecPolicyError("EMPTY", f"degenerate shape ({tau}, {nu})")
    flat = np.asarray(values, dtype=np.float64)
    if flat.ndim != 1 or flat.size != tau * nu:
        raise SpecPolicyError(
            "DIMENSION_MISMATCH", f"expected {tau * nu} values, got {flat.size}"
        )
    return validate_matrix(flat.reshape(tau, nu))


def _splitmix64_finalize(z: int) -> int:
    z &= _MASK64
    z ^= z >> 30
    z = (z * _MIX_1) & _MASK64
    z ^= z >> 27
    z = (z * _MIX_2) & _MASK64
    z ^= z >> 31
    return z


def derive_sample_seed(master: int, epoch: int, index: int) -> int:
    """Deterministic 64-bit per-sample seed.

    splitmix64 finalizer of master XOR epoch*gamma1 XOR index*gamma2; the
    exact steps are a contract so independent implementations agree bit
    for bit.
    """
    if epoch < 0 or index < 0:
        raise SpecPolicyError("DOMAIN", "epoch and index must be non-negative")
    z = (master & _MASK64) ^ ((epoch * _GAMMA_EPOCH) & _MASK64) ^ ((index * _GAMMA_INDEX) & _MASK64)
    return _splitmix64_finalize(z)


@dataclass(frozen=True)
class SampleSeed:
    """A (master, epoch, sample) triple plus its derived 64-bit seed."""

    master_seed: int
    epoch: int
    sample_index: int

    @property
    def derived(self) -> int:
        return derive_sample_seed(self.master_seed, self.epoch, self.sample_index)

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.derived)
