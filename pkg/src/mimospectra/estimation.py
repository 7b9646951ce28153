"""Blind subspace channel estimation and the pilot-based baseline.

The subspace pipeline: SVD of the received block, projection onto the K
dominant left singular vectors, zero-forcing on the shared pilot prefix to
resolve the remaining K x K ambiguity, then matched-filter QPSK detection on
the projected data.  The baseline estimates the full antenna-domain channel
by least squares on the same pilots and matched-filters in antenna space.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import dft

from .errors import ConfigError

QPSK_SCALE = 1.0 / np.sqrt(2.0)


@dataclass
class SubspaceModel:
    basis: np.ndarray       # M x K, orthonormal columns
    projected: np.ndarray   # K x N
    estimate: np.ndarray    # K x K resolved subspace channel


@dataclass(frozen=True)
class PilotLayout:
    """Shared pilot prefix plus per-cell data symbols.

    The pilot block has orthogonal rows with X_p X_p^H = K I and is reused by
    every cell (full pilot reuse); data symbols are unit-energy QPSK.
    """

    num_users: int
    block_length: int

    def __post_init__(self):
        if self.block_length <= self.num_users:
            raise ConfigError("block_length must exceed num_users to carry data")

    @property
    def num_data(self) -> int:
        return self.block_length - self.num_users

    def pilot_block(self) -> np.ndarray:
        return dft(self.num_users)

    def data_block(self, rng: np.random.Generator) -> np.ndarray:
        bits = rng.integers(0, 2, size=(self.num_users, 2 * self.num_data))
        return np.vstack([qpsk_map(row) for row in bits])

    def assemble(self, data: np.ndarray) -> np.ndarray:
        return np.concatenate([self.pilot_block(), data], axis=1)


def signal_subspace(y: np.ndarray, num_users: int) -> np.ndarray:
    """K dominant left singular vectors of the received block."""
    m, n = y.shape
    if num_users > min(m, n):
        raise ConfigError(f"num_users={num_users} exceeds min(M, N)={min(m, n)}")
    u, sv, _ = np.linalg.svd(y, full_matrices=False)
    if num_users < len(sv) and sv[num_users - 1] - sv[num_users] < 1e-12 * max(sv[0], 1e-300):
        warnings.warn("degenerate singular values at the subspace boundary; "
                      "signal subspace is ill-defined", stacklevel=2)
    return u[:, :num_users]


def subspace_zf_resolve(projected_pilot: np.ndarray, pilot_block: np.ndarray) -> np.ndarray:
    """Least-squares ambiguity resolution on the projected pilot block.

    Ghat = Yp_tilde X_p^H (X_p X_p^H)^{-1}; raises on a singular pilot block.
    """
    gram = pilot_block @ pilot_block.conj().T
    if np.linalg.cond(gram) > 1e12:
        raise ConfigError("pilot block is singular or near-singular")
    return projected_pilot @ pilot_block.conj().T @ np.linalg.inv(gram)


def qpsk_quantize(z: np.ndarray) -> np.ndarray:
    """Nearest QPSK symbol per entry; zero components resolve to +."""
    re = np.where(z.real >= 0, 1.0, -1.0)
    im = np.where(z.imag >= 0, 1.0, -1.0)
    return (re + 1j * im) * QPSK_SCALE


def mf_detect(projected_data: np.ndarray, estimate: np.ndarray) -> np.ndarray:
    """Matched-filter detection: quantize(Ghat^H Y_tilde_data)."""
    return qpsk_quantize(estimate.conj().T @ projected_data)


def estimate_subspace_channel(y: np.ndarray, pilot_block: np.ndarray,
                              num_users: int) -> SubspaceModel:
    """Full blind pipeline on one received block (pilot prefix first)."""
    basis = signal_subspace(y, num_users)
    projected = basis.conj().T @ y
    k = pilot_block.shape[1]
    estimate = subspace_zf_resolve(projected[:, :k], pilot_block)
    return SubspaceModel(basis=basis, projected=projected, estimate=estimate)


def pilot_based_estimate(y: np.ndarray, pilot_block: np.ndarray) -> np.ndarray:
    """Classical LS channel estimate from the pilot prefix (M x K)."""
    k = pilot_block.shape[1]
    gram = pilot_block @ pilot_block.conj().T
    if np.linalg.cond(gram) > 1e12:
        raise ConfigError("pilot block is singular or near-singular")
    return y[:, :k] @ pilot_block.conj().T @ np.linalg.inv(gram)


def pilot_based_detect(y: np.ndarray, pilot_block: np.ndarray) -> np.ndarray:
    """LS estimate then antenna-domain matched filtering of the data part."""
    h_hat = pilot_based_estimate(y, pilot_block)
    k = pilot_block.shape[1]
    return qpsk_quantize(h_hat.conj().T @ y[:, k:])


def qpsk_map(bits: np.ndarray) -> np.ndarray:
    """Gray-mapped unit-energy QPSK; bit pairs (b0, b1) -> real/imag signs."""
    bits = np.asarray(bits).ravel()
    if bits.size % 2:
        raise ConfigError("bit count must be even")
    b = bits.reshape(-1, 2)
    return ((1.0 - 2.0 * b[:, 0]) + 1j * (1.0 - 2.0 * b[:, 1])) * QPSK_SCALE


def qpsk_demap(symbols: np.ndarray) -> np.ndarray:
    """Exact inverse of qpsk_map on noiseless symbols; nearest-symbol decision
    otherwise."""
    symbols = np.asarray(symbols).ravel()
    out = np.empty((symbols.size, 2), dtype=np.int64)
    out[:, 0] = symbols.real < 0
    out[:, 1] = symbols.imag < 0
    return out.ravel()


def count_bit_errors(decisions: np.ndarray, reference: np.ndarray) -> int:
    """Bit errors between two QPSK symbol arrays of equal shape."""
    if decisions.shape != reference.shape:
        raise ConfigError("shape mismatch between decisions and reference")
    re_err = np.sign(decisions.real) != np.sign(reference.real)
    im_err = np.sign(decisions.imag) != np.sign(reference.imag)
    return int(re_err.sum() + im_err.sum())
