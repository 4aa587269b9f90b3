"""Haar-measure encryption of ``n`` classical messages with rank ``r`` ciphertexts.

Message ``m`` is encoded by the projector onto the contiguous basis block
``[r*m, r*(m+1))`` and encrypted by conjugating with a Haar-random key.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .linalg import RngStream, check_unitary, conjugate, diag_probabilities, sample_haar_unitary


@dataclass(frozen=True)
class HaarScheme:
    r: int
    n: int

    def __post_init__(self):
        if not isinstance(self.r, (int, np.integer)) or self.r < 1:
            raise ParameterError(f"rank r must be >= 1, got {self.r!r}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise ParameterError(f"message count n must be >= 2, got {self.n!r}")

    @property
    def d(self) -> int:
        return self.r * self.n

    def block(self, m: int) -> slice:
        self.check_message(m)
        return slice(self.r * m, self.r * (m + 1))

    def check_message(self, m: int) -> None:
        if not isinstance(m, (int, np.integer)) or not 0 <= m < self.n:
            raise ParameterError(f"message index must be in [0, {self.n}), got {m!r}")


def projector(scheme: HaarScheme, m: int) -> np.ndarray:
    """Unnormalized ciphertext ``Pi_m`` (diagonal 0/1, trace ``r``)."""
    p = np.zeros((scheme.d, scheme.d), dtype=complex)
    b = scheme.block(m)
    p[b, b] = np.eye(scheme.r)
    return p


def _check_key(scheme, key):
    key = np.asarray(key, dtype=complex)
    if key.shape != (scheme.d, scheme.d):
        raise ParameterError(f"key must be {scheme.d}x{scheme.d}, got {key.shape}")
    return key


def encrypt(scheme: HaarScheme, m: int, key: np.ndarray) -> np.ndarray:
    """Ciphertext ``U (Pi_m / r) U^dagger``."""
    key = _check_key(scheme, key)
    b = scheme.block(m)
    cols = key[:, b]
    return cols @ cols.conj().T / scheme.r


def decrypt_distribution(scheme: HaarScheme, ct: np.ndarray, key: np.ndarray) -> np.ndarray:
    """Distribution of the decoded message: undo the key, then measure the block."""
    key = _check_key(scheme, key)
    ct = np.asarray(ct, dtype=complex)
    if ct.shape != (scheme.d, scheme.d):
        raise ParameterError(f"ciphertext must be {scheme.d}x{scheme.d}, got {ct.shape}")
    p = diag_probabilities(conjugate(key.conj().T, ct))
    return p.reshape(scheme.n, scheme.r).sum(axis=1)


def correctness_check(scheme: HaarScheme, samples: int, seed: int) -> float:
    """Largest ``|1 - P(correct decryption)|`` over random keys and messages."""
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    worst = 0.0
    for i in range(samples):
        gen = RngStream(seed, i).generator()
        key = sample_haar_unitary(scheme.d, gen)
        m = int(gen.integers(scheme.n))
        p = decrypt_distribution(scheme, encrypt(scheme, m, key), check_unitary(key))
        worst = max(worst, abs(1.0 - p[m]))
    return worst
