"""Dense complex linear algebra, Haar sampling and tensor permutation operators.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Most functions
accept a leading batch dimension so that the estimator can push a whole chunk
of keys through one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapacityError, ParameterError

UNITARY_TOL = 1e-10
DET_TOL = 1e-8
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
EIG_TOL = 1e-9
NEG_PROB_TOL = 1e-12
# largest d**k for which a dense permutation operator is built
MAX_TENSOR_DIM = 65536

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream addressed by ``(master_seed, stream_index)``.

    Backed by Philox: the master seed is the key and the stream index occupies
    one word of the 256-bit counter, so distinct indices never overlap for any
    realistic number of draws.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= v <= _MASK64:
                raise ParameterError(f"{name} must be a 64-bit unsigned integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        bitgen = np.random.Philox(key=int(self.master_seed), counter=[0, 0, int(self.stream_index), 0])
        return np.random.Generator(bitgen)

    def child(self, index: int) -> "RngStream":
        return RngStream(self.master_seed, index)


def _check_dim(dim):
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise ParameterError(f"dimension must be a positive integer, got {dim!r}")


def sample_ginibre(dim: int, rng: RngStream | np.random.Generator) -> np.ndarray:
    """``dim x dim`` matrix of i.i.d. standard complex Gaussians (E|z|^2 = 1)."""
    _check_dim(dim)
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    z = gen.standard_normal((dim, dim, 2))
    return (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0)


def haar_from_ginibre(z: np.ndarray) -> np.ndarray:
    """QR of a (batch of) Ginibre matrices with the diagonal phase fix.

    Plain QR is not Haar distributed; multiplying column j of Q by
    R_jj/|R_jj| makes the factorization unique and the result exactly Haar.
    """
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return q * phases[..., None, :]


def sample_haar_unitary(dim: int, rng: RngStream | np.random.Generator) -> np.ndarray:
    """Haar-random element of U(dim)."""
    return haar_from_ginibre(sample_ginibre(dim, rng))


def sample_haar_batch(dim: int, streams: Sequence[RngStream]) -> np.ndarray:
    """One Haar unitary per stream, stacked along axis 0."""
    _check_dim(dim)
    z = np.empty((len(streams), dim, dim), dtype=complex)
    for i, s in enumerate(streams):
        z[i] = sample_ginibre(dim, s)
    return haar_from_ginibre(z)


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    dim = u.shape[0]
    err = np.linalg.norm(u.conj().T @ u - np.eye(dim))
    return bool(err <= tol * dim and abs(abs(np.linalg.det(u)) - 1.0) <= DET_TOL)


def check_unitary(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u):
        raise ParameterError("matrix is not unitary within tolerance")
    return u


def check_density_matrix(rho: np.ndarray) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, positive semidefinite."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ParameterError(f"density matrix must be square, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ParameterError("density matrix has non-finite entries")
    if np.max(np.abs(rho - rho.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise ParameterError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > TRACE_TOL:
        raise ParameterError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(rho).min() < -EIG_TOL:
        raise ParameterError("density matrix has a negative eigenvalue")
    return rho


def conjugate(u: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Return ``U X U^dagger``."""
    u = np.asarray(u)
    x = np.asarray(x)
    if u.shape[-1] != x.shape[-2] or x.shape[-1] != x.shape[-2] or u.shape[-2] != u.shape[-1]:
        raise ParameterError(f"dimension mismatch: U{u.shape} vs X{x.shape}")
    return u @ x @ np.swapaxes(u.conj(), -1, -2)


def diag_probabilities(rho: np.ndarray) -> np.ndarray:
    """Computational-basis outcome distribution ``p_i = <i|rho|i>``.

    Rounding negatives down to -1e-12 are clamped to zero and the vector is
    renormalized; anything more negative means the state is invalid.
    """
    p = np.real(np.diagonal(np.asarray(rho), axis1=-2, axis2=-1)).copy()
    if np.any(p < -NEG_PROB_TOL):
        raise ParameterError("diagonal has a negative probability beyond rounding")
    p = np.clip(p, 0.0, None)
    total = p.sum(axis=-1, keepdims=True)
    if np.any(total <= 0):
        raise ParameterError("diagonal has zero total weight")
    return p / total


def _check_perm(perm) -> tuple[int, ...]:
    perm = tuple(int(p) for p in perm)
    if len(perm) < 1 or sorted(perm) != list(range(len(perm))):
        raise ParameterError(f"not a permutation of range({len(perm)}): {perm}")
    return perm


def permutation_index_map(perm: Sequence[int], d: int) -> np.ndarray:
    """Flat index map of ``V_d(perm)``: column ``i`` has its 1 in row ``out[i]``.

    ``perm[x]`` is the image of tensor slot ``x``; the content of slot ``x``
    moves to slot ``perm[x]``, i.e. ``V|i_1..i_k> = |i_{perm^-1(1)}..i_{perm^-1(k)}>``.
    """
    perm = _check_perm(perm)
    _check_dim(d)
    k = len(perm)
    if d**k > MAX_TENSOR_DIM:
        raise CapacityError(f"d**k = {d}**{k} exceeds {MAX_TENSOR_DIM}")
    digits = np.indices((d,) * k).reshape(k, -1)
    inv = np.argsort(perm)
    out_digits = digits[inv]
    return np.ravel_multi_index(tuple(out_digits), (d,) * k)


def permutation_operator(perm: Sequence[int], d: int) -> np.ndarray:
    """Dense 0/1 matrix of the tensor-factor permutation ``V_d(perm)``."""
    out = permutation_index_map(perm, d)
    dim = out.size
    v = np.zeros((dim, dim), dtype=complex)
    v[out, np.arange(dim)] = 1.0
    return v


def compose(p: Sequence[int], q: Sequence[int]) -> tuple[int, ...]:
    """``(p q)(x) = p(q(x))``, matching ``V(p) V(q) = V(p q)``."""
    return tuple(p[x] for x in q)


def inverse(p: Sequence[int]) -> tuple[int, ...]:
    return tuple(int(i) for i in np.argsort(p))


def cycle_count(p: Sequence[int]) -> int:
    return len(cycle_type(p))


def cycle_type(p: Sequence[int]) -> tuple[int, ...]:
    """Cycle lengths of ``p`` in decreasing order."""
    seen = [False] * len(p)
    lengths = []
    for start in range(len(p)):
        if seen[start]:
            continue
        n = 0
        x = start
        while not seen[x]:
            seen[x] = True
            x = p[x]
            n += 1
        lengths.append(n)
    return tuple(sorted(lengths, reverse=True))


def kron_power(x: np.ndarray, k: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for _ in range(k):
        out = np.kron(out, x)
    return out


def random_psd(dim: int, rng: np.random.Generator, max_eig: float | None = None) -> np.ndarray:
    """Random PSD matrix with Haar eigenbasis and uniform eigenvalues.

    With ``max_eig`` the eigenvalues are drawn from ``[0, max_eig]`` so that
    ``0 <= P <= max_eig * I``; otherwise the result is a normalized Wishart
    matrix of full rank.
    """
    if max_eig is None:
        g = sample_ginibre(dim, rng)
        p = g @ g.conj().T
        return p / np.trace(p).real
    u = sample_haar_unitary(dim, rng)
    vals = rng.uniform(0.0, max_eig, size=dim)
    return (u * vals) @ u.conj().T


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = sample_ginibre(dim, rng)
    return (g + g.conj().T) / 2
