"""Per-key success probabilities of explicit telegraphing attacks.

Every attack here measures the ciphertext (in the computational basis, or with
a caller-supplied POVM) and post-processes the outcome with knowledge of the
key. Success probabilities are computed analytically from the outcome
distribution; only the key is random. Functions taking ``key`` also accept a
stack of keys with shape ``(batch, d, d)`` and then return one value per key.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError, UnsupportedAttackError
from .formulas import majority_exact_value
from .qecm import HaarScheme

# measurement values closer than this count as a tie
TIE_TOL = 1e-12
POVM_TOL = 1e-9

ATTACK_KINDS = ("bit-single", "bit-majority", "multi-argmax", "distinguish", "generic-povm")


def _keys(scheme: HaarScheme, key) -> np.ndarray:
    key = np.asarray(key, dtype=complex)
    if key.shape[-2:] != (scheme.d, scheme.d):
        raise ParameterError(f"key must be {scheme.d}x{scheme.d}, got {key.shape[-2:]}")
    return key


def block_weights(scheme: HaarScheme, key) -> np.ndarray:
    """``W[..., i, m] = <i| U Pi_m U^dagger |i>``, the row weight of U on block m."""
    key = _keys(scheme, key)
    w = np.abs(key) ** 2
    return w.reshape(*w.shape[:-1], scheme.n, scheme.r).sum(axis=-1)


def _first_argmax(values: np.ndarray) -> np.ndarray:
    """Index of the first entry within TIE_TOL of the row maximum."""
    top = values.max(axis=-1, keepdims=True)
    return np.argmax(values >= top - TIE_TOL, axis=-1)


@dataclass(frozen=True)
class DecodingSets:
    """Partition of basis outcomes ``[d]`` into guess sets.

    ``assignment[i]`` is the message guessed on outcome ``i``.
    """

    d: int
    assignment: np.ndarray

    def members(self, m: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == m)

    def as_dict(self) -> dict[int, int]:
        return {i: int(m) for i, m in enumerate(self.assignment)}


def _check_messages(scheme, messages) -> list[int]:
    messages = [int(m) for m in messages]
    if not messages or len(set(messages)) != len(messages):
        raise ParameterError("messages must be nonempty and distinct")
    for m in messages:
        scheme.check_message(m)
    return messages


def build_decoding_sets(scheme: HaarScheme, key, messages: Sequence[int] | None = None) -> DecodingSets:
    """Assign each outcome to the most likely candidate message.

    Ties go to the smallest message index: a message must strictly beat every
    smaller candidate and at least match every larger one.
    """
    messages = sorted(_check_messages(scheme, range(scheme.n) if messages is None else messages))
    key = _keys(scheme, key)
    if key.ndim != 2:
        raise ParameterError("build_decoding_sets takes a single key")
    w = block_weights(scheme, key)[:, messages]
    idx = _first_argmax(w)
    return DecodingSets(scheme.d, np.asarray(messages)[idx])


def single_copy_success(scheme: HaarScheme, key) -> np.ndarray | float:
    """Measure in the computational basis and guess the likeliest message.

    Equals ``(1/d) sum_i max_m <i|U Pi_m U^dagger|i>``.
    """
    w = block_weights(scheme, key)
    out = w.max(axis=-1).sum(axis=-1) / scheme.d
    return float(out) if out.ndim == 0 else out


def per_bit_success(scheme: HaarScheme, key) -> np.ndarray:
    """Single-copy success probability conditioned on each encoded bit.

    Returns shape ``(..., 2)``; the entries can differ for a fixed key.
    """
    if scheme.n != 2:
        raise UnsupportedAttackError(f"bit attacks need n = 2, got n = {scheme.n}")
    w = block_weights(scheme, key)
    guess = _first_argmax(w)
    hit = np.stack([guess == 0, guess == 1], axis=-1)
    return (w * hit).sum(axis=-2) / scheme.r


def majority_success(scheme: HaarScheme, key, t: int) -> np.ndarray | float:
    """Measure each of ``t`` copies, decode each, output the majority bit.

    Ties at even ``t`` are broken by a fair coin.
    """
    if scheme.n != 2:
        raise UnsupportedAttackError(f"majority attack needs n = 2, got n = {scheme.n}")
    if t < 1:
        raise ParameterError("t must be >= 1")
    p = per_bit_success(scheme, key)
    out = 0.5 * (majority_exact_value(p[..., 0], t) + majority_exact_value(p[..., 1], t))
    return float(out) if np.ndim(out) == 0 else out


def distinguish_success(scheme: HaarScheme, key, m0: int, m1: int) -> np.ndarray | float:
    """Distinguish ``m0`` from ``m1`` by a basis measurement; ties favour ``m0``."""
    scheme.check_message(m0)
    scheme.check_message(m1)
    if m0 == m1:
        raise ParameterError("m0 and m1 must differ")
    w = block_weights(scheme, key)
    out = np.maximum(w[..., m0], w[..., m1]).sum(axis=-1) / (2 * scheme.r)
    return float(out) if out.ndim == 0 else out


def check_povm(povm: Sequence[np.ndarray], d: int) -> list[np.ndarray]:
    povm = [np.asarray(p, dtype=complex) for p in povm]
    if not povm:
        raise ParameterError("POVM must have at least one element")
    for p in povm:
        if p.shape != (d, d):
            raise ParameterError(f"POVM element must be {d}x{d}, got {p.shape}")
        if np.max(np.abs(p - p.conj().T)) > POVM_TOL or np.linalg.eigvalsh(p).min() < -POVM_TOL:
            raise ParameterError("POVM element is not positive semidefinite")
    if np.linalg.norm(sum(povm) - np.eye(d)) > POVM_TOL:
        raise ParameterError("POVM elements do not sum to the identity")
    return povm


def povm_attack_success(scheme: HaarScheme, key, povm: Sequence[np.ndarray],
                        messages: Sequence[int] | None = None) -> float:
    """Measure with a fixed POVM; the key-aware receiver outputs the likeliest message.

    Value ``(1/N) sum_x max_m Tr[P_x U sigma_m U^dagger]`` over the ``N``
    candidate messages.
    """
    messages = _check_messages(scheme, range(scheme.n) if messages is None else messages)
    key = _keys(scheme, key)
    if key.ndim != 2:
        raise ParameterError("povm_attack_success takes a single key")
    povm = check_povm(povm, scheme.d)
    total = 0.0
    for p in povm:
        diag = np.real(np.einsum("ji,jk,ki->i", key.conj(), p, key))
        per_msg = diag.reshape(scheme.n, scheme.r).sum(axis=1)[messages] / scheme.r
        total += per_msg.max()
    return total / len(messages)


def computational_povm(d: int) -> list[np.ndarray]:
    out = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        out.append(e)
    return out


@dataclass(frozen=True)
class AttackSpec:
    """Which attack to run against which scheme.

    ``t`` is used by ``bit-majority``; ``m0``/``m1`` by ``distinguish``;
    ``povm`` and ``messages`` by ``generic-povm``.
    """

    kind: str
    scheme: HaarScheme
    t: int = 1
    m0: int = 0
    m1: int = 1
    povm: tuple | None = field(default=None, compare=False)
    messages: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ParameterError(f"unknown attack kind {self.kind!r}; expected one of {ATTACK_KINDS}")
        if self.kind in ("bit-single", "bit-majority") and self.scheme.n != 2:
            raise UnsupportedAttackError(f"{self.kind} needs n = 2, got n = {self.scheme.n}")
        if self.kind == "bit-majority" and self.t < 1:
            raise ParameterError("t must be >= 1 for the majority attack")
        if self.kind == "distinguish":
            self.scheme.check_message(self.m0)
            self.scheme.check_message(self.m1)
            if self.m0 == self.m1:
                raise ParameterError("m0 and m1 must differ")
        if self.kind == "generic-povm":
            if self.povm is None:
                raise ParameterError("generic-povm needs a POVM")
            object.__setattr__(self, "povm", tuple(check_povm(self.povm, self.scheme.d)))

    @property
    def n_candidates(self) -> int:
        if self.kind == "distinguish":
            return 2
        if self.kind == "generic-povm" and self.messages is not None:
            return len(self.messages)
        return self.scheme.n

    def evaluate(self, keys: np.ndarray) -> np.ndarray:
        """Per-key success probability for a stack of keys ``(batch, d, d)``."""
        keys = np.asarray(keys, dtype=complex)
        s = self.scheme
        if self.kind in ("bit-single", "multi-argmax"):
            return np.atleast_1d(single_copy_success(s, keys))
        if self.kind == "bit-majority":
            return np.atleast_1d(majority_success(s, keys, self.t))
        if self.kind == "distinguish":
            return np.atleast_1d(distinguish_success(s, keys, self.m0, self.m1))
        return np.array([povm_attack_success(s, k, self.povm, self.messages) for k in keys])

    def describe(self) -> str:
        s = self.scheme
        base = f"{self.kind}(r={s.r},n={s.n}"
        if self.kind == "bit-majority":
            base += f",t={self.t}"
        elif self.kind == "distinguish":
            base += f",m0={self.m0},m1={self.m1}"
        elif self.kind == "generic-povm":
            base += f",outcomes={len(self.povm)}"
        return base + ")"
