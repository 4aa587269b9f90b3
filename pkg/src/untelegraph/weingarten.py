"""Exact Haar moments through the Weingarten function, and checks of the moment lemmas.

The k-th moment operator ``Phi_k(X) = E[U^{(x)k} X U^{dagger (x)k}]`` lies in
the span of the permutation operators ``V_d(pi)``. Its coefficients are
``c = Wg . t`` with ``t_sigma = Tr[V(sigma)^{-1} X]`` and ``Wg`` the inverse
of the Gram matrix ``d^{#cycles(pi^-1 sigma)}``. Permutation operators are
never materialized in the inner loops: each is stored as a flat index map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations

import numpy as np

from .errors import CapacityError, ParameterError, PreconditionError
from .linalg import (
    MAX_TENSOR_DIM,
    RngStream,
    compose,
    cycle_count,
    cycle_type,
    haar_from_ginibre,
    inverse,
    kron_power,
    permutation_index_map,
    random_psd,
)

MAX_ORDER = 6
# Choi matrices of maps on B(C^{d^k}) are d^{2k} square
MAX_CHOI_DIM = 4096
BRACKET_TOL = 1e-8
DEVIATION_SLACK = 1e-9
BOUND_CONSTANT = 7


@dataclass(frozen=True, eq=False)
class WeingartenTable:
    k: int
    d: int
    permutations: tuple[tuple[int, ...], ...]
    gram: np.ndarray
    wg: np.ndarray
    index_maps: np.ndarray = field(repr=False)

    def wg_value(self, perm) -> float:
        """``Wg(perm, d)``; row 0 of ``wg`` belongs to the identity."""
        return float(self.wg[0, self.permutations.index(tuple(perm))])

    def class_values(self) -> dict[tuple[int, ...], float]:
        out = {}
        for j, p in enumerate(self.permutations):
            out.setdefault(cycle_type(p), float(self.wg[0, j]))
        return out

    def trace_functionals(self, x: np.ndarray) -> np.ndarray:
        """``t[j] = Tr[V(perm_j)^{-1} X]`` for every permutation."""
        cols = np.arange(self.index_maps.shape[1])
        return np.array([x[m, cols].sum() for m in self.index_maps])

    def pairings(self, p: np.ndarray) -> np.ndarray:
        """``Tr[P V(perm_j)]`` for every permutation."""
        cols = np.arange(self.index_maps.shape[1])
        return np.array([p[cols, m].sum() for m in self.index_maps])

    def operator(self, coeffs: np.ndarray) -> np.ndarray:
        """Dense ``sum_j coeffs[j] V(perm_j)``."""
        dim = self.index_maps.shape[1]
        out = np.zeros((dim, dim), dtype=np.result_type(coeffs, float))
        cols = np.arange(dim)
        for c, m in zip(coeffs, self.index_maps):
            out[m, cols] += c
        return out


def _check_order(k, d):
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= MAX_ORDER:
        raise ParameterError(f"moment order k must lie in [1, {MAX_ORDER}], got {k!r}")
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ParameterError(f"dimension d must be a positive integer, got {d!r}")
    if d**k > MAX_TENSOR_DIM:
        raise CapacityError(f"d**k = {d}**{k} exceeds {MAX_TENSOR_DIM}")


@lru_cache(maxsize=32)
def weingarten_table(k: int, d: int) -> WeingartenTable:
    """Gram matrix over the symmetric group and its inverse, the Weingarten matrix.

    Requires ``d >= k``; below that the Gram matrix is singular.
    """
    _check_order(k, d)
    if d < k:
        raise ParameterError(f"Gram matrix is singular for d < k (d={d}, k={k})")
    perms = tuple(permutations(range(k)))
    size = len(perms)
    gram = np.empty((size, size))
    for a, p in enumerate(perms):
        p_inv = inverse(p)
        for b, q in enumerate(perms):
            gram[a, b] = float(d) ** cycle_count(compose(p_inv, q))
    wg = np.linalg.inv(gram)
    wg = (wg + wg.T) / 2
    maps = np.stack([permutation_index_map(p, d) for p in perms])
    for arr in (gram, wg, maps):
        arr.setflags(write=False)
    return WeingartenTable(k, d, perms, gram, wg, maps)


@dataclass
class TwirlResult:
    k: int
    d: int
    matrix: np.ndarray
    method: str
    coefficients: np.ndarray | None = None
    stderr: np.ndarray | None = None
    samples: int | None = None
    seed: int | None = None


def _check_input(k, d, x):
    x = np.asarray(x, dtype=complex)
    if x.shape != (d**k, d**k):
        raise ParameterError(f"input must be {d**k}x{d**k}, got {x.shape}")
    return x


def exact_twirl(k: int, d: int, x: np.ndarray) -> TwirlResult:
    """Haar average of ``U^{(x)k} X U^{dagger (x)k}`` via Weingarten calculus."""
    _check_order(k, d)
    table = weingarten_table(k, d)
    x = _check_input(k, d, x)
    coeffs = table.wg @ table.trace_functionals(x)
    return TwirlResult(k, d, table.operator(coeffs), "exact-weingarten", coefficients=coeffs)


def psi_twirl(k: int, d: int, x: np.ndarray) -> TwirlResult:
    """``(1/d^k) sum_pi Tr[V(pi)^{-1} X] V(pi)``, the Gram-free approximation of the twirl."""
    _check_order(k, d)
    x = _check_input(k, d, x)
    perms = tuple(permutations(range(k)))
    maps = np.stack([permutation_index_map(p, d) for p in perms])
    cols = np.arange(d**k)
    coeffs = np.array([x[m, cols].sum() for m in maps]) / float(d) ** k
    out = np.zeros((d**k, d**k), dtype=complex)
    for c, m in zip(coeffs, maps):
        out[m, cols] += c
    return TwirlResult(k, d, out, "psi-approximation", coefficients=coeffs)


def mc_twirl(k: int, d: int, x: np.ndarray, samples: int, seed: int, batch: int = 256) -> TwirlResult:
    """Monte Carlo estimate of the twirl with entrywise standard errors.

    ``stderr`` holds the standard error of the real part in its real
    component and of the imaginary part in its imaginary component.
    """
    _check_order(k, d)
    x = _check_input(k, d, x)
    if samples < 2:
        raise ParameterError("samples must be >= 2")
    dim = d**k
    total = np.zeros((dim, dim), dtype=complex)
    sq_re = np.zeros((dim, dim))
    sq_im = np.zeros((dim, dim))
    for start in range(0, samples, batch):
        idx = range(start, min(samples, start + batch))
        z = np.empty((len(idx), d, d), dtype=complex)
        for j, i in enumerate(idx):
            g = RngStream(seed, i).generator().standard_normal((d, d, 2))
            z[j] = (g[..., 0] + 1j * g[..., 1]) / math.sqrt(2.0)
        us = haar_from_ginibre(z)
        for u in us:
            uk = kron_power(u, k)
            y = uk @ x @ uk.conj().T
            total += y
            sq_re += y.real**2
            sq_im += y.imag**2
    mean = total / samples
    var_re = np.clip(sq_re / samples - mean.real**2, 0.0, None) * samples / (samples - 1)
    var_im = np.clip(sq_im / samples - mean.imag**2, 0.0, None) * samples / (samples - 1)
    stderr = (np.sqrt(var_re) + 1j * np.sqrt(var_im)) / math.sqrt(samples)
    return TwirlResult(k, d, mean, "monte-carlo", stderr=stderr, samples=samples, seed=seed)


def lemma_threshold(k: int) -> float:
    """Dimension above which the twirl is sandwiched by ``(1 -/+ k^2/d) Psi_k``."""
    return math.sqrt(6.0) * k**1.75


@dataclass
class BracketReport:
    k: int
    d: int
    trials: int
    seed: int
    upper_min_eigs: list[float]
    lower_min_eigs: list[float]
    passed: bool
    exploratory: bool
    choi_upper_min_eig: float | None = None
    choi_lower_min_eig: float | None = None
    choi_passed: bool | None = None

    def as_dict(self) -> dict:
        return {
            "check": "lemma-bracket", "k": self.k, "d": self.d, "trials": self.trials, "seed": self.seed,
            "passed": self.passed, "exploratory": self.exploratory,
            "min_upper_gap_eig": min(self.upper_min_eigs),
            "min_lower_gap_eig": min(self.lower_min_eigs),
            "choi_upper_min_eig": self.choi_upper_min_eig,
            "choi_lower_min_eig": self.choi_lower_min_eig,
            "choi_passed": self.choi_passed,
        }


def choi_bracket(k: int, d: int) -> tuple[float, float]:
    """Minimum eigenvalues of the Choi matrices of ``(1+k^2/d)Psi - Phi`` and ``Phi - (1-k^2/d)Psi``.

    The Choi matrix of ``X -> sum c_{pi,sigma} Tr[V(sigma)^{-1} X] V(pi)`` is
    ``sum c_{pi,sigma} V(sigma) (x) V(pi)``; both maps here are real, so the
    eigenproblem is real symmetric.
    """
    _check_order(k, d)
    dim = d**k
    if dim * dim > MAX_CHOI_DIM:
        raise CapacityError(f"Choi dimension {dim * dim} exceeds {MAX_CHOI_DIM}")
    table = weingarten_table(k, d)
    size = len(table.permutations)
    eps = k * k / d
    psi = np.eye(size) / float(d) ** k
    upper = (1 + eps) * psi - table.wg
    lower = table.wg - (1 - eps) * psi
    mats = [np.zeros((dim * dim, dim * dim)) for _ in range(2)]
    cols = np.arange(dim)
    for a in range(size):
        for b in range(size):
            # V(sigma_b) (x) V(pi_a) as a flat index map on C^{dim} (x) C^{dim}
            rows = (table.index_maps[b][:, None] * dim + table.index_maps[a][None, :]).ravel()
            flat_cols = (cols[:, None] * dim + cols[None, :]).ravel()
            mats[0][rows, flat_cols] += upper[a, b]
            mats[1][rows, flat_cols] += lower[a, b]
    return tuple(float(np.linalg.eigvalsh(m).min()) for m in mats)


def lemma_bracket_check(k: int, d: int, trials: int, seed: int, force: bool = False,
                        choi: bool | None = None) -> BracketReport:
    """Check ``(1-k^2/d) Psi_k(X) <= Phi_k(X) <= (1+k^2/d) Psi_k(X)`` on random PSD ``X``.

    Below the dimension threshold the check raises unless ``force`` is set,
    in which case the report is marked exploratory. The Choi-level check of
    complete positivity runs when the Choi matrix fits (``d^{2k} <= 4096``).
    """
    _check_order(k, d)
    exploratory = not d > lemma_threshold(k)
    if exploratory and not force:
        raise PreconditionError(f"need d > sqrt(6) k^(7/4) = {lemma_threshold(k):.4f}, got d={d}")
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    table = weingarten_table(k, d)
    eps = k * k / d
    dim = d**k
    ups, lows = [], []
    for i in range(trials):
        gen = RngStream(seed, i).generator()
        if i % 2:
            v = gen.standard_normal(dim) + 1j * gen.standard_normal(dim)
            x = np.outer(v, v.conj()) / np.vdot(v, v).real
        else:
            x = random_psd(dim, gen)
        t = table.trace_functionals(x)
        phi = table.operator(table.wg @ t)
        psi = table.operator(t / float(d) ** k)
        ups.append(float(np.linalg.eigvalsh((1 + eps) * psi - phi).min()))
        lows.append(float(np.linalg.eigvalsh(phi - (1 - eps) * psi).min()))
    passed = min(ups) >= -BRACKET_TOL and min(lows) >= -BRACKET_TOL
    report = BracketReport(k, d, trials, seed, ups, lows, passed, exploratory)
    if choi is None:
        choi = dim * dim <= MAX_CHOI_DIM
    if choi:
        cu, cl = choi_bracket(k, d)
        report.choi_upper_min_eig = cu
        report.choi_lower_min_eig = cl
        report.choi_passed = cu >= -BRACKET_TOL and cl >= -BRACKET_TOL
    return report


@dataclass
class DeviationReport:
    r: int
    n: int
    k_parts: tuple[int, ...]
    trials: int
    seed: int
    ratios: list[float]
    bound_ratio: float
    passed: bool

    @property
    def max_ratio(self) -> float:
        return max(self.ratios)

    def as_dict(self) -> dict:
        return {
            "check": "moment-deviation", "r": self.r, "n": self.n, "k_parts": list(self.k_parts),
            "trials": self.trials, "seed": self.seed, "max_ratio": self.max_ratio,
            "bound_ratio": self.bound_ratio, "measured_constant": self.max_ratio * self.r / sum(self.k_parts) ** 2,
            "passed": self.passed,
        }


def _block_state(d: int, r: int, m: int) -> np.ndarray:
    s = np.zeros((d, d), dtype=complex)
    s[r * m:r * (m + 1), r * m:r * (m + 1)] = np.eye(r) / r
    return s


def random_effect(dim: int, gen: np.random.Generator, rank: int = 8) -> np.ndarray:
    """Random ``0 <= P <= I``: a rank-limited Wishart matrix scaled to unit norm.

    Cheap at large ``dim``; the top eigenvalue comes from the small
    ``rank x rank`` Gram matrix.
    """
    rank = min(rank, dim)
    g = gen.standard_normal((dim, rank)) + 1j * gen.standard_normal((dim, rank))
    top = np.linalg.eigvalsh(g.conj().T @ g).max()
    return g @ g.conj().T / top


def _test_effects(table: WeingartenTable, trials: int, seed: int):
    """Effects ``0 <= P <= I``: identity, symmetric projector and complement, then random ones.

    Random effects alternate between rank-limited Wishart and random diagonal.
    """
    dim = table.index_maps.shape[1]
    yield np.eye(dim, dtype=complex)
    sym = table.operator(np.ones(len(table.permutations)) / len(table.permutations))
    yield sym
    yield np.eye(dim) - sym
    for i in range(trials):
        gen = RngStream(seed, i).generator()
        if i % 2:
            yield np.diag(gen.uniform(0.0, 1.0, dim)).astype(complex)
        else:
            yield random_effect(dim, gen)


def mixed_moment_deviation_check(r: int, n: int, k_parts, trials: int = 20, seed: int = 0) -> DeviationReport:
    """Exact ``|E Tr[P (x)_i (U sigma_i U^dagger)^{(x)k_i}] - Tr P / d^k|`` against ``7 k^2 / r``.

    ``sigma_i`` is the ciphertext of message ``i`` (norm ``1/r``), so
    ``eps = 1/r``. The ratio ``deviation / (Tr P / d^k)`` is recorded for the
    identity, the symmetric-subspace projector, its complement and ``trials``
    random effects.
    """
    k_parts = tuple(int(p) for p in k_parts)
    if not k_parts or any(p < 1 for p in k_parts):
        raise ParameterError("k_parts must be a nonempty list of positive counts")
    if len(k_parts) > n:
        raise ParameterError(f"at most n={n} distinct messages, got {len(k_parts)} parts")
    k = sum(k_parts)
    if k * k > r:
        raise PreconditionError(f"need k^2 <= r, got k={k}, r={r}")
    d = r * n
    _check_order(k, d)
    table = weingarten_table(k, d)
    x = np.ones((1, 1), dtype=complex)
    for m, part in enumerate(k_parts):
        x = np.kron(x, kron_power(_block_state(d, r, m), part))
    coeffs = table.wg @ table.trace_functionals(x)
    bound = BOUND_CONSTANT * k * k / r
    ratios = []
    passed = True
    for p in _test_effects(table, trials, seed):
        value = float(np.real(coeffs @ table.pairings(p)))
        base = float(np.trace(p).real) / d**k
        if base <= 1e-12:
            continue
        dev = abs(value - base)
        ratios.append(dev / base)
        passed &= dev <= bound * base + DEVIATION_SLACK
    return DeviationReport(r, n, k_parts, trials, seed, ratios, bound, bool(passed))


def moment_deviation_check(r: int, n: int, k: int, trials: int = 20, seed: int = 0) -> DeviationReport:
    """Single-message case of :func:`mixed_moment_deviation_check`."""
    return mixed_moment_deviation_check(r, n, (k,), trials, seed)


def flip_operator(d: int) -> np.ndarray:
    return weingarten_table(2, d).operator(np.array([0.0, 1.0])) if d >= 2 else np.eye(1)


@dataclass
class SecondMomentReport:
    d: int
    c_identity: float
    c_flip: float
    expected_identity: float
    expected_flip: float
    max_entry_error: float
    passed: bool

    def as_dict(self) -> dict:
        return {"check": "second-moment", "d": self.d, "c_identity": self.c_identity, "c_flip": self.c_flip,
                "expected_identity": self.expected_identity, "expected_flip": self.expected_flip,
                "max_entry_error": self.max_entry_error, "passed": self.passed}


def second_moment_identity(d: int, tol: float = 1e-9) -> SecondMomentReport:
    """Twirl of ``(Pi_0 - Pi_1)^{(x)2}`` for two rank-``d/2`` blocks.

    The integrand is conjugated by ``conj(U) (x) conj(U)``; that orientation is
    obtained as ``conj(Phi_2(conj(X)))``. The result must be
    ``(-I + d F) / (d^2 - 1)``.
    """
    if d < 2 or d % 2:
        raise ParameterError(f"d must be even and >= 2, got {d}")
    diff = np.diag(np.r_[np.ones(d // 2), -np.ones(d // 2)]).astype(complex)
    x = np.kron(diff, diff)
    res = exact_twirl(2, d, x.conj())
    out = res.matrix.conj()
    c_id, c_flip = np.real(res.coefficients.conj())
    e_id = -1.0 / (d * d - 1)
    e_flip = d / (d * d - 1)
    expected = e_id * np.eye(d * d) + e_flip * flip_operator(d)
    err = float(np.max(np.abs(out - expected)))
    return SecondMomentReport(d, float(c_id), float(c_flip), e_id, e_flip, err, err <= tol)
