"""Closed-form values and bounds for the Haar-measure encryption scheme.

Exact attack values are returned as rationals computed with Python integers.
Upper bounds that exceed one are clamped and flagged ``vacuous``; results that
drop an unevaluated ``O(.)`` remainder are tagged ``leading-order``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ParameterError
from .special import regularized_incomplete_beta

__all__ = [
    "BoundReport",
    "bit_exact_value",
    "regularized_incomplete_beta",
    "bit_asymptotic_brackets",
    "majority_exact_value",
    "majority_brackets",
    "multimessage_series_value",
    "distinguish_exact_value",
    "telegraphing_lower_from_distinguish",
    "ute_upper_bound_bit",
    "ute_upper_bound_tcopy",
    "collusion_upper_bound",
    "equivalence_gap",
    "min_receivers_for_gap",
    "general_lower_bounds",
    "haar_tcopy_brackets",
]

# constant in the t-copy and collusion upper bounds
BOUND_CONSTANT = 7


@dataclass(frozen=True)
class BoundReport:
    """A single value or bound together with its provenance flags.

    ``kind`` is one of exact/upper/lower/asymptotic and ``exactness`` one of
    rational-exact/float/leading-order. ``raw`` keeps the unclamped formula
    value for clamped bounds.
    """

    name: str
    kind: str
    value: float
    exactness: str
    params: dict = field(default_factory=dict)
    rational: Fraction | None = None
    vacuous: bool = False
    raw: float | None = None
    extra: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value

    def as_record(self) -> dict:
        rec = {"formula": self.name, **self.params, "kind": self.kind,
               "exactness": self.exactness, "value": self.value}
        if self.rational is not None:
            rec["rational"] = f"{self.rational.numerator}/{self.rational.denominator}"
        if self.raw is not None:
            rec["raw"] = self.raw
            rec["vacuous"] = self.vacuous
        rec.update(self.extra)
        return rec


def _pos_int(name, v, minimum=1):
    if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {v!r}")
    return int(v)


def _even_dim(d):
    d = _pos_int("d", d, 2)
    if d % 2:
        raise ParameterError(f"d must be even, got {d}")
    return d


def _central_binomial_value(r: int) -> Fraction:
    return Fraction(1, 2) + Fraction(math.comb(2 * r, r), 2 ** (2 * r + 1))


def bit_exact_value(r: int) -> BoundReport:
    """Exact success of the basis-measurement attack on one bit, ``d = 2r``."""
    r = _pos_int("r", r)
    q = _central_binomial_value(r)
    return BoundReport("bit", "exact", float(q), "rational-exact", {"r": r, "d": 2 * r}, rational=q)


def distinguish_exact_value(r: int) -> BoundReport:
    """Exact success of the two-message distinguishing attack; independent of n."""
    r = _pos_int("r", r)
    q = _central_binomial_value(r)
    return BoundReport("distinguish", "exact", float(q), "rational-exact", {"r": r}, rational=q,
                       extra={"asymptotic": 0.5 + 1.0 / (2.0 * math.sqrt(math.pi * r))})


def bit_asymptotic_brackets(d: int) -> tuple[float, float, float]:
    """Stirling sandwich ``(lower, asymptote, upper)`` around the one-bit value."""
    d = _even_dim(d)
    lead = 1.0 / math.sqrt(2.0 * math.pi * d)
    lower = 0.5 + lead * (1.0 - 1.0 / (3.0 * d))
    return lower, 0.5 + lead, 0.5 + lead


def majority_exact_value(p, t: int):
    """Success of majority voting over ``t`` independent rounds each won w.p. ``p``.

    Ties at even ``t`` are broken by a fair coin. Exact for ``Fraction`` input;
    array input is evaluated elementwise.
    """
    t = _pos_int("t", t)
    if isinstance(p, Fraction):
        q = 1 - p
        if not 0 <= p <= 1:
            raise ParameterError(f"p must lie in [0, 1], got {p}")
        total = sum((math.comb(t, l) * p**l * q ** (t - l) for l in range(t // 2 + 1, t + 1)), Fraction(0))
        if t % 2 == 0:
            total += Fraction(1, 2) * math.comb(t, t // 2) * (p * q) ** (t // 2)
        return total
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr < -1e-12) | (p_arr > 1 + 1e-12)):
        raise ParameterError("p must lie in [0, 1]")
    p_arr = np.clip(p_arr, 0.0, 1.0)
    q_arr = 1.0 - p_arr
    total = np.zeros_like(p_arr)
    for l in range(t // 2 + 1, t + 1):
        total = total + math.comb(t, l) * p_arr**l * q_arr ** (t - l)
    if t % 2 == 0:
        total = total + 0.5 * math.comb(t, t // 2) * (p_arr * q_arr) ** (t // 2)
    return float(total) if total.ndim == 0 else total


def majority_brackets(delta: float, t: int) -> tuple[float, float]:
    """``(1/2 + sqrt(t) delta / 3, 1/2 + sqrt(t) delta)`` for ``t >= 4``.

    Only valid when ``0 < delta <= 1 / (2 sqrt(t - 1))``; outside that range
    the bracket is not extrapolated.
    """
    t = _pos_int("t", t, 4)
    delta = float(delta)
    limit = 1.0 / (2.0 * math.sqrt(t - 1))
    if not 0.0 < delta <= limit:
        raise ParameterError(f"delta must lie in (0, {limit:.6g}] for t={t}, got {delta}")
    s = math.sqrt(t) * delta
    return 0.5 + s / 3.0, 0.5 + s


def _nbinom_tail(S: int, successes: int, p: float) -> float:
    """P[X > S] for X the failures before ``successes`` successes, P(success) = p."""
    return regularized_incomplete_beta(1.0 - p, S + 1, successes)


def multimessage_series_value(r: int, n: int, tol: float = 1e-12) -> BoundReport:
    """Success of the n-message argmax attack, summed by shells of total weight.

    The series runs over ``q_1..q_{n-1} >= r``. Grouping by ``S = sum q_i``, the
    shell mass is ``C(S+r, r) A(S) / n^(S+r+1)`` where ``A(S)`` counts
    placements of S labelled balls into ``n-1`` bins holding at least ``r``
    each; ``A`` is built by integer convolution. Since ``A(S) <= (n-1)^S`` the
    shell is dominated by a negative binomial pmf, whose tail bounds the
    truncation error.
    """
    r = _pos_int("r", r)
    n = _pos_int("n", n, 2)
    tol = float(tol)
    if not tol > 0:
        raise ParameterError("tol must be positive")
    bins = n - 1
    # counts[j][s]: ordered placements of s labelled balls into j+1 bins, each >= r
    counts: list[list[int]] = [[] for _ in range(bins)]
    numerator = 0
    S = -1
    tail = 1.0
    while True:
        S += 1
        counts[0].append(1 if S >= r else 0)
        for j in range(1, bins):
            acc = 0
            for q in range(r, S - j * r + 1):
                acc += math.comb(S, q) * counts[j - 1][S - q]
            counts[j].append(acc)
        # common denominator n^(S+r+1) grows by n per shell
        numerator = numerator * n + math.comb(S + r, r) * counts[-1][S]
        if S >= bins * r:
            tail = _nbinom_tail(S, r + 1, 1.0 / n)
            if tail <= tol:
                break
    partial = Fraction(numerator, n ** (S + r + 1))
    return BoundReport("multimessage", "exact", float(partial), "float", {"r": r, "n": n, "tol": tol},
                       rational=partial, extra={"shells": S + 1, "tail_bound": tail})


def telegraphing_lower_from_distinguish(r: int, n: int) -> BoundReport:
    """Telegraphing value from the distinguishing attack: guess ``m_b`` on output b."""
    n = _pos_int("n", n, 2)
    dist = distinguish_exact_value(r)
    q = Fraction(2, n) * dist.rational
    asym = 1.0 / n + 1.0 / (n * math.sqrt(math.pi * dist.params["r"]))
    return BoundReport("telegraphing-lower", "lower", float(q), "rational-exact",
                       {"r": dist.params["r"], "n": n}, rational=q, extra={"asymptotic": asym})


def ute_upper_bound_bit(d: int) -> BoundReport:
    """One-copy distinguishing upper bound ``1/2 + 1/(2 sqrt(d+1))`` for one bit."""
    d = _even_dim(d)
    return BoundReport("bit-upper", "upper", 0.5 + 0.5 / math.sqrt(d + 1), "float", {"d": d})


def _clamped(name, params, raw):
    return BoundReport(name, "upper", min(1.0, raw), "float", params, vacuous=raw >= 1.0, raw=raw)


def ute_upper_bound_tcopy(r: int, t: int) -> BoundReport:
    """t-copy distinguishing upper bound ``1/2 + 7t/sqrt(r)``, clamped to 1."""
    r = _pos_int("r", r)
    t = _pos_int("t", t)
    return _clamped("tcopy-upper", {"r": r, "t": t}, 0.5 + BOUND_CONSTANT * t / math.sqrt(r))


def collusion_upper_bound(r: int, Q: int, n: int = 2) -> BoundReport:
    """Q-round collusion upper bound ``1/2 + 7Q/sqrt(r)``; equals ``1/2 + 7Q sqrt(n/d)``."""
    r = _pos_int("r", r)
    Q = _pos_int("Q", Q)
    n = _pos_int("n", n, 2)
    return _clamped("collusion-upper", {"r": r, "Q": Q, "n": n}, 0.5 + BOUND_CONSTANT * Q / math.sqrt(r))


def _log(d, base):
    return math.log2(d) if base == 2 else math.log(d)


def equivalence_gap(d: int, N: int, s: int, eta: float, log_base: float = 2) -> BoundReport:
    """Excess of the s-receiver cloning value over the telegraphing value.

    ``3 eta d (log d / (N^2 s))^(1/3)`` with a binary log by default;
    ``log_base=math.e`` switches to the natural log.
    """
    d = _pos_int("d", d)
    N = _pos_int("N", N)
    s = _pos_int("s", s)
    eta = float(eta)
    if not 0.0 < eta <= 1.0:
        raise ParameterError(f"eta must lie in (0, 1], got {eta}")
    gap = 3.0 * eta * d * (_log(d, log_base) / (N * N * s)) ** (1.0 / 3.0)
    return BoundReport("equivalence-gap", "upper", gap, "float",
                       {"d": d, "N": N, "s": s, "eta": eta, "log_base": log_base})


def min_receivers_for_gap(d: int, N: int, eta: float, target: float, log_base: float = 2) -> int:
    """Smallest receiver count ``s`` with ``equivalence_gap(d, N, s, eta) <= target``."""
    if not target > 0:
        raise ParameterError("target must be positive")
    d = _pos_int("d", d)
    if d == 1:
        return 1
    s = max(1, math.ceil(_log(d, log_base) * (3.0 * eta * d / target) ** 3 / (N * N)))
    # guard against rounding at the boundary
    while s > 1 and equivalence_gap(d, N, s - 1, eta, log_base).value <= target:
        s -= 1
    while equivalence_gap(d, N, s, eta, log_base).value > target:
        s += 1
    return s


def general_lower_bounds(d: int, M: int, N: int, t: int = 1) -> tuple[BoundReport, BoundReport, BoundReport]:
    """Leading-order lower bounds valid for every correct scheme of dimension d.

    Returns the telegraphing, one-to-two cloning and t-to-(t+1) cloning
    bounds; the ``O(.)`` remainders are not computed.
    """
    d = _pos_int("d", d)
    M = _pos_int("M", M, 2)
    N = _pos_int("N", N, 2)
    t = _pos_int("t", t)
    if d < M:
        raise ParameterError(f"need d >= |M|, got d={d}, M={M}")
    if N > M:
        raise ParameterError(f"need N <= |M|, got N={N}, M={M}")
    eff = d - M + 1
    params = {"d": d, "M": M, "N": N, "t": t}
    first = 1.0 / N + 1.0 / (N * math.sqrt(math.pi * eff))
    third = 1.0 / N + 1.0 / (57.0 * N * N * math.sqrt(math.pi * t**3 * eff))
    return (
        BoundReport("telegraph-lower", "lower", first, "leading-order", params),
        BoundReport("clone-1to2-lower", "lower", first, "leading-order", params),
        BoundReport("clone-t-lower", "lower", third, "leading-order", params),
    )


def haar_tcopy_brackets(r: int, t: int) -> tuple[BoundReport, BoundReport]:
    """Leading-order lower and clamped upper bound on the t-copy distinguishing value."""
    r = _pos_int("r", r)
    t = _pos_int("t", t)
    lower = 0.5 + math.sqrt(t / (math.pi * r)) / 6.0
    return (
        BoundReport("tcopy-lower", "lower", lower, "leading-order", {"r": r, "t": t}),
        ute_upper_bound_tcopy(r, t),
    )
