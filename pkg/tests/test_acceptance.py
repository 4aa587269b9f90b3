"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line before asserting; the lines are
printed in the terminal summary.
"""

import itertools
import math
import os
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import ACCEPTANCE_LINES, haar_keys, sample_mean
from untelegraph.attacks import AttackSpec, block_weights
from untelegraph.cli import bounds_table_rows, parse_records
from untelegraph.estimator import estimate
from untelegraph.formulas import (
    bit_asymptotic_brackets,
    bit_exact_value,
    collusion_upper_bound,
    majority_brackets,
    majority_exact_value,
    multimessage_series_value,
    ute_upper_bound_bit,
    ute_upper_bound_tcopy,
)
from untelegraph.qecm import HaarScheme
from untelegraph.weingarten import lemma_bracket_check, moment_deviation_check, second_moment_identity

MC_SAMPLES = 100_000


def record(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def mc(kind, r, n, seed, samples=MC_SAMPLES, **kw):
    return estimate(AttackSpec(kind, HaarScheme(r, n), **kw), samples, seed)


@pytest.mark.slow
def test_criterion_01_bit_attack_closed_form_vs_mc():
    refs = {1: 0.75, 2: 0.6875, 4: 0.63671875}
    details, ok = [], True
    for r, ref in refs.items():
        exact = bit_exact_value(r).value
        ok &= exact == ref
        start = time.perf_counter()
        est = mc("bit-single", r, 2, seed=100 + r)
        elapsed = time.perf_counter() - start
        z = abs(est.mean - exact) / est.stderr
        if z > 4:
            # one rerun with a fresh seed is allowed; two misses count as a defect
            est = mc("bit-single", r, 2, seed=200 + r)
            z = abs(est.mean - exact) / est.stderr
        ok &= z <= 4 and elapsed < 60
        details.append(f"r={r} mean={est.mean:.5f} exact={exact} z={z:.2f} se={est.stderr:.1e} t={elapsed:.1f}s")
    assert record(1, ok, "; ".join(details))


@pytest.mark.slow
def test_criterion_02_distinguishing_value_independent_of_n():
    target = 0.5 + math.comb(4, 2) / 2**5
    ests = {n: mc("distinguish", 2, n, seed=300 + n, m0=0, m1=n - 1) for n in (2, 3, 4)}
    ok = all(abs(e.mean - target) <= 4 * e.stderr for e in ests.values())
    for a, b in itertools.combinations(ests.values(), 2):
        ok &= abs(a.mean - b.mean) <= 5 * math.hypot(a.stderr, b.stderr)
    detail = " ".join(f"n={n}:{e.mean:.5f}+-{e.stderr:.1e}" for n, e in ests.items())
    assert record(2, ok, f"target={target} {detail}")


def test_criterion_03_stirling_bracket():
    start = time.perf_counter()
    worst_low, worst_high = math.inf, math.inf
    ok = True
    for d in range(2, 1025, 2):
        lower, _, upper = bit_asymptotic_brackets(d)
        exact = bit_exact_value(d // 2).rational
        # compare the float bounds against the exact rational
        worst_low = min(worst_low, float(exact - Fraction(lower)))
        worst_high = min(worst_high, float(Fraction(upper) - exact))
        ok &= Fraction(lower) <= exact + Fraction(1, 10**12) and exact <= Fraction(upper) + Fraction(1, 10**12)
    elapsed = time.perf_counter() - start
    ok &= elapsed < 5
    assert record(3, ok, f"d=2..1024 min(exact-lower)={worst_low:.3e} min(upper-exact)={worst_high:.3e} "
                         f"t={elapsed:.2f}s")


def test_criterion_04_upper_lower_containment():
    ok = True
    for d in range(2, 1025, 2):
        ok &= bit_exact_value(d // 2).value <= ute_upper_bound_bit(d).value
    out = subprocess.run([sys.executable, "-m", "untelegraph", "bounds-table", "--d-min", "2", "--d-max", "1024"],
                         capture_output=True, text=True, check=True).stdout
    rows = parse_records(out, "csv")
    ok &= out.splitlines()[0] == "d,exact_lower,upper_thm,asym_lower,asym_upper"
    ok &= [row["d"] for row in rows] == list(range(2, 1025, 2))
    for row in rows:
        ok &= row["exact_lower"] == bit_exact_value(row["d"] // 2).value
        ok &= row["upper_thm"] == ute_upper_bound_bit(row["d"]).value
        ok &= row["exact_lower"] <= row["upper_thm"]
    assert record(4, ok, f"{len(rows)} rows, both curves reproduced, exact_lower <= upper_thm on every row")


def test_criterion_05_majority_bracket():
    delta_exact = bit_exact_value(8).rational - Fraction(1, 2)
    delta = float(delta_exact)
    ok = True
    worst = math.inf
    for t in range(4, 27):
        ok &= delta <= 1 / (2 * math.sqrt(t - 1))
        lo, hi = majority_brackets(delta, t)
        value = float(majority_exact_value(Fraction(1, 2) + delta_exact, t))
        ok &= lo - 1e-12 <= value <= hi + 1e-12
        worst = min(worst, value - lo, hi - value)
    assert record(5, ok, f"delta={delta:.7f} t=4..26 min margin={worst:.4e}")


def _haar_qubit_majority(t):
    """Key-averaged majority value at r = 1: |U_00|^2 is uniform on [0, 1]."""
    return 2 * quad(lambda p: majority_exact_value(p, t), 0.5, 1.0)[0]


def _simulate_majority_shots(keys, t, gen):
    """Sample the bit, ``t`` basis outcomes per key, decode each and take the majority."""
    scheme = HaarScheme(1, 2)
    w = block_weights(scheme, keys)
    guess = np.argmax(w >= w.max(axis=-1, keepdims=True) - 1e-12, axis=-1)
    bits = gen.integers(0, 2, size=len(keys))
    probs = w[np.arange(len(keys)), :, bits] / scheme.r
    outcomes = (gen.random((len(keys), t)) >= probs[:, :1]).astype(int)
    votes = np.take_along_axis(guess, outcomes, axis=1) == bits[:, None]
    wins = votes.sum(axis=1)
    tie = 2 * wins == t
    return np.where(tie, gen.random(len(keys)) < 0.5, 2 * wins > t).astype(float)


@pytest.mark.slow
def test_criterion_06_tcopy_majority_consistency():
    ok = True
    details = []
    ests = []
    gen = np.random.default_rng(6)
    for t in (1, 3, 5):
        target = _haar_qubit_majority(t)
        est = mc("bit-majority", 1, 2, seed=600 + t, t=t)
        shots, shot_se = sample_mean(_simulate_majority_shots(haar_keys(2, MC_SAMPLES, 650 + t), t, gen))
        z_est = abs(est.mean - target) / est.stderr
        z_shot = abs(shots - target) / shot_se
        ok &= z_est <= 4 and z_shot <= 4
        ests.append(est)
        details.append(f"t={t} target={target:.5f} est={est.mean:.5f}(z={z_est:.2f}) shots={shots:.5f}(z={z_shot:.2f})")
    for a, b in zip(ests, ests[1:]):
        ok &= b.mean >= a.mean - 3 * math.hypot(a.stderr, b.stderr)
    assert record(6, ok, "; ".join(details) + "; monotone in t")


@pytest.mark.slow
def test_criterion_07_multimessage_series():
    worst = max(abs(multimessage_series_value(r, 2, 1e-10).value - bit_exact_value(r).value) for r in range(1, 33))
    series = multimessage_series_value(2, 3, 1e-12).value
    est = mc("multi-argmax", 2, 3, seed=700)
    z = abs(est.mean - series) / est.stderr
    ok = worst <= 1e-9 and z <= 4
    assert record(7, ok, f"max|series(r,2)-bit(r)|={worst:.2e} r=1..32; r=2 n=3 series={series:.6f} "
                         f"mc={est.mean:.6f} z={z:.2f}")


def test_criterion_08_second_moment_identity():
    start = time.perf_counter()
    reports = [second_moment_identity(d) for d in (2, 4, 8, 16)]
    elapsed = time.perf_counter() - start
    ok = all(rep.passed and rep.max_entry_error <= 1e-9 for rep in reports) and elapsed < 10
    detail = " ".join(f"d={rep.d}:err={rep.max_entry_error:.1e}" for rep in reports)
    assert record(8, ok, f"{detail} t={elapsed:.2f}s")


def test_criterion_09_moment_lemma_certification():
    devs = [moment_deviation_check(r, 2, 2) for r in (4, 16)]
    brackets = [lemma_bracket_check(2, d, 50, seed=9, choi=False) for d in (9, 16)]
    ok = all(rep.passed for rep in devs) and all(rep.passed for rep in brackets)
    detail = " ".join(f"r={rep.r}:ratio={rep.max_ratio:.3f}/bound={rep.bound_ratio}" for rep in devs)
    detail += " " + " ".join(
        f"d={rep.d}:min_eig={min(min(rep.upper_min_eigs), min(rep.lower_min_eigs)):.2e}" for rep in brackets)
    assert record(9, ok, detail)


def test_criterion_10_headline_bounds_dominate_simulations():
    ok = True
    gaps = []
    # r >= 4 t^2 with d = 2r kept small enough to simulate
    for t, r in [(1, 4), (1, 8), (1, 16), (1, 32), (2, 16), (2, 32), (3, 36)]:
        est = mc("bit-majority", r, 2, seed=1000 + 10 * t + r, samples=10_000, t=t)
        tcopy = ute_upper_bound_tcopy(r, t)
        collusion = collusion_upper_bound(r, t)
        ok &= est.mean <= tcopy.value and est.mean <= collusion.value
        ok &= est.mean <= tcopy.raw and tcopy.vacuous
        gaps.append(f"(t={t},r={r}) mc={est.mean:.4f} bound={tcopy.value} raw={tcopy.raw:.2f}")
    # beyond simulation range, compare against the exact one-copy value
    for r in (196, 4900, 10**5):
        exact = bit_exact_value(r).value
        bound = ute_upper_bound_tcopy(r, 1)
        ok &= exact <= bound.value
        gaps.append(f"(t=1,r={r}) exact={exact:.5f} bound={bound.value:.4f} gap ratio={(bound.raw - 0.5) / (exact - 0.5):.1f}")
    assert record(10, ok, "dominance only, not tightness; " + "; ".join(gaps))


def _cli(args, threads):
    env = dict(os.environ, UNTELEGRAPH_THREADS=str(threads))
    return subprocess.run([sys.executable, "-m", "untelegraph", *args], capture_output=True, env=env, check=False)


def test_criterion_11_determinism():
    invocations = [
        ["estimate", "--attack", "bit-single", "--r", "2", "--samples", "5000", "--seed", "11", "--chunk-size", "512"],
        ["estimate", "--attack", "multi-argmax", "--r", "1", "--n", "3", "--samples", "4000", "--seed", "3",
         "--format", "json"],
        ["bounds-table", "--d-max", "16", "--mc-samples", "3000", "--seed", "2", "--chunk-size", "256"],
        ["verify", "--trials", "6", "--seed", "5"],
    ]
    ok = True
    for args in invocations:
        outputs = {_cli(args, threads).stdout for threads in (1, 4, 1)}
        ok &= len(outputs) == 1 and outputs != {b""}
    in_process = {estimate(AttackSpec("distinguish", HaarScheme(2, 3), m0=0, m1=2), 6000, 8, chunk_size=500,
                           workers=w) for w in (1, 3, 8)}
    ok &= len(in_process) == 1
    assert record(11, ok, f"{len(invocations)} CLI invocations byte-identical for 1 and 4 threads; "
                          "in-process estimate identical for 1, 3, 8 workers")
