"""Command-line entry point: ``untelegraph {estimate,exact,bounds-table,verify}``.

Exit codes: 0 on success (all checks passed), 1 when a verification check
fails, 2 on usage or parameter errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction

from . import formulas
from .attacks import ATTACK_KINDS, AttackSpec, computational_povm
from .errors import ParameterError, PreconditionError
from .estimator import DEFAULT_CHUNK_SIZE, confidence_interval, estimate
from .qecm import HaarScheme
from . import weingarten

ESTIMATE_COLUMNS = ["attack", "r", "n", "t", "samples", "seed", "mean", "stderr", "ci_lo", "ci_hi",
                    "m0", "m1", "chunk_size", "z"]
TABLE_COLUMNS = ["d", "exact_lower", "upper_thm", "asym_lower", "asym_upper"]
MC_COLUMNS = ["mc_mean", "mc_stderr"]

FORMULAS = (
    "bit", "distinguish", "majority", "majority-brackets", "multimessage", "telegraph-lower",
    "bit-upper", "tcopy-upper", "collusion-upper", "gap", "min-receivers", "general-lower",
    "tcopy-brackets", "stirling", "betainc",
)
CHECKS = ("second-moment", "lemma-bracket", "moment-deviation", "mixed-moment")


def render_value(v) -> str:
    """Shortest round-trip text for floats; plain text for everything else."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return " ".join(render_value(x) for x in v)
    return str(v)


def parse_value(text: str):
    """Inverse of :func:`render_value` for scalar cells."""
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        v = float(text)
    except ValueError:
        return text
    return v


def render_records(records: list[dict], fmt: str, columns: list[str] | None = None) -> str:
    if fmt == "json":
        return "".join(json.dumps(rec) + "\n" for rec in records)
    if columns is None:
        columns = []
        for rec in records:
            columns.extend(k for k in rec if k not in columns)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        writer.writerow([render_value(rec.get(c)) for c in columns])
    return buf.getvalue()


def parse_records(text: str, fmt: str) -> list[dict]:
    if fmt == "json":
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    return [{h: parse_value(cell) for h, cell in zip(header, row)} for row in body]


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- estimate ---------------------------------------------------------------

def cmd_estimate(args) -> int:
    n = 2 if args.attack in ("bit-single", "bit-majority") and args.n is None else (args.n or 2)
    scheme = HaarScheme(args.r, n)
    spec = AttackSpec(args.attack, scheme, t=args.t, m0=args.m0, m1=args.m1,
                      povm=_povm_from_args(args, scheme) if args.attack == "generic-povm" else None)
    est = estimate(spec, args.samples, args.seed, chunk_size=args.chunk_size)
    lo, hi = confidence_interval(est, args.z)
    rec = {"attack": args.attack, "r": args.r, "n": n, "t": args.t, "samples": args.samples, "seed": args.seed,
           "mean": est.mean, "stderr": est.stderr, "ci_lo": lo, "ci_hi": hi,
           "m0": args.m0, "m1": args.m1, "chunk_size": args.chunk_size, "z": args.z}
    _emit(args, render_records([rec], args.format, ESTIMATE_COLUMNS))
    return 0


def _povm_from_args(args, scheme):
    # the CLI exposes only the computational-basis POVM; other POVMs go through the API
    return computational_povm(scheme.d)


# -- exact ------------------------------------------------------------------

def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise ParameterError(f"formula {args.formula!r} needs --{', --'.join(missing)}")


def _exact_records(args) -> list[dict]:
    f = args.formula
    if f == "bit":
        _need(args, "r")
        return [formulas.bit_exact_value(args.r).as_record()]
    if f == "distinguish":
        _need(args, "r")
        return [formulas.distinguish_exact_value(args.r).as_record()]
    if f == "majority":
        _need(args, "p", "t")
        p = Fraction(args.p)
        exact = formulas.majority_exact_value(p, args.t)
        return [{"formula": f, "p": args.p, "t": args.t, "kind": "exact", "exactness": "rational-exact",
                 "value": float(exact), "rational": f"{exact.numerator}/{exact.denominator}"}]
    if f == "majority-brackets":
        _need(args, "delta", "t")
        lo, hi = formulas.majority_brackets(args.delta, args.t)
        return [{"formula": f, "delta": args.delta, "t": args.t, "kind": "bracket", "exactness": "float",
                 "lower": lo, "upper": hi}]
    if f == "multimessage":
        _need(args, "r", "n")
        rep = formulas.multimessage_series_value(args.r, args.n, args.tol)
        rec = rep.as_record()
        rec.pop("rational", None)
        return [rec]
    if f == "telegraph-lower":
        _need(args, "r", "n")
        return [formulas.telegraphing_lower_from_distinguish(args.r, args.n).as_record()]
    if f == "bit-upper":
        _need(args, "d")
        return [formulas.ute_upper_bound_bit(args.d).as_record()]
    if f == "tcopy-upper":
        _need(args, "r", "t")
        return [formulas.ute_upper_bound_tcopy(args.r, args.t).as_record()]
    if f == "collusion-upper":
        _need(args, "r", "Q")
        return [formulas.collusion_upper_bound(args.r, args.Q, args.n or 2).as_record()]
    if f == "gap":
        _need(args, "d", "N", "s", "eta")
        return [formulas.equivalence_gap(args.d, args.N, args.s, args.eta, 2 if args.log_base == "2" else math.e).as_record()]
    if f == "min-receivers":
        _need(args, "d", "N", "eta", "target")
        base = 2 if args.log_base == "2" else math.e
        s = formulas.min_receivers_for_gap(args.d, args.N, args.eta, args.target, base)
        return [{"formula": f, "d": args.d, "N": args.N, "eta": args.eta, "target": args.target,
                 "kind": "inverse", "exactness": "float", "value": s}]
    if f == "general-lower":
        _need(args, "d", "M", "N")
        return [rep.as_record() for rep in formulas.general_lower_bounds(args.d, args.M, args.N, args.t or 1)]
    if f == "tcopy-brackets":
        _need(args, "r", "t")
        return [rep.as_record() for rep in formulas.haar_tcopy_brackets(args.r, args.t)]
    if f == "stirling":
        _need(args, "d")
        lo, asym, hi = formulas.bit_asymptotic_brackets(args.d)
        return [{"formula": f, "d": args.d, "kind": "bracket", "exactness": "float",
                 "lower": lo, "asymptote": asym, "upper": hi}]
    if f == "betainc":
        _need(args, "p", "a", "b")
        v = formulas.regularized_incomplete_beta(args.p, args.a, args.b)
        return [{"formula": f, "p": args.p, "a": args.a, "b": args.b, "kind": "exact",
                 "exactness": "float", "value": v}]
    raise ParameterError(f"unknown formula {f!r}")


def cmd_exact(args) -> int:
    _emit(args, render_records(_exact_records(args), args.format))
    return 0


# -- bounds table -----------------------------------------------------------

def bounds_table_rows(d_min: int, d_max: int, d_step: int = 2, mc_samples: int = 0, seed: int = 0,
                      chunk_size: int = DEFAULT_CHUNK_SIZE) -> list[dict]:
    if d_min < 2 or d_min % 2 or d_step < 2 or d_step % 2 or d_max < d_min:
        raise ParameterError("dimension range must use even d >= 2 and an even step")
    rows = []
    for d in range(d_min, d_max + 1, d_step):
        lo, _, hi = formulas.bit_asymptotic_brackets(d)
        row = {"d": d, "exact_lower": formulas.bit_exact_value(d // 2).value,
               "upper_thm": formulas.ute_upper_bound_bit(d).value, "asym_lower": lo, "asym_upper": hi}
        if mc_samples:
            est = estimate(AttackSpec("bit-single", HaarScheme(d // 2, 2)), mc_samples, seed, chunk_size=chunk_size)
            row["mc_mean"] = est.mean
            row["mc_stderr"] = est.stderr
        rows.append(row)
    return rows


def cmd_bounds_table(args) -> int:
    rows = bounds_table_rows(args.d_min, args.d_max, args.d_step, args.mc_samples, args.seed, args.chunk_size)
    cols = TABLE_COLUMNS + (MC_COLUMNS if args.mc_samples else [])
    _emit(args, render_records(rows, args.format, cols))
    return 0


# -- verify -----------------------------------------------------------------

def _run_check(name: str, args) -> dict:
    try:
        if name == "second-moment":
            return weingarten.second_moment_identity(args.d if args.d is not None else 4).as_dict()
        if name == "lemma-bracket":
            rep = weingarten.lemma_bracket_check(args.k or 2, args.d if args.d is not None else 16,
                                                 args.trials, args.seed, choi=args.choi)
            return rep.as_dict()
        if name == "moment-deviation":
            return weingarten.moment_deviation_check(args.r or 16, args.n or 2, args.k or 2,
                                                     args.trials, args.seed).as_dict()
        if name == "mixed-moment":
            parts = args.k_parts or [1, 1]
            rec = weingarten.mixed_moment_deviation_check(args.r or 4, args.n or 2, parts,
                                                          args.trials, args.seed).as_dict()
            rec["check"] = "mixed-moment"
            return rec
    except PreconditionError as exc:
        return {"check": name, "status": "skipped", "reason": str(exc)}
    raise ParameterError(f"unknown check {name!r}")


def cmd_verify(args) -> int:
    names = CHECKS if args.check == "all" else (args.check,)
    records = []
    for name in names:
        rec = _run_check(name, args)
        if "status" not in rec:
            rec["status"] = "pass" if rec["passed"] else "fail"
        records.append(rec)
    _emit(args, render_records(records, "json"))
    return 1 if any(r["status"] == "fail" for r in records) else 0


# -- parser -----------------------------------------------------------------

def _common(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="write to this path instead of standard output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="untelegraph", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="Monte Carlo value of an explicit attack")
    p.add_argument("--attack", choices=ATTACK_KINDS, required=True)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--m0", type=int, default=0)
    p.add_argument("--m1", type=int, default=1)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--z", type=float, default=4.0)
    p.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK_SIZE)
    _common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("exact", help="closed-form value or bound")
    p.add_argument("--formula", choices=FORMULAS, required=True)
    for name, typ in (("r", int), ("n", int), ("t", int), ("d", int), ("M", int), ("N", int), ("s", int),
                      ("Q", int), ("p", float), ("a", float), ("b", float), ("delta", float),
                      ("eta", float), ("target", float)):
        p.add_argument(f"--{name}", type=typ, default=None)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--log-base", choices=("2", "e"), default="2")
    _common(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("bounds-table", help="one-bit lower/upper bound curves over even d")
    p.add_argument("--d-min", type=int, default=2)
    p.add_argument("--d-max", type=int, default=64)
    p.add_argument("--d-step", type=int, default=2)
    p.add_argument("--mc-samples", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK_SIZE)
    _common(p)
    p.set_defaults(func=cmd_bounds_table)

    p = sub.add_parser("verify", help="certify the Weingarten moment identities and lemmas")
    p.add_argument("--check", choices=CHECKS + ("all",), default="all")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k-parts", type=int, nargs="+", default=None)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--choi", action=argparse.BooleanOptionalAction, default=None,
                   help="also check complete positivity through Choi matrices (default: when small)")
    p.add_argument("--out", help="write to this path instead of standard output")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"untelegraph: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
