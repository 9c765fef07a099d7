"""Command-line front end.

Exit codes: 0 success, 1 a checked claim or certificate failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import csv
import statistics
import sys

from . import ascent, bounds, soscheck
from .bell import classical_max, entanglement_entropy, i3322_value, load_strategy, save_strategy
from .structure import BRANCHES, NormalFormSpec, build_normal_form
from .symmat import ValidationError

EXIT_OK, EXIT_CLAIM, EXIT_INPUT = 0, 1, 2
SCAN_HEADER = ["dim", "branch", "value", "coeffs"]


def _f12(x: float) -> str:
    return f"{x:.12f}"


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"--coeffs: cannot parse {text!r} as comma-separated numbers") from None


def _dims(text: str) -> list[int]:
    parts = text.split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise ValidationError(f"--dims: expected A:B or A:B:STEP, got {text!r}") from None
    if len(nums) == 2:
        nums.append(1)
    if len(nums) != 3 or nums[2] < 1 or nums[0] < 1 or nums[1] < nums[0]:
        raise ValidationError(f"--dims: expected A:B:STEP with 1 <= A <= B and STEP >= 1, got {text!r}")
    return list(range(nums[0], nums[1] + 1, nums[2]))


def _dim_from_coeffs(branch: str, n: int) -> int:
    if branch == "cyclic":
        return 2 * n
    if branch.startswith("chain-even"):
        return 2 * (n - 1)
    return 2 * n - 3


# -- commands ----------------------------------------------------------------

def cmd_value(args, out) -> int:
    s = load_strategy(args.strategy)
    bv = i3322_value(s)
    print(f"value: {_f12(bv.value)}", file=out)
    for label, v in bv.breakdown():
        print(f"  {label:<10} {_f12(v)}", file=out)
    return EXIT_OK


def cmd_classical(args, out) -> int:
    best, maximizers = classical_max()
    print(f"max = {best}", file=out)
    print(f"maximizers: {len(maximizers)} of 64 deterministic assignments", file=out)
    for a, b in maximizers:
        print(f"  A = {a}  B = {b}", file=out)
    return EXIT_OK


def cmd_seesaw(args, out) -> int:
    if args.dim < 1 or args.restarts < 1:
        raise ValidationError("--dim and --restarts must be at least 1")
    if args.schmidt == "uniform":
        res = ascent.run_restarts(args.dim, args.restarts, args.seed, args.tol, args.max_sweeps)
        best, best_value, values, best_index = res.best, res.best_value, res.values, res.best_index
        extra = f"converged: {res.converged} of {args.restarts}"
    else:
        res = ascent.schmidt_seesaw(args.dim, args.restarts, args.seed, args.tol, args.max_sweeps)
        best, best_value, values, best_index = res.strategy, res.value, res.values, res.best_index
        extra = None
    print(f"dim: {args.dim}  restarts: {args.restarts}  seed: {args.seed}  schmidt: {args.schmidt}", file=out)
    print(f"best value: {_f12(best_value)} (restart {best_index})", file=out)
    print(
        f"restart values: min {_f12(min(values))}  median {_f12(statistics.median(values))}"
        f"  max {_f12(max(values))}",
        file=out,
    )
    if extra:
        print(extra, file=out)
    print(f"entanglement entropy: {_f12(entanglement_entropy(best.schmidt))} bits", file=out)
    if args.out:
        save_strategy(best, args.out)
        print(f"wrote {args.out}", file=out)
    return EXIT_OK


def cmd_normal_form(args, out) -> int:
    if args.optimize:
        if args.dim is None:
            raise ValidationError("--optimize needs --dim")
        spec, _ = ascent.optimize_omega(args.branch, args.dim, step=args.step, seed=args.seed)
    else:
        if args.coeffs is None:
            raise ValidationError("--coeffs is required unless --optimize is given")
        coeffs = _floats(args.coeffs)
        dim = args.dim if args.dim is not None else _dim_from_coeffs(args.branch, len(coeffs))
        spec = NormalFormSpec(args.branch, dim, tuple(coeffs))
    s = build_normal_form(spec)
    direct = i3322_value(s).value
    print(f"branch: {spec.branch}  dim: {spec.dim}", file=out)
    print("coeffs: " + ", ".join(_f12(c) for c in spec.coeffs), file=out)
    if spec.exchanged:
        print("closed-form value: n/a (no closed form for exchanged branches)", file=out)
    else:
        closed = bounds.omega_closed(spec)
        print(f"closed-form value: {_f12(closed)}", file=out)
    print(f"direct value: {_f12(direct)}", file=out)
    if not spec.exchanged:
        print(f"difference: {abs(closed - direct):.3e}", file=out)
    if args.out:
        save_strategy(s, args.out)
        print(f"wrote {args.out}", file=out)
    return EXIT_OK


def cmd_bounds(args, out) -> int:
    step = args.step if args.step is not None else (1e-4 if args.claim == "case3" else 1e-3)
    if step <= 0:
        raise ValidationError("--step must be positive")
    if args.claim == "f-cap":
        rep = bounds.verify_f_cap(step)
    elif args.claim == "d4":
        rep = bounds.verify_d4(step)
    else:
        rep = bounds.claim_numerics(int(args.claim[-1]), step)
    print(rep.csv_row() if args.csv else rep.text(), file=out)
    return EXIT_OK if rep.holds else EXIT_CLAIM


def cmd_certify(args, out) -> int:
    cert = soscheck.load_certificate(args.cert)
    if args.bound is not None:
        cert = cert.with_bound(args.bound)
    v = soscheck.verify(cert, args.samples, args.seed)
    print(f"certificate: {args.cert}  bound t = {cert.bound:.12g}", file=out)
    print(v.text(), file=out)
    return EXIT_OK if v.accepted else EXIT_CLAIM


def cmd_scan(args, out) -> int:
    rows = []
    for d in _dims(args.dims):
        spec, value = ascent.optimize_omega(args.branch, d, step=args.step, seed=args.seed)
        rows.append((d, spec, value))
        print(f"{d},{args.branch},{_f12(value)}," + ",".join(_f12(c) for c in spec.coeffs), file=out)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(SCAN_HEADER)
            for d, spec, value in rows:
                w.writerow([d, spec.branch, repr(value), *[repr(c) for c in spec.coeffs]])
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="i3322", description="I3322 Bell functional toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("value", help="evaluate a strategy file")
    sp.add_argument("--strategy", required=True)
    sp.set_defaults(func=cmd_value)

    sp = sub.add_parser("classical", help="enumerate deterministic strategies")
    sp.set_defaults(func=cmd_classical)

    sp = sub.add_parser("seesaw", help="seesaw ascent from seeded random starts")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--restarts", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--schmidt", choices=("uniform", "free"), default="uniform")
    sp.add_argument("--tol", type=float, default=ascent.DEFAULT_TOL)
    sp.add_argument("--max-sweeps", type=int, default=ascent.DEFAULT_MAX_SWEEPS)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_seesaw)

    sp = sub.add_parser("normal-form", help="build or optimise a joint normal form")
    sp.add_argument("--branch", choices=BRANCHES, required=True)
    sp.add_argument("--coeffs", help="comma-separated; use --coeffs=-1,... for a leading minus")
    sp.add_argument("--optimize", action="store_true")
    sp.add_argument("--dim", type=int)
    sp.add_argument("--step", type=float, default=0.1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_normal_form)

    sp = sub.add_parser("bounds", help="certified grid check of a numeric claim")
    sp.add_argument("--claim", choices=("f-cap", "case1", "case2", "case3", "d4"), required=True)
    sp.add_argument("--step", type=float)
    sp.add_argument("--csv", action="store_true", help="print a CSV row instead of text")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("certify", help="verify a sum-of-squares certificate")
    sp.add_argument("--cert", required=True, help="certificate JSON file or 'builtin'")
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--bound", type=float, help="override the certified bound t")
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("scan", help="optimise a branch across dimensions")
    sp.add_argument("--branch", choices=BRANCHES, required=True)
    sp.add_argument("--dims", required=True, help="A:B:STEP, inclusive")
    sp.add_argument("--step", type=float, default=0.1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_scan)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
