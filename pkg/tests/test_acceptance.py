"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line at the stated tolerance;
the lines are repeated in the terminal summary.
"""
import itertools
import math
import time

import numpy as np
import pytest

from conftest import random_projector
from i3322.ascent import optimize_omega, random_strategy, restart_rng, run_restarts, schmidt_seesaw
from i3322.bell import classical_max, i3322_value
from i3322.bounds import claim_numerics, omega_closed, verify_d4, verify_f_cap
from i3322.soscheck import builtin_case3, verify
from i3322.structure import NormalFormSpec, align_bases, build_normal_form, cs_decompose

RESULTS = []


def record(n, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def test_criterion_01_classical_bound():
    t = time.perf_counter()
    best, maximizers = classical_max()
    ms = 1e3 * (time.perf_counter() - t)
    ok = best == 0
    assert record(1, ok, f"classical max = {best} over 64 assignments, {len(maximizers)} maximizers ({ms:.2f} ms)")


def test_criterion_02_one_epr_value():
    v = i3322_value(build_normal_form(NormalFormSpec("cyclic", 2, (math.sqrt(3) / 2,)))).value
    assert record(2, abs(v - 0.25) <= 1e-12, f"cyclic d=2 value {v:.15f}, |v - 1/4| = {abs(v - 0.25):.1e} (tol 1e-12)")


_SEESAW = {}


def _seesaw_runs():
    if not _SEESAW:
        for d in (2, 3, 4, 5, 6, 8):
            _SEESAW[d] = run_restarts(d, 50, seed=0)
    return _SEESAW


def test_criterion_03_uniform_seesaw_bound():
    runs = _seesaw_runs()
    worst = max(r.best_value for r in runs.values())
    per_dim = ", ".join(f"d{d}={r.best_value:.6f}" for d, r in runs.items())
    assert record(3, worst <= 0.25 + 1e-6, f"max seesaw value {worst:.12f} <= 0.25 + 1e-6 ({per_dim})")


def test_criterion_04_formula_direct_equivalence():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        branch = rng.choice(["chain-even", "chain-odd", "cyclic"])
        if branch == "cyclic":
            d = 2 * int(rng.integers(1, 11))
            coeffs = rng.uniform(-1, 1, d // 2)
        else:
            d = 2 * int(rng.integers(1, 11)) if branch == "chain-even" else 2 * int(rng.integers(1, 11)) - 1
            k = d // 2 + 1 if branch == "chain-even" else (d + 3) // 2
            coeffs = np.concatenate([rng.choice([-1.0, 1.0], 1), rng.uniform(-1, 1, k - 2), rng.choice([-1.0, 1.0], 1)])
        spec = NormalFormSpec(str(branch), d, tuple(float(c) for c in coeffs))
        worst = max(worst, abs(omega_closed(spec) - i3322_value(build_normal_form(spec)).value))
    assert record(4, worst <= 1e-9, f"max |closed - direct| = {worst:.2e} over 1000 specs, d <= 20 (tol 1e-9)")


def test_criterion_05_cyclic_attainment():
    cyc = {d: optimize_omega("cyclic", d)[1] for d in (2, 4, 6, 8)}
    chain = {d: optimize_omega("chain-even", d)[1] for d in (2, 4, 6, 8)}
    ok = all(abs(v - 0.25) <= 1e-9 for v in cyc.values())
    ok &= all(v < 0.25 for v in chain.values())
    ok &= abs(chain[2] - (math.sqrt(5) / 2 - 1)) <= 1e-6
    detail = ("cyclic " + ", ".join(f"d{d}={v:.12f}" for d, v in cyc.items())
              + "; chain-even " + ", ".join(f"d{d}={v:.6f}" for d, v in chain.items()))
    assert record(5, ok, detail)


def test_criterion_06_bound_claims():
    reps = {
        "f-cap": verify_f_cap(1e-3),
        "case1": claim_numerics(1, 1e-3),
        "case2": claim_numerics(2, 1e-3),
        "case3": claim_numerics(3, 1e-4),
        "d4": verify_d4(1e-3),
    }
    near = {
        "case1": abs(reps["case1"].grid_max - 0.2430) <= 2e-3,
        "case2": abs(reps["case2"].grid_max - 0.1019) <= 2e-3,
        "case3": abs(reps["case3"].grid_max - 0.36716) <= 5e-4,
    }
    parts = []
    for name, rep in reps.items():
        flag = rep.holds and near.get(name, True)
        parts.append(f"{name} {'ok' if flag else 'FAILS'} (grid {rep.grid_max:.6f}, certified {rep.certified_max:.7f}"
                     f" vs {rep.claimed_bound:g}{' strict' if rep.strict else ''})")
    ok = all(r.holds for r in reps.values()) and all(near.values())
    assert record(6, ok, "; ".join(parts))


def test_criterion_07_sos_certificate():
    v = verify(builtin_case3(), 10_000, seed=0)
    low = verify(builtin_case3().with_bound(0.36))
    # the [3e-4, 6e-4] window is the Schur-complement margin of the bound entry;
    # the smallest eigenvalue is printed alongside for reference
    ok = v.accepted and 3e-4 <= v.bound_slack <= 6e-4 and v.identity_residual <= 1e-10 and not low.accepted
    assert record(7, ok, f"accepted={v.accepted}, Schur margin {v.bound_slack:.4e} in [3e-4, 6e-4], "
                         f"min eigenvalue {v.psd_margin:.4e}, residual {v.identity_residual:.1e} over 10^4 points, "
                         f"t=0.36 rejected={not low.accepted}")


def test_criterion_08_structure_round_trips():
    rng = np.random.default_rng(8)
    worst_rec, worst_tr = 0.0, 0.0
    for _ in range(1000):
        d = int(rng.integers(2, 13))
        p = random_projector(d, int(rng.integers(0, d + 1)), rng)
        q = random_projector(d, int(rng.integers(0, d + 1)), rng)
        dec = cs_decompose(p, q)
        worst_rec = max(worst_rec, dec.reconstruction_error(p, q) / d)
        worst_tr = max(worst_tr, abs(np.trace(p @ q) - dec.trace_pq()))
    align_ok = True
    for _ in range(300):
        n = int(rng.integers(1, 7))
        a, b = rng.integers(0, 4, n).astype(float), rng.integers(0, 4, n).astype(float)
        best = max(a[list(p)] @ b for p in itertools.permutations(range(n)))
        align_ok &= bool(abs(a[align_bases(a, b)] @ b - best) <= 1e-12)
    ok = worst_rec <= 1e-10 and worst_tr <= 1e-9 and align_ok
    assert record(8, ok, f"reconstruction/dim {worst_rec:.1e} (tol 1e-10), trace identity {worst_tr:.1e} (tol 1e-9), "
                         f"align_bases = brute force on 300 cases: {align_ok}")


def test_criterion_09_monotonicity():
    runs = _seesaw_runs()
    worst = min(t.min_increment() for r in runs.values() for t in r.traces)
    steps = sum(len(t.steps) for r in runs.values() for t in r.traces)
    assert record(9, worst >= -1e-12, f"min best-response increment {worst:.2e} over {steps} steps (tol -1e-12)")


def test_criterion_10_exploratory_free_weights():
    rows = []
    for d in (8, 12, 16):
        res = schmidt_seesaw(d, 3, seed=0)
        rows.append((d, res.value, res.entropy))
    ok = all(v >= 0.25 - 1e-9 for _, v, _ in rows)
    above = any(v > 0.25 + 1e-9 for _, v, _ in rows)
    detail = ", ".join(f"d{d}: {v:.12f} (entropy {e:.4f} bits)" for d, v, e in rows)
    detail += "; strict excess over 1/4 " + ("observed" if above else "not observed at this scale")
    assert record(10, ok, detail)
