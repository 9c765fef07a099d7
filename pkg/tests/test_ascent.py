import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import P3, random_projector
from i3322.ascent import (
    _weight_step,
    best_response,
    optimize_omega,
    random_strategy,
    restart_rng,
    run_restarts,
    schmidt_seesaw,
    seesaw,
    weight_form,
)
from i3322.bell import LABELS, Strategy, i3322_value
from i3322.bounds import f_value
from i3322.structure import NormalFormSpec, build_normal_form
from i3322.symmat import ValidationError


def test_best_response_a3_on_chain_blocks():
    s = build_normal_form(NormalFormSpec("chain-even", 6, (1, 0.4, -0.3, -1)))
    a3 = best_response(s, "A3")
    # P3 on each 2-dim block of Bob, nothing on the 1-dim boundary blocks
    for i, j in ((1, 2), (3, 4)):
        assert np.allclose(a3[i:j + 1, i:j + 1], P3, atol=1e-12)
    assert a3[0, 0] == 0 and a3[5, 5] == 0


def test_best_response_equal_settings_gives_zero(rng):
    p = random_projector(3, 1, rng)
    z = np.zeros((3, 3))
    s = Strategy((p, p, z), (z, z, z))
    assert np.array_equal(best_response(s, "B3"), np.zeros((3, 3)))


def test_best_response_unknown_label(epr25):
    with pytest.raises(ValidationError):
        best_response(epr25, "C1")


def test_best_response_beats_random_alternatives(rng):
    s = random_strategy(2, rng)
    for label in LABELS:
        old = i3322_value(s).value
        new = i3322_value(s.replace(**{label: best_response(s, label)})).value
        assert new >= old - 1e-12
        for _ in range(10_000 // len(LABELS)):
            alt = random_projector(2, int(rng.integers(0, 3)), rng)
            assert i3322_value(s.replace(**{label: alt})).value <= new + 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.sampled_from(LABELS), st.booleans())
def test_best_response_monotone(d, seed, label, weighted):
    rng = np.random.default_rng(seed)
    s = random_strategy(d, rng)
    if weighted:
        lam = np.abs(rng.standard_normal(d))
        s = s.replace(schmidt=lam / np.linalg.norm(lam))
    new = s.replace(**{label: best_response(s, label)})
    assert i3322_value(new).value >= i3322_value(s).value - 1e-12


def test_seesaw_fixed_point(epr25):
    final, trace = seesaw(epr25)
    assert trace.converged and trace.sweeps == 1
    assert trace.final_value == pytest.approx(0.25, abs=1e-12)


def test_seesaw_zero_is_stationary():
    z = np.zeros((3, 3))
    final, trace = seesaw(Strategy((z, z, z), (z, z, z)))
    assert trace.final_value == 0 and trace.converged


def test_seesaw_trace_monotone_and_bounded():
    for i in range(20):
        _, trace = seesaw(random_strategy(2, restart_rng(7, i)))
        assert trace.min_increment() >= -1e-12
        assert trace.final_value <= 0.25 + 1e-9
        assert [lbl for _, lbl, _ in trace.steps[:6]] == list(LABELS)


def test_seesaw_deterministic():
    s = random_strategy(4, restart_rng(3, 0))
    _, t1 = seesaw(s)
    _, t2 = seesaw(s)
    assert t1.steps == t2.steps


def test_random_strategy_ranks():
    for d in (1, 2, 5):
        s = random_strategy(d, np.random.default_rng(d))
        for m in s.A + s.B:
            r = round(np.trace(m))
            assert (0 <= r <= 1) if d == 1 else (1 <= r <= d - 1)


def test_run_restarts_small():
    res = run_restarts(2, 20, seed=7)
    assert res.best_value <= 0.25 + 1e-6
    assert res.best_value == max(res.values)
    assert res.best_value == pytest.approx(i3322_value(res.best).value, abs=1e-12)
    assert run_restarts(2, 20, seed=7).values == res.values


def test_run_restarts_dim1_is_classical():
    assert run_restarts(1, 10, seed=0).best_value == 0


def test_weight_form_reproduces_value(rng):
    for _ in range(50):
        s = random_strategy(4, rng)
        lam = np.abs(rng.standard_normal(4))
        lam /= np.linalg.norm(lam)
        k = weight_form(list(s.A + s.B))
        assert lam @ k @ lam == pytest.approx(i3322_value(s.replace(schmidt=lam)).value, abs=1e-12)


def test_weight_step_monotone_and_nonnegative(rng):
    for _ in range(50):
        s = random_strategy(4, rng)
        ops = [np.array(m) for m in s.A + s.B]
        lam = np.full(4, 0.5)
        before = lam @ weight_form(ops) @ lam
        new = _weight_step(ops, lam)
        assert np.all(new >= 0)
        after = i3322_value(Strategy(tuple(ops[:3]), tuple(ops[3:]), new / np.linalg.norm(new))).value
        assert after >= before - 1e-12


def test_schmidt_seesaw_free_weights_dim2():
    res = schmidt_seesaw(2, 10, seed=0)
    assert res.value >= 0.25 - 1e-9
    assert 0 <= res.entropy <= 1 + 1e-12


def test_optimize_chain_even_d2():
    spec, value = optimize_omega("chain-even", 2)
    assert value == pytest.approx(math.sqrt(5) / 2 - 1, abs=1e-12)
    assert spec.coeffs in ((1.0, 1.0), (-1.0, -1.0))


def test_optimize_chain_even_d4_beats_the_boundary_family():
    # the (1, c, 1) family peaks near c = 0.9 at about 0.1825 ...
    assert f_value(1, 0.9) == pytest.approx(0.365036, abs=1e-6)
    local = i3322_value(build_normal_form(NormalFormSpec("chain-even", 4, (1, 0.9, 1)))).value
    assert local == pytest.approx(0.1825, abs=1e-4)
    # ... but the global optimum sits on (1, 0, -1)
    spec, value = optimize_omega("chain-even", 4)
    assert value == pytest.approx(0.25 + (2 * math.sqrt(2) - 3) / 4, abs=1e-12)
    assert np.allclose(spec.coeffs, (1, 0, -1), atol=1e-6)
    assert local < value < 0.25


@pytest.mark.parametrize("d", [2, 4, 6])
def test_optimize_cyclic(d):
    spec, value = optimize_omega("cyclic", d)
    assert abs(value - 0.25) <= 1e-9
    assert np.allclose(np.abs(spec.coeffs), math.sqrt(3) / 2, atol=1e-6)


def test_optimize_exchanged_uses_direct_value():
    spec, value = optimize_omega("chain-odd-exchanged", 3)
    assert spec.branch == "chain-odd-exchanged"
    assert value == i3322_value(build_normal_form(spec)).value <= 0.25


def test_optimize_bad_step():
    with pytest.raises(ValidationError):
        optimize_omega("cyclic", 2, step=0)


@pytest.mark.parametrize("d", [1, 2, 5, 8])
def test_epr_blocks(d):
    from i3322.ascent import epr_blocks

    s = epr_blocks(d)
    assert s.dim == d
    assert i3322_value(s).value == pytest.approx(0.25 * (d - d % 2) / d, abs=1e-12)


def test_schmidt_seesaw_warm_start_floor():
    res = schmidt_seesaw(5, 2, seed=1)
    # the odd zero block is dropped by the weights, recovering 1/4
    assert res.value >= 0.25 - 1e-9
    cold = schmidt_seesaw(5, 2, seed=1, warm_start=False)
    assert cold.values[1] == res.values[1]
