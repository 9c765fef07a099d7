import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from i3322.bell import i3322_value
from i3322.bounds import (
    FSum,
    certified_max,
    claim_numerics,
    f_value,
    lemma_num2_audit,
    odd_auxiliary,
    odd_auxiliary_max,
    omega_closed,
    verify_d4,
    verify_f_cap,
)
from i3322.structure import NormalFormSpec, build_normal_form
from i3322.symmat import ValidationError

unit = st.floats(-1, 1)


@pytest.mark.parametrize(
    "x, y, expected",
    [(0, 0, 0.0), (1, -1, -1.0), (math.sqrt(3) / 2, math.sqrt(3) / 2, 0.5), (1, 1, math.sqrt(5) - 2)],
)
def test_f_examples(x, y, expected):
    assert f_value(x, y) == pytest.approx(expected, abs=1e-15)


def test_f_domain():
    with pytest.raises(ValidationError):
        f_value(1.1, 0)


@settings(max_examples=300, deadline=None)
@given(unit, unit)
def test_f_symmetric_and_capped(x, y):
    assert f_value(x, y) == f_value(y, x)
    assert f_value(x, y) <= 0.5 + 1e-15


def test_f_cap_on_grid():
    xs = np.linspace(-1, 1, 401)
    vals = [f_value(x, y) for x in xs for y in xs]
    assert max(vals) <= 0.5 + 1e-15


def test_omega_examples():
    assert omega_closed(NormalFormSpec("chain-even", 2, (1, -1))) == pytest.approx(0, abs=1e-15)
    assert omega_closed(NormalFormSpec("chain-even", 2, (1, 1))) == pytest.approx(
        (math.sqrt(5) - 2) / 2, abs=1e-15
    )
    v = omega_closed(NormalFormSpec("chain-odd", 3, (1, -0.5, -1)))
    assert f_value(1, -0.5) == pytest.approx(-0.4489533, abs=1e-7)
    assert v == pytest.approx((f_value(1, -0.5) + 0.5 + 1 - 1 + math.sqrt(0.75) / 2) / 3, abs=1e-15)
    assert v == pytest.approx(0.1613531308, abs=1e-10)


def test_omega_exchanged_unsupported():
    with pytest.raises(ValidationError, match="unsupported branch"):
        omega_closed(NormalFormSpec("chain-even-exchanged", 2, (1, 1)))


@pytest.mark.parametrize("d", range(2, 21, 2))
def test_cyclic_sqrt3_over_2_is_a_quarter(d):
    spec = NormalFormSpec("cyclic", d, (math.sqrt(3) / 2,) * (d // 2))
    assert abs(omega_closed(spec) - 0.25) <= 1e-12


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(["chain-even", "chain-odd", "cyclic"]), st.integers(1, 10),
       st.lists(unit, min_size=12, max_size=12), st.booleans(), st.booleans())
def test_omega_matches_direct(branch, k, free, b0, b1):
    if branch == "cyclic":
        d, coeffs = 2 * k, free[:k]
    elif branch == "chain-even":
        d = 2 * k
        coeffs = [1.0 if b0 else -1.0, *free[: k - 1], 1.0 if b1 else -1.0]
    else:
        d = 2 * k - 1
        coeffs = [1.0 if b0 else -1.0, *free[: k - 1], 1.0 if b1 else -1.0]
    spec = NormalFormSpec(branch, d, tuple(coeffs))
    assert abs(omega_closed(spec) - i3322_value(build_normal_form(spec)).value) <= 1e-9


def test_certified_max_dominates_grid():
    for rep in (claim_numerics(2, 1e-2), verify_d4(1e-2), claim_numerics(3, 1e-3)):
        assert rep.certified_max >= rep.grid_max
        assert rep.slack == pytest.approx(rep.certified_max - rep.grid_max, abs=1e-15)
        assert rep.holds == (rep.certified_max <= rep.claimed_bound)


def test_certified_max_is_an_upper_bound_on_samples():
    rng = np.random.default_rng(0)
    obj = FSum(2, [(0, 1), (1, 0.3)])
    rep = certified_max(obj, "test", 10.0, 1e-2)
    pts = rng.uniform(0, math.pi, (5000, 2))
    assert max(obj.value(p) for p in pts) <= rep.certified_max


def test_f_cap_grid_max_on_diagonal():
    rep = verify_f_cap(1e-3)
    x, y = rep.argmax
    assert rep.grid_max == pytest.approx(0.5, abs=1e-6)
    assert abs(abs(x) - math.sqrt(3) / 2) < 1e-3 and x == pytest.approx(y, abs=1e-9)
    assert rep.certified_max <= 0.5 + 2.5 * math.sqrt(2) * 1e-3
    # a maximum attained exactly at the claimed value cannot be certified by grid slack
    assert rep.certified_max > 0.5 and not rep.holds


def test_case1():
    rep = claim_numerics(1, 1e-3)
    assert rep.holds
    assert rep.grid_max == pytest.approx(0.2430, abs=2e-3)
    a, b, c = rep.argmax
    # the maximiser has a mirror image (a, b, c) -> (-c, -b, -a)
    assert a + b >= 0 and b + c <= 1e-12
    assert sorted(np.round(np.abs([a, b, c]), 2).tolist()) in ([0.47, 0.47, 0.85], [0.47, 0.47, 0.84])


def test_case2():
    rep = claim_numerics(2, 1e-3)
    assert rep.holds
    assert rep.grid_max == pytest.approx(0.1019, abs=2e-3)
    b, c = rep.argmax
    assert b == pytest.approx(0.48, abs=0.03) and c == pytest.approx(-b, abs=1e-3)


def test_case3():
    rep = claim_numerics(3, 1e-4)
    assert rep.holds
    assert rep.grid_max == pytest.approx(0.36716, abs=5e-4)
    assert rep.argmax[0] == pytest.approx(0.87, abs=0.01)


def test_unknown_case():
    with pytest.raises(ValidationError):
        claim_numerics(4)


def test_d4():
    rep = verify_d4(1e-3)
    assert rep.holds and rep.strict
    assert rep.grid_max == pytest.approx(2 * (math.sqrt(2) - 1.5), abs=1e-9)
    assert rep.argmax[0] == pytest.approx(0, abs=1e-6)


def test_report_rendering():
    rep = verify_d4(1e-2)
    assert "verdict: holds" in rep.text()
    row = rep.csv_row().split(",")
    assert row[0] == "d4" and row[4] == "holds" and len(row) == 7
    assert float(row[3]) == pytest.approx(rep.certified_max, abs=1e-12)


def test_odd_auxiliary():
    assert odd_auxiliary(1, -2 / math.sqrt(5), -1) == pytest.approx(math.sqrt(5) / 2, abs=1e-15)
    value, (c1, t, cd) = odd_auxiliary_max()
    assert value == pytest.approx(math.sqrt(5) / 2, abs=1e-15)
    assert (c1, t) == (1.0, -1.0) and cd == pytest.approx(-2 / math.sqrt(5))
    grid = max(odd_auxiliary(a, c, b) for a in (-1, 1) for b in (-1, 1) for c in np.linspace(-1, 1, 2001))
    assert grid <= value + 1e-12


def test_chain_bound_audit():
    rep = lemma_num2_audit(range(2, 13), step=1e-3)
    assert rep.d4.holds and rep.chain_ok and rep.holds
    values = [v for _, _, v, _ in rep.chain]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
    assert all(v < 0.25 for v in values)
    assert rep.auxiliary_max > 0.25
    assert "exceeds 1/4" in rep.text()
