import math

import numpy as np
import pytest

from glsop.gls import (constant_psi, exponential, expr_function, extremal_psi, indicator, neglog,
                       power_psi, tail_power, trunc_power, two_sided_psi)
from glsop.tail import (UnsupportedTail, level_set_measure, raw_tail_bound, tail_bound, tail_check,
                        young_fenchel)


@pytest.mark.parametrize("k", [1.0, 2.0, 3.0])
@pytest.mark.parametrize("v", [1.0, 1.5, 2.5])
def test_young_fenchel_power_closed_form(k, v):
    # sup_p p v - (p/k) ln p is attained at p = e^(kv-1) with value e^(kv-1)/k
    if k * v < 1:
        pytest.skip("maximizer below the interval")
    h = young_fenchel(power_psi(k), v)
    assert not h.capped
    assert h.value == pytest.approx(math.exp(k * v - 1) / k, rel=1e-9)
    assert h.argmax == pytest.approx(math.exp(k * v - 1), rel=1e-4)


def test_young_fenchel_extremal():
    psi = extremal_psi(3.0)
    h = young_fenchel(psi, 2.0)
    assert h.value == pytest.approx(3.0 * (2.0 - math.log(psi(3.0))))
    f = indicator(0, 1)
    b = tail_bound(f, psi, 10.0, norm=1.0)
    # extremal bound is Chebyshev: t^-r
    assert b.bound == pytest.approx(10.0 ** -3 * psi(3.0) ** 3, rel=1e-12)


def test_young_fenchel_bounded_interval_uses_endpoint():
    # on [1, 4) the unconstrained maximizer e^(v-1) lies beyond 4 for v = 3
    h = young_fenchel(power_psi(1.0, b=4.0), 3.0)
    assert h.value == pytest.approx(4 * (3 - math.log(4)), rel=1e-5)


def test_t_below_e_refused():
    with pytest.raises(ValueError, match="below e"):
        tail_bound(exponential(), power_psi(1.0), 2.0)


@pytest.mark.parametrize("f, psi", [
    (neglog(1.0), power_psi(1.0, b=500.0)),
    (trunc_power(0.2), two_sided_psi(1, 4, 0.5, 0.5)),
    (exponential(1.0), power_psi(2.0)),
    (tail_power(2.0), two_sided_psi(1, 6, 0.0, 0.5)),
])
def test_tail_check_holds(f, psi):
    grid = [1.0, math.e, 3.0, 5.0, 10.0, 30.0, 100.0]
    rep = tail_check(f, psi, grid)
    assert rep.skipped == [1.0]
    assert len(rep.rows) == 6
    assert rep.passed
    for t, bound, measured, ok in rep.rows:
        assert 0 <= measured <= bound + 1e-12


def test_level_set_measure_by_root_finding():
    f = expr_function("exp(-x)", monotone="decreasing")
    assert level_set_measure(f, 0.25) == pytest.approx(math.log(4), rel=1e-12)
    g = expr_function("x", support=(0.0, 1.0), monotone="increasing")
    assert level_set_measure(g, 0.25) == pytest.approx(0.75, rel=1e-12)
    with pytest.raises(UnsupportedTail):
        level_set_measure(expr_function("x*exp(-x)"), 0.1)


def test_raw_tail_bound_rescales():
    f = exponential(1.0)
    psi = power_psi(2.0)
    rb = raw_tail_bound(f, psi, 5.0)
    assert rb.t == pytest.approx(5.0 / rb.norm)
    assert np.isclose(rb.bound, tail_bound(f, psi, 5.0 / rb.norm, norm=rb.norm).bound)


@pytest.mark.parametrize("psi", [power_psi(2.0), two_sided_psi(1, 4, 0.5, 0.5),
                                 power_psi(1.0, b=50.0)])
def test_fenchel_young_and_convexity(psi):
    vs = np.linspace(0.6, 3.0, 25)
    hs = np.array([young_fenchel(psi, v).value for v in vs])
    for p in np.geomspace(psi.a, min(psi.b, 1e3), 40)[:-1]:
        lp = math.log(psi(p))
        assert np.all(p * vs <= hs + p * lp + 1e-8)
    assert np.all(hs[:-2] - 2 * hs[1:-1] + hs[2:] >= -1e-8)


def test_extremal_tail_check_is_markov():
    # T(t) <= t^-r ||f||_r^r / ||f||_r^r: the Chebyshev-Markov inequality
    r = 2.0
    f = exponential(1.0)
    rep = tail_check(f, extremal_psi(r), [math.e, 4.0, 10.0])
    norm = f.lp_exact(r)
    assert rep.norm == pytest.approx(norm, rel=1e-10)
    for t, bound, measured, ok in rep.rows:
        assert bound == pytest.approx(t ** -r, rel=1e-12)
        assert measured == pytest.approx(math.log(1 / (t * norm)) if t * norm < 1 else 0.0)
        assert ok


def test_constant_psi_transform():
    psi = constant_psi(1.0)
    h = young_fenchel(psi, 0.5)
    assert math.isinf(h.value) and h.capped
    for v in (-1.0, -0.2, 0.0):
        assert young_fenchel(psi, v).value == pytest.approx(v, abs=1e-12)


def test_sqrt_psi_bound_and_monotonicity():
    psi = power_psi(2.0)
    f = exponential(1.0)
    for t in (math.e, 4.0, 7.0):
        exact = math.exp(-t * t / (2 * math.e))
        assert tail_bound(f, psi, t, norm=1.0).bound == pytest.approx(exact, rel=1e-6)
    ts = np.geomspace(math.e, 1e3, 40)
    bounds = [tail_bound(f, psi, t, norm=1.0).bound for t in ts]
    assert all(b <= a for a, b in zip(bounds, bounds[1:]))


def test_markov_tail_for_power_function():
    r, delta = 2.0, 0.5
    f = trunc_power(1 / (r + delta))
    rep = tail_check(f, extremal_psi(r), [math.e, 5.0, 20.0])
    assert rep.passed
    t, bound, measured, _ = rep.rows[0]
    assert bound == pytest.approx(math.e ** -r)
    assert measured <= bound
    bounded = tail_check(indicator(0, 2), extremal_psi(r), [10.0, 100.0])
    assert all(row[2] == 0.0 for row in bounded.rows)
