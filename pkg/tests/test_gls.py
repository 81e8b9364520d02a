import math

import numpy as np
import pytest
from scipy.special import gammaln

from glsop.gls import (CONVERGED, SpecError, constant_function, constant_psi, exponential,
                       expr_function, extremal_psi, function_from_spec, gls_norm, indicator,
                       lp_norm, neglog, power_psi, psi_from_spec, psi_infimum, sup_on_interval,
                       tail_power, trunc_power, two_sided_psi, validate_known_lp, zero_function)
from glsop.quadrature import DIVERGING

FAMILIES = [
    indicator(0.5, 3.0),
    trunc_power(0.3),
    trunc_power(0.1, hi=2.0),
    tail_power(1.5, lo=2.0),
    exponential(0.7),
    neglog(3.0),
]


@pytest.mark.parametrize("f", FAMILIES, ids=lambda f: f.name)
@pytest.mark.parametrize("p", [1.0, 1.7, 3.0, 8.0])
def test_lp_norm_matches_closed_form(f, p):
    n = lp_norm(f, p)
    exact = f.lp_exact(p)
    if math.isinf(exact):
        assert n.verdict == DIVERGING
        return
    assert n.verdict == CONVERGED
    assert n.value == pytest.approx(exact, rel=1e-9)


@pytest.mark.parametrize("f", FAMILIES, ids=lambda f: f.name)
def test_validate_known_lp(f):
    assert validate_known_lp(f)


def test_lp_norm_divergence_and_inf():
    assert lp_norm(trunc_power(0.5), 2.5).verdict == DIVERGING
    assert lp_norm(tail_power(0.5), 1.5).value == math.inf
    assert lp_norm(indicator(0, 2, c=3.0), math.inf).value == 3.0
    with pytest.raises(ValueError):
        lp_norm(neglog(), math.inf)
    with pytest.raises(ValueError):
        lp_norm(indicator(), 0.5)


def test_edge_mass_beyond_double_range_is_diverging():
    # x^-1/5 on (0,1] is not in L_50; the mass sits below 1e-100
    n = lp_norm(trunc_power(0.2), 50.0)
    assert math.isinf(n.value)


def test_expression_function_matches_family():
    f = expr_function("exp(-2*x)", monotone="decreasing", sup_bound=1.0)
    assert lp_norm(f, 3.0).value == pytest.approx(exponential(2.0).lp_exact(3.0), rel=1e-10)


def test_spec_round_trip():
    f = function_from_spec({"family": "trunc_power", "alpha": 0.25, "hi": 2.0})
    assert f.lp_exact(2.0) == pytest.approx(trunc_power(0.25, 2.0).lp_exact(2.0))
    psi = psi_from_spec({"family": "two_sided", "a": 1, "b": 4, "alpha": 0.5, "beta": 0.5})
    assert psi(2.0) == pytest.approx(two_sided_psi(1, 4, 0.5, 0.5)(2.0))
    with pytest.raises(SpecError):
        function_from_spec({"family": "nope"})
    with pytest.raises(SpecError):
        trunc_power(-1.0)
    with pytest.raises(SpecError, match="unknown key"):
        psi_from_spec({"family": "power", "k": 2})
    with pytest.raises(SpecError, match="unknown key"):
        function_from_spec({"family": "exponential", "lambda": 2})


def test_gls_norm_two_sided_oracle():
    # independent value from a 10^5-point grid plus golden refinement
    g = gls_norm(trunc_power(0.2), two_sided_psi(1, 4, 0.5, 0.5))
    assert g.status == "ok"
    assert g.value == pytest.approx(1.9849469569055478, rel=1e-9)
    assert 1 < g.argmax < 4


def test_gls_norm_neglog_linear_psi():
    # ||log(L/x)||_p = (L Gamma(p+1))^(1/p) <= p for L = 1, equality at p = 1
    g = gls_norm(neglog(1.0), power_psi(1.0, b=500.0))
    assert g.value == pytest.approx(1.0, rel=1e-9)
    assert g.argmax == pytest.approx(1.0, abs=1e-6)


def test_gls_norm_exponential_sqrt_psi():
    g = gls_norm(exponential(1.0), power_psi(2.0))
    assert g.value == pytest.approx(1.0, rel=1e-9)


def test_extremal_norm_is_scaled_lp_norm():
    f = trunc_power(0.2)
    psi = extremal_psi(3.0)
    g = gls_norm(f, psi)
    assert g.status == "extremal"
    assert g.value == pytest.approx(f.lp_exact(3.0) / psi(3.0), rel=1e-10)


def test_capped_and_infinite_statuses():
    # neglog grows like p/e; a constant psi cannot contain it
    capped = gls_norm(neglog(1.0), constant_psi(1.0))
    assert capped.status == "capped" and math.isinf(capped.value)
    # x^-1/5 leaves L_p at p = 5 while psi stays finite up to 10
    inf = gls_norm(trunc_power(0.2), power_psi(1.0, b=10.0))
    assert inf.status == "lp infinite" and math.isinf(inf.value)


def test_zero_function_has_zero_norm():
    assert gls_norm(zero_function(), power_psi(1.0)).value == 0.0


@pytest.mark.parametrize("f, psi", [
    (trunc_power(0.2), two_sided_psi(1, 4, 0.5, 0.5)),
    (neglog(2.0), power_psi(1.0, b=200.0)),
    (exponential(0.5), power_psi(2.0)),
    (tail_power(2.0), two_sided_psi(1, 6, 0.0, 0.5)),
    (indicator(0, 3), power_psi(1.0)),
])
def test_norm_dominates_every_lp(f, psi):
    g = gls_norm(f, psi)
    hi = min(psi.b, 1e3)
    grid = np.geomspace(psi.a, hi, 65)[:-1] if math.isfinite(psi.b) else np.geomspace(psi.a, hi, 64)
    for p in grid:
        exact = f.lp_exact(p)
        assert exact <= g.value * psi(p) * (1 + 1e-9)


def test_psi_infimum_and_validation():
    assert psi_infimum(power_psi(1.0)) == pytest.approx(1.0)
    with pytest.raises(SpecError):
        two_sided_psi(4, 1)


def test_sup_on_interval_parabola():
    res = sup_on_interval(lambda p: -(math.log(p) - 1.0) ** 2, 1.0, 100.0)
    assert res.argmax == pytest.approx(math.e, rel=1e-5)
    assert res.value == pytest.approx(0.0, abs=1e-12)
    assert not res.capped


def test_neglog_closed_form_is_gamma():
    assert neglog(2.0).lp_exact(3.0) == pytest.approx(math.exp((math.log(2) + gammaln(4)) / 3))


@pytest.mark.parametrize("c", [0.25, 7.0])
def test_norm_is_homogeneous(c):
    f = trunc_power(0.2)
    psi = two_sided_psi(1, 4, 0.5, 0.5)
    assert gls_norm(f.scaled(c), psi).value == pytest.approx(c * gls_norm(f, psi).value, rel=1e-10)


@pytest.mark.parametrize("f, small, large", [
    # psi_1 <= psi_2 pointwise on the common interval
    (trunc_power(0.2), two_sided_psi(1, 4, 0.5, 0.5), two_sided_psi(1, 3, 0.5, 0.5)),
    (exponential(1.0), power_psi(3.0), power_psi(2.0)),
    (neglog(1.0), power_psi(1.0, b=200.0), power_psi(1.0, b=200.0).scaled(2.0)),
])
def test_dominance(f, small, large):
    grid = np.geomspace(small.a, min(small.b, 1e3), 50)[:-1]
    assert all(small(p) <= large(p) for p in grid)
    assert gls_norm(f, small).value >= gls_norm(f, large).value


def test_documented_norm_values():
    assert lp_norm(constant_function(2.5), 3.0).value == pytest.approx(2.5, rel=1e-12)
    f = trunc_power(0.25)
    assert lp_norm(f, 2.0).value == pytest.approx(math.sqrt(2), rel=1e-10)
    assert math.isinf(lp_norm(f, 4.0).value)
    assert gls_norm(f, extremal_psi(2.0)).value == pytest.approx(math.sqrt(2), rel=1e-10)
    assert gls_norm(constant_function(1.0), power_psi(2.0)).value == pytest.approx(1.0, rel=1e-12)
    # (4 - p) (4 / (4 - p))^(1/p) decreases on (1, 4); a 10^4-point grid puts the sup at p = 1
    g = gls_norm(f, two_sided_psi(1, 4, 0.0, 1.0))
    assert g.value == pytest.approx(4.0, rel=1e-9)
