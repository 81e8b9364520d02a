import math

import numpy as np
import pytest
from scipy.special import gamma

from glsop.quadrature import (CONVERGED, DIVERGING, QuadratureConfig, axis_rule,
                              integrate_halfline_1, integrate_halfline_m)


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(rel_tol=0)
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=2)
    with pytest.raises(ValueError):
        QuadratureConfig(max_evals=10)
    assert QuadratureConfig().replace(seed=4).seed == 4


@pytest.mark.parametrize("a", [0.5, 0.9, 0.975, 0.99, 0.998])
def test_power_singularity_at_zero(a):
    # int_0^1 x^-a dx = 1/(1-a)
    est = integrate_halfline_1(lambda x: np.where(x <= 1, 1.0, 0.0), breakpoints=[1.0], weight=-a)
    assert est.verdict == CONVERGED
    assert est.value * (1 - a) == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("a", [0.1, 0.5, 0.02])
def test_gamma_integrals(a):
    est = integrate_halfline_1(lambda x: np.exp(-x), weight=a - 1)
    assert est.converged
    assert est.value == pytest.approx(gamma(a), rel=1e-10)


@pytest.mark.parametrize("s", [0.5, 0.06, 0.02])
def test_slow_algebraic_tail(s):
    # int_0^inf (1+x)^(-1-s) dx = 1/s; the tail beyond the last node is large
    est = integrate_halfline_1(lambda x: (1 + x) ** (-1 - s))
    assert est.converged
    assert est.value * s == pytest.approx(1.0, rel=1e-10)


def test_stieltjes_type():
    est = integrate_halfline_1(lambda x: 1 / (1 + x), weight=-0.5)
    assert est.value == pytest.approx(math.pi, rel=1e-11)


@pytest.mark.parametrize("f, w", [
    (lambda x: 1 / x, 0.0),
    (lambda x: 1 / (1 + x), 0.0),
    (lambda x: np.exp(-x), -1.0),
])
def test_divergent_integrals_flagged(f, w):
    est = integrate_halfline_1(f, weight=w)
    assert est.verdict == DIVERGING
    assert math.isinf(est.value)


def test_tensor_2d():
    est = integrate_halfline_m(lambda y: (1 + y[:, 0] + y[:, 1]) ** -3.0, [0.0, 0.0])
    assert est.converged
    assert est.value == pytest.approx(0.5, rel=1e-11)


def test_tensor_2d_with_weights_dirichlet():
    # int (1+y1+y2)^-2 y1^-1/2 y2^-1/2 = Gamma(1/2)^2 Gamma(1) / Gamma(2) = pi
    est = integrate_halfline_m(lambda y: (1 + y.sum(axis=1)) ** -2.0, [-0.5, -0.5])
    assert est.value == pytest.approx(math.pi, rel=1e-11)


def test_per_axis_support_and_breakpoints():
    # indicator of [0,1] x [0,2] with a jump inside
    f = lambda y: np.where(y[:, 1] <= 0.5, 2.0, 1.0)
    est = integrate_halfline_m(f, [0.0, 0.0], breakpoints=[(), (0.5,)],
                               support=[(0.0, 1.0), (0.0, 2.0)])
    assert est.value == pytest.approx(2 * 0.5 + 1.5, rel=1e-12)


def test_qmc_in_four_dimensions():
    # Dirichlet: int (1+sum y)^-4 prod y^-1/4 = Gamma(3/4)^4 Gamma(1) / Gamma(4)
    exact = gamma(0.75) ** 4 / 6
    est = integrate_halfline_m(lambda y: (1 + y.sum(axis=1)) ** -4.0, [-0.25] * 4,
                               QuadratureConfig(rel_tol=1e-3))
    assert est.method == "qmc"
    assert est.value == pytest.approx(exact, rel=1e-3)


def test_qmc_is_seeded():
    f = lambda y: (1 + y.sum(axis=1)) ** -4.0
    cfg = QuadratureConfig(rel_tol=1e-3, seed=7)
    a = integrate_halfline_m(f, [-0.25] * 4, cfg)
    b = integrate_halfline_m(f, [-0.25] * 4, cfg)
    assert a.value == b.value


def test_nonfinite_values_make_result_inconclusive():
    est = integrate_halfline_1(lambda x: np.where(np.abs(x - 1) < 1e-3, np.nan, np.exp(-x)))
    assert est.n_nonfinite > 0
    assert est.verdict != CONVERGED


def test_axis_rule_log_piece_resolves_decades():
    # int_{1e-30}^1 dx/x = 30 ln 10 needs the logarithmic map
    r = axis_rule(2.0 ** -4, 0.0, (), 1e-30, 1.0)
    assert np.sum(r.w / r.x) == pytest.approx(30 * math.log(10), rel=1e-12)


def test_tiny_lower_end_with_infinite_upper_end():
    # int_{1e-30}^inf y^-0.6 (1+y)^-2 dy, compared with the full integral
    full = gamma(0.4) * gamma(1.6)
    est = integrate_halfline_m(lambda y: (1 + y[:, 0]) ** -2.0, [-0.6],
                               support=[(1e-30, math.inf)])
    missing = (1e-30) ** 0.4 / 0.4
    assert est.value == pytest.approx(full - missing, rel=1e-10)


@pytest.mark.parametrize("alpha", [2.0, 10.0])
def test_linearity(alpha):
    f = lambda x: np.exp(-x) / (1 + x)
    a = integrate_halfline_1(f, weight=-0.3)
    b = integrate_halfline_1(lambda x: alpha * f(x), weight=-0.3)
    assert b.value == pytest.approx(alpha * a.value, rel=1e-12)
    g = lambda y: (1 + y.sum(axis=1)) ** -3.5
    a = integrate_halfline_m(g, [-0.5, -0.25])
    b = integrate_halfline_m(lambda y: alpha * g(y), [-0.5, -0.25])
    assert b.value == pytest.approx(alpha * a.value, rel=1e-12)


@pytest.mark.parametrize("weights, power", [([-0.5, -0.5], 2.0), ([-0.25, -0.5, -0.25], 3.0)])
def test_tensor_and_qmc_agree(weights, power):
    f = lambda y: (1 + y.sum(axis=1)) ** -power
    cfg = QuadratureConfig(rel_tol=1e-3, seed=3)
    t = integrate_halfline_m(f, weights, cfg, method="tensor")
    q = integrate_halfline_m(f, weights, cfg, method="qmc")
    assert q.method == "qmc" and t.method != "qmc"
    assert abs(t.value - q.value) <= 3 * (t.abs_error_estimate + q.abs_error_estimate)


def _oracle_suite():
    # (estimate, exact) pairs over the 1-D and tensor cases above plus a few more
    cases = []
    for a in (0.5, 0.9, 0.99):
        cases.append((integrate_halfline_1(lambda x: np.where(x <= 1, 1.0, 0.0),
                                           breakpoints=[1.0], weight=-a), 1 / (1 - a)))
    for a in (0.1, 0.5, 0.9):
        cases.append((integrate_halfline_1(lambda x: np.exp(-x), weight=a - 1), gamma(a)))
    for s in (0.5, 0.1, 0.02):
        cases.append((integrate_halfline_1(lambda x: (1 + x) ** (-1 - s)), 1 / s))
    cases.append((integrate_halfline_1(lambda x: 1 / (1 + x), weight=-0.5), math.pi))
    cases.append((integrate_halfline_1(lambda x: 1 / (1 + x * x)), math.pi / 2))
    cases.append((integrate_halfline_1(lambda x: np.exp(-x * x)), math.sqrt(math.pi) / 2))
    cases.append((integrate_halfline_m(lambda y: (1 + y[:, 0] + y[:, 1]) ** -3.0, [0, 0]), 0.5))
    cases.append((integrate_halfline_m(lambda y: (1 + y.sum(axis=1)) ** -2.0, [-0.5, -0.5]),
                  math.pi))
    for w in (-0.25, -0.5):
        # Dirichlet integral in three dimensions
        exact = gamma(1 + w) ** 3 * gamma(4 - 3 * (1 + w)) / gamma(4)
        cases.append((integrate_halfline_m(lambda y: (1 + y.sum(axis=1)) ** -4.0, [w] * 3), exact))
    cases.append((integrate_halfline_m(lambda y: (1 + y.sum(axis=1)) ** -4.0, [-0.25] * 4,
                                       QuadratureConfig(rel_tol=1e-3)), gamma(0.75) ** 4 / 6))
    return cases


def test_error_estimates_are_honest():
    cases = _oracle_suite()
    honest = sum(abs(e.value - exact) <= 5 * e.abs_error_estimate + 1e-15 * abs(exact)
                 for e, exact in cases)
    assert honest >= 0.95 * len(cases)


def test_separable_exponential():
    est = integrate_halfline_m(lambda y: np.exp(-y[:, 0] - y[:, 1]), [0.0, 0.0])
    assert est.value == pytest.approx(1.0, abs=1e-8)


def test_weight_minus_one_is_flagged_diverging():
    # the integrand behaves like x1^-1 near zero
    est = integrate_halfline_m(lambda y: (1 + y[:, 0] + y[:, 1]) ** -2.0, [-1.0, -0.5])
    assert est.verdict == DIVERGING


def test_simple_one_dimensional_cases():
    assert integrate_halfline_1(lambda x: np.exp(-x)).value == pytest.approx(1.0, abs=1e-10)
    ind = integrate_halfline_1(lambda x: np.ones_like(x), support=(0.0, 1.0))
    assert ind.value == pytest.approx(1.0, abs=1e-12)
    root = integrate_halfline_1(lambda x: np.where(x <= 1, x ** -0.5, 0.0), breakpoints=[1.0])
    assert root.value == pytest.approx(2.0, abs=1e-8)
