import math

import pytest
from scipy.special import gamma

from glsop.kernel import KernelNotVerified, builtin_kernel, kernel_from_expression
from glsop.theta import (IN_DM, NOT_IN_DM, UNKNOWN, ExponentVector, dm_scan, resultant_exponent,
                         theta, theta_closed_form)


def hilbert2(p1, p2):
    return gamma(1 - 1 / p1) * gamma(1 - 1 / p2) * gamma(1 / p1 + 1 / p2)


def test_exponent_vector_validation():
    with pytest.raises(ValueError, match="m >= 2"):
        ExponentVector((2.0,))
    with pytest.raises(ValueError):
        ExponentVector((0.5, 2.0))
    with pytest.raises(ValueError):
        ExponentVector((math.inf, 2.0))
    ev = ExponentVector((3, 6))
    assert ev.m == 2
    assert ev.resultant == pytest.approx(2.0)
    assert resultant_exponent((2, 2, 2)) == pytest.approx(2 / 3)


@pytest.mark.parametrize("p", [(2, 2), (4, 4), (3, 6), (1.05, 1.05), (1.02, 30)])
def test_hilbert_two(p):
    est = theta(builtin_kernel("hilbert", 2), p)
    assert est.membership == IN_DM
    assert est.theta == pytest.approx(hilbert2(*p), rel=1e-9)


def test_closed_forms():
    assert theta_closed_form("hilbert", 2, (2, 2)) == pytest.approx(math.pi, rel=1e-15)
    assert theta_closed_form("hardy", 3, (2, 3, 4)) == pytest.approx(2 * 1.5 * 4 / 3)
    # max: m * p * prod p_j/(p_j-1) with p the resultant
    assert theta_closed_form("max", 2, (2, 2)) == pytest.approx(2 * 1 * 4)
    assert theta_closed_form("hilbert", 2, (1, 2)) == math.inf


@pytest.mark.parametrize("family", ["hilbert", "hardy", "max"])
@pytest.mark.parametrize("p", [(2, 2, 2), (3, 3, 3), (2, 4, 8)])
def test_three_dimensional(family, p):
    est = theta(builtin_kernel(family, 3), p)
    assert est.theta == pytest.approx(theta_closed_form(family, 3, p), rel=1e-9)


def test_max_kernel_without_profile_is_honest():
    # the diagonal kink defeats the tensor rule; the estimate must say so
    # and its error bar must cover the true value
    exact = theta_closed_form("max", 2, (3, 3))
    assert theta(builtin_kernel("max", 2), (3, 3)).theta == pytest.approx(exact, rel=1e-12)
    plain = kernel_from_expression("max(x, x1, x2)^-2", 2).mark_verified()
    est = theta(plain, (3, 3))
    assert est.membership == UNKNOWN
    assert abs(est.theta - exact) <= est.estimate.abs_error_estimate


def test_outside_domain():
    est = theta(builtin_kernel("hardy", 2), (1, 2))
    assert est.membership == NOT_IN_DM
    assert est.theta == math.inf


def test_parsed_kernel_membership_from_numerics():
    k = kernel_from_expression("1/(x + x1 + x2)^2", 2)
    with pytest.raises(KernelNotVerified):
        theta(k, (2, 2))
    est = theta(k, (2, 2), unchecked=True)
    assert est.membership == IN_DM
    assert est.theta == pytest.approx(math.pi, rel=1e-9)
    bad = theta(k, (1, 2), unchecked=True)
    assert bad.membership != IN_DM
    assert not (math.isfinite(bad.theta) and bad.estimate.converged)


def test_dm_scan_open_box():
    scan = dm_scan(builtin_kernel("hilbert", 2), [1.0, 1.5, 2.0, 3.0, 4.0])
    assert len(scan.points) == 25
    assert scan.open_box
    assert all(v > 1 for v in scan.open_box_center)
    by_point = dict(zip(scan.points, scan.memberships))
    assert by_point[(1.0, 2.0)] == NOT_IN_DM
    assert by_point[(2.0, 3.0)] == IN_DM


def test_dm_scan_per_axis_grid():
    scan = dm_scan(builtin_kernel("hardy", 2), [[1.0, 2.0], [2.0, 3.0, 4.0]])
    assert len(scan.points) == 6
    assert not scan.open_box


@pytest.mark.parametrize("family", ["hilbert", "hardy"])
@pytest.mark.parametrize("c", [0.5, 3.0])
def test_scaling(family, c):
    k = builtin_kernel(family, 2)
    a = theta(k, (3, 6)).theta
    b = theta(k.scaled(c), (3, 6)).theta
    assert b == pytest.approx(c * a, rel=1e-12)


@pytest.mark.parametrize("family", ["hilbert", "hardy", "max"])
def test_symmetry_under_permutation(family):
    k = builtin_kernel(family, 3)
    a = theta(k, (2, 3, 5))
    b = theta(k, (5, 2, 3))
    tol = a.estimate.abs_error_estimate + b.estimate.abs_error_estimate
    assert abs(a.theta - b.theta) <= max(tol, 1e-12 * a.theta)


def test_hardy_decreasing_in_each_exponent():
    k = builtin_kernel("hardy", 2)
    grid = [1.5, 2.0, 3.0, 5.0, 9.0]
    for p2 in (2.0, 4.0):
        vals = [theta(k, (p1, p2)).theta for p1 in grid]
        assert all(b < a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("p", [(2, 2, 2), (2, 3, 6), (3, 3, 3)])
def test_hilbert_three_dimensional_oracle(p):
    est = theta(builtin_kernel("hilbert", 3), p)
    exact = theta_closed_form("hilbert", 3, p)
    assert est.theta == pytest.approx(exact, rel=1e-3)
    assert abs(est.theta - exact) <= max(1e-6 * exact, 5 * est.estimate.abs_error_estimate)


def test_dm_scan_documented_grids():
    scan = dm_scan(builtin_kernel("hilbert", 2), [1.25, 1.5, 2.0, 3.0, 4.0])
    assert set(scan.memberships) == {IN_DM}
    hardy = dm_scan(builtin_kernel("hardy", 2), [1.0, 2.0, 3.0])
    for pt, mem in zip(hardy.points, hardy.memberships):
        assert (mem == NOT_IN_DM) == (1.0 in pt)
    empty = dm_scan(builtin_kernel("hardy", 2), [1.0])
    assert not empty.open_box


def test_resultant_examples():
    assert resultant_exponent((2, 2)) == pytest.approx(1.0)
    assert resultant_exponent((3, 6)) == pytest.approx(2.0)
