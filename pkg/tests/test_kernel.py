import numpy as np
import pytest

from glsop.expr import ExpressionError
from glsop.kernel import (KernelError, KernelNotVerified, builtin_kernel, check_homogeneity,
                          kernel_from_expression, kernel_from_spec, require_verified)


@pytest.mark.parametrize("family", ["hilbert", "hardy", "max"])
@pytest.mark.parametrize("m", [2, 3, 4])
def test_builtins_are_homogeneous(family, m):
    rep = check_homogeneity(builtin_kernel(family, m))
    assert rep.passed
    assert rep.max_violation <= 1e-12
    assert rep.n_checked == 3000


def test_builtin_values():
    x = np.array([1.0, 2.0])
    xs = np.array([[1.0, 2.0], [1.0, 3.0]])
    assert np.allclose(builtin_kernel("hilbert", 2).evaluate(x, xs), [1 / 16, 1 / 36])
    assert np.allclose(builtin_kernel("hardy", 2).evaluate(x, xs), [0.0, 0.0])
    assert np.allclose(builtin_kernel("hardy", 2).evaluate(np.array([3.0]), xs[:1]), [1 / 9])
    assert np.allclose(builtin_kernel("max", 2).evaluate(x, xs), [1 / 4, 1 / 9])


def test_reduced_matches_full():
    rng = np.random.default_rng(1)
    for fam in ("hilbert", "hardy", "max"):
        k = builtin_kernel(fam, 3)
        xs = 10 ** rng.uniform(-2, 2, size=(50, 3))
        assert np.allclose(k.reduced_eval(xs), k.evaluate(np.ones(50), xs), rtol=1e-14)


def test_inhomogeneous_expression_rejected():
    k = kernel_from_expression("1/(x + x1 + x2)^3", 2)
    assert not k.verified
    rep = check_homogeneity(k)
    assert not rep.passed
    assert rep.worst is not None
    with pytest.raises(KernelNotVerified):
        require_verified(k)


def test_homogeneous_expression_accepted():
    k = kernel_from_expression("1/(x + x1 + x2)^2", 2)
    assert check_homogeneity(k).passed
    xs = np.array([[0.5, 2.0]])
    assert np.allclose(k.reduced_eval(xs), builtin_kernel("hilbert", 2).reduced_eval(xs))


def test_spec_and_validation():
    assert kernel_from_spec({"family": "hardy", "m": 3}).m == 3
    assert kernel_from_spec({"expr": "max(x, x1, x2)^-2", "m": 2}).source == "max(x, x1, x2)^-2"
    with pytest.raises(KernelError, match="m >= 2"):
        builtin_kernel("hilbert", 1)
    with pytest.raises(KernelError):
        builtin_kernel("nope", 2)
    with pytest.raises(KernelError):
        kernel_from_spec({"m": 2})
    with pytest.raises(KernelError, match="unknown key"):
        kernel_from_spec({"family": "hilbert", "arity": 3})


def test_scaled_kernel():
    k = builtin_kernel("hilbert", 2).scaled(3.0)
    assert np.allclose(k.reduced_eval(np.array([[1.0, 1.0]])), [3 / 9])
    assert check_homogeneity(k).passed


def test_domain_predicate():
    k = builtin_kernel("hilbert", 2)
    assert k.domain_predicate((2.0, 2.0))
    assert not k.domain_predicate((1.0, 2.0))


@pytest.mark.parametrize("family", ["hilbert", "hardy", "max"])
def test_full_form_matches_reduced_form(family):
    # Q(x; xs) = x^-m Q(1; xs/x), sampled
    rng = np.random.default_rng(5)
    for m in (2, 3):
        k = builtin_kernel(family, m)
        x = 10 ** rng.uniform(-3, 3, 400)
        xs = x[:, None] * 10 ** rng.uniform(-1.5, 1.5, (400, m))
        full = k.evaluate(x, xs)
        red = x ** -m * k.reduced_eval(xs / x[:, None])
        assert np.allclose(full, red, rtol=1e-14, atol=0)


def test_documented_evaluation_points():
    hilbert = builtin_kernel("hilbert", 2)
    assert hilbert.reduced_eval(np.array([[1.0, 1.0]]))[0] == pytest.approx(1 / 9)
    hardy = builtin_kernel("hardy", 2)
    assert hardy.reduced_eval(np.array([[0.5, 0.9]]))[0] == 1.0
    assert hardy.reduced_eval(np.array([[0.5, 1.1]]))[0] == 0.0
    h3 = builtin_kernel("hilbert", 3)
    assert h3.evaluate(np.array([2.0]), np.array([[2.0, 2.0, 2.0]]))[0] == pytest.approx(1 / 512)


def test_parsed_kernel_examples():
    k = kernel_from_expression("1/(1+x1+x2)^2", 2)
    assert k.reduced_eval(np.array([[1.0, 1.0]]))[0] == pytest.approx(1 / 9)
    with pytest.raises(ExpressionError, match="unknown identifier"):
        kernel_from_expression("1/(1+x1+x7)^2", 2)
    assert not check_homogeneity(kernel_from_expression("max(1,x1,x2)^(-3)", 2),
                                 n_samples=100).passed
    assert not check_homogeneity(kernel_from_expression("1/(1+x1+x2)^3", 2)).passed


def test_unit_delta_has_no_violation():
    rep = check_homogeneity(kernel_from_expression("exp(-x1) * x2 / (x + x1)^3", 2), deltas=(1.0,))
    assert rep.max_violation == 0.0
