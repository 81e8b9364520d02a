"""Kernels Q(x; x_1, ..., x_m) on the positive half-line that are homogeneous
of degree -m.

Built-in kernels are stored in reduced form ``Q(1, y)`` and the full kernel is
rebuilt from ``Q(x; xs) = x**-m * Q(1, xs / x)``, so they are homogeneous by
construction. Parsed kernels are evaluated exactly as written and have to pass
:func:`check_homogeneity` before the rest of the library accepts them.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import expr as _expr

BUILTIN_FAMILIES = ("hilbert", "hardy", "max")

# denominator floor for the relative homogeneity defect
EPS_FLOOR = 1e-300


class KernelError(ValueError):
    pass


class KernelNotVerified(KernelError):
    """The kernel has not passed the homogeneity gate."""


@dataclass(frozen=True)
class KernelExpression:
    """Parsed kernel text in the variables ``x`` (output point) and ``x1..xm``."""

    tree: _expr.Node
    m: int
    text: str

    @property
    def variables(self) -> tuple[str, ...]:
        return ("x",) + tuple(f"x{j}" for j in range(1, self.m + 1))

    def to_text(self) -> str:
        return _expr.to_text(self.tree)

    def evaluate(self, x: np.ndarray, xs: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xs = np.asarray(xs, dtype=float)
        env = {"x": x}
        for j in range(self.m):
            env[f"x{j + 1}"] = xs[..., j]
        out = _expr.evaluate(self.tree, env)
        return np.broadcast_to(out, np.broadcast_shapes(x.shape, xs.shape[:-1])).astype(float)

    def value_at(self, x: float, xs: Sequence[float]) -> float:
        """Pointwise value; raises :class:`glsop.expr.NonFiniteValue` with a reason."""
        env = {"x": float(x)}
        env.update({f"x{j + 1}": float(v) for j, v in enumerate(xs)})
        return _expr.evaluate_point(self.tree, env)


def parse_kernel(text: str, m: int) -> KernelExpression:
    """Parse a kernel expression of arity ``m``.

    The variables are ``x`` for the output point and ``x1 .. xm`` for the
    integration variables; referring to ``x7`` when ``m = 2`` is an error.
    Homogeneity is *not* checked here.
    """
    if m < 2:
        raise KernelError("m >= 2 required")
    names = ("x",) + tuple(f"x{j}" for j in range(1, m + 1))
    tree = _expr.parse(text, names)
    return KernelExpression(tree=tree, m=m, text=text)


@dataclass(frozen=True)
class HomogeneousKernel:
    """A kernel of arity ``m`` together with what the integrators need to know.

    Attributes
    ----------
    m : int
        Number of function arguments.
    reduced : callable
        ``y (N, m) -> Q(1, y) (N,)`` before ``scale`` is applied.
    source : str
        Family tag or the expression text.
    full : callable or None
        Direct full evaluation ``(x (N,), xs (N, m)) -> (N,)``. ``None`` means
        the full kernel is rebuilt from ``reduced`` by the homogeneity law.
    domain_predicate : callable or None
        Exact rule ``p -> bool`` deciding whether the sharp constant is finite.
    breakpoints : tuple of float
        Reduced coordinates where ``Q(1, .)`` jumps or kinks along each axis.
    support : float
        ``Q(1, y)`` vanishes when some ``y_j`` exceeds this value.
    profile : callable or None
        ``g`` with ``Q(1, y) = g(max_j y_j)``, for kernels that only see the
        largest coordinate. Lets the sharp constant collapse to one dimension.
    """

    m: int
    reduced: Callable[[np.ndarray], np.ndarray]
    source: str
    params: tuple = ()
    full: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    domain_predicate: Optional[Callable[[Sequence[float]], bool]] = None
    breakpoints: tuple = ()
    support: float = math.inf
    symmetric: bool = False
    family: Optional[str] = None
    verified: bool = False
    scale: float = 1.0
    expression: Optional[KernelExpression] = field(default=None, compare=False)
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def reduced_eval(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.m:
            raise KernelError(f"expected points with {self.m} coordinates, got {y.shape[-1]}")
        out = self.reduced(y)
        return out * self.scale if self.scale != 1.0 else out

    def evaluate(self, x, xs) -> np.ndarray:
        """Full kernel ``Q(x; xs)`` for ``x > 0``."""
        x = np.asarray(x, dtype=float)
        xs = np.asarray(xs, dtype=float)
        if self.full is not None:
            out = self.full(x, xs)
            return out * self.scale if self.scale != 1.0 else out
        with np.errstate(over="ignore", under="ignore"):
            return x ** (-self.m) * self.reduced_eval(xs / x[..., None])

    def scaled(self, c: float) -> "HomogeneousKernel":
        if not c > 0:
            raise KernelError("scale factor must be positive")
        return dataclasses.replace(self, scale=self.scale * c)

    def mark_verified(self) -> "HomogeneousKernel":
        return dataclasses.replace(self, verified=True)

    def describe(self) -> dict:
        if self.family is not None:
            return {"family": self.family, "m": self.m}
        return {"expr": self.source, "m": self.m}


def _hilbert(m):
    def reduced(y):
        with np.errstate(over="ignore", under="ignore"):
            return (1.0 + y.sum(axis=-1)) ** (-m)

    return reduced


def _hardy(y):
    return np.where(y.max(axis=-1) <= 1.0, 1.0, 0.0)


def _max(m):
    def reduced(y):
        with np.errstate(over="ignore", under="ignore"):
            return np.maximum(1.0, y.max(axis=-1)) ** (-m)

    return reduced


def _max_profile(m):
    def g(t):
        with np.errstate(over="ignore", under="ignore"):
            return np.maximum(1.0, t) ** (-m)

    return g


def _full(name, m):
    # direct formulas in the original variables, so the homogeneity check
    # compares two independent evaluations
    def hilbert(x, xs):
        with np.errstate(over="ignore", under="ignore"):
            return (x + xs.sum(axis=-1)) ** (-m)

    def hardy(x, xs):
        with np.errstate(over="ignore", under="ignore"):
            return np.where(xs.max(axis=-1) <= x, x ** (-m), 0.0)

    def max_(x, xs):
        with np.errstate(over="ignore", under="ignore"):
            return np.maximum(x, xs.max(axis=-1)) ** (-m)

    return {"hilbert": hilbert, "hardy": hardy, "max": max_}[name]


def _all_above_one(p: Sequence[float]) -> bool:
    # Beta-type exponents 1 - 1/p_j must be positive; the outer condition
    # sum_j 1/p_j > 0 always holds for finite p_j.
    return all(pj > 1.0 for pj in p)


def builtin_kernel(name: str, m: int, params: Sequence[float] = ()) -> HomogeneousKernel:
    """Instantiate a built-in kernel family.

    ``hilbert``: ``(x + sum x_j)**-m``; ``hardy``: ``x**-m`` on ``max x_j <= x``;
    ``max``: ``max(x, x_1, .., x_m)**-m``. None of them take parameters.
    """
    if name not in BUILTIN_FAMILIES:
        raise KernelError(f"unknown kernel family {name!r}; expected one of {BUILTIN_FAMILIES}")
    if int(m) != m or m < 2:
        raise KernelError("m >= 2 required")
    m = int(m)
    if len(params) != 0:
        raise KernelError(f"kernel family {name!r} takes 0 parameters, got {len(params)}")
    common = dict(m=m, source=name, family=name, symmetric=True, verified=True,
                  domain_predicate=_all_above_one, full=_full(name, m))
    if name == "hilbert":
        return HomogeneousKernel(reduced=_hilbert(m), **common)
    if name == "hardy":
        return HomogeneousKernel(reduced=_hardy, breakpoints=(1.0,), support=1.0, **common)
    return HomogeneousKernel(reduced=_max(m), breakpoints=(1.0,), profile=_max_profile(m), **common)


def kernel_from_expression(text: str, m: int, breakpoints: Sequence[float] = ()) -> HomogeneousKernel:
    kexpr = parse_kernel(text, m)

    def reduced(y):
        return kexpr.evaluate(np.ones(y.shape[:-1]), y)

    return HomogeneousKernel(
        m=m,
        reduced=reduced,
        source=text,
        full=kexpr.evaluate,
        breakpoints=tuple(float(b) for b in breakpoints),
        expression=kexpr,
    )


def kernel_from_spec(spec: dict) -> HomogeneousKernel:
    """Build a kernel from ``{"family": .., "m": ..}`` or ``{"expr": .., "m": ..}``."""
    extra = sorted(set(spec) - {"family", "expr", "m", "params", "breakpoints"})
    if extra:
        raise KernelError(f"kernel spec: unknown key(s) {extra}")
    if "family" in spec:
        return builtin_kernel(spec["family"], spec.get("m", 2), spec.get("params", ()))
    if "expr" in spec:
        return kernel_from_expression(spec["expr"], spec.get("m", 2), spec.get("breakpoints", ()))
    raise KernelError("kernel spec needs either 'family' or 'expr'")


@dataclass
class HomogeneityReport:
    max_violation: float
    passed: bool
    n_checked: int
    skipped: list = field(default_factory=list)  # (x, xs, delta) triples with non-finite values
    worst: Optional[tuple] = None


def check_homogeneity(
    kernel: HomogeneousKernel,
    n_samples: int = 1000,
    deltas: Sequence[float] = (0.5, 2.0, 10.0),
    tol: float = 1e-12,
    seed: int = 0,
) -> HomogeneityReport:
    """Sample ``|Q(dx; d xs) - d**-m Q(x; xs)|`` relative to ``|d**-m Q(x; xs)|``.

    Points are log-uniform on ``[1e-3, 1e3]**(m+1)``. Samples where either side
    is not finite are skipped and listed in the report.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if any(not d > 0 for d in deltas):
        raise ValueError("every delta must be positive")
    m = kernel.m
    rng = np.random.default_rng(seed)
    pts = 10.0 ** rng.uniform(-3.0, 3.0, size=(n_samples, m + 1))
    x, xs = pts[:, 0], pts[:, 1:]
    base = kernel.evaluate(x, xs)
    worst_val, worst = 0.0, None
    skipped = []
    n_checked = 0
    for d in deltas:
        with np.errstate(all="ignore"):
            scaled = kernel.evaluate(d * x, d * xs)
            target = d ** (-m) * base
            defect = np.abs(scaled - target) / (np.abs(target) + EPS_FLOOR)
        ok = np.isfinite(scaled) & np.isfinite(target)
        for i in np.flatnonzero(~ok):
            skipped.append((float(x[i]), tuple(map(float, xs[i])), float(d)))
        n_checked += int(ok.sum())
        if ok.any():
            i = int(np.argmax(np.where(ok, defect, -1.0)))
            if defect[i] > worst_val or worst is None:
                worst_val = float(defect[i])
                worst = (float(x[i]), tuple(map(float, xs[i])), float(d))
    if n_checked == 0:
        raise KernelError("kernel is non-finite at every homogeneity sample")
    return HomogeneityReport(worst_val, worst_val <= tol, n_checked, skipped, worst)


def require_verified(kernel: HomogeneousKernel) -> None:
    if not kernel.verified:
        raise KernelNotVerified(
            "kernel has not passed check_homogeneity; verify it first or pass unchecked=True"
        )
