"""The sharp constant

    Theta_m(p) = int_{R_+^m} |Q(1, y)| prod_j y_j**(-1/p_j) dy

and the set of exponent vectors where it is finite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._parallel import pmap
from .kernel import HomogeneousKernel, KernelError, require_verified
from .quadrature import CONVERGED, IntegralEstimate, QuadratureConfig, integrate_halfline_m

IN_DM = "in_Dm"
NOT_IN_DM = "not_in_Dm"
UNKNOWN = "unknown"

CLOSED_FORM_FAMILIES = ("hilbert", "hardy", "max")


@dataclass(frozen=True)
class ExponentVector:
    """Exponents ``p_1 .. p_m``, each in ``[1, inf)``, with m >= 2."""

    p: tuple

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        if len(p) < 2:
            raise ValueError("m >= 2 required")
        for v in p:
            if not math.isfinite(v):
                raise ValueError(f"exponent {v} is not finite; p_j must lie in [1, inf)")
            if v < 1.0:
                raise ValueError(f"exponent {v} below 1; p_j must lie in [1, inf)")
        object.__setattr__(self, "p", p)

    @property
    def m(self) -> int:
        return len(self.p)

    @property
    def resultant(self) -> float:
        return resultant_exponent(self.p)

    def __iter__(self):
        return iter(self.p)

    def __len__(self):
        return len(self.p)


def as_exponents(p) -> ExponentVector:
    return p if isinstance(p, ExponentVector) else ExponentVector(tuple(p))


def resultant_exponent(p) -> float:
    """Harmonic resultant ``(sum 1/p_j)**-1``."""
    p = p.p if isinstance(p, ExponentVector) else p
    return 1.0 / math.fsum(1.0 / v for v in p)


@dataclass
class ThetaEstimate:
    theta: float
    estimate: IntegralEstimate
    membership: str
    p: tuple = ()
    note: str = ""

    @property
    def finite(self) -> bool:
        return math.isfinite(self.theta)


def theta(k: HomogeneousKernel, p, cfg: Optional[QuadratureConfig] = None, *,
          unchecked: bool = False) -> ThetaEstimate:
    """Numerical value of the sharp constant for kernel ``k`` at exponents ``p``.

    The analytic domain rule of the kernel, when it has one, decides
    membership. Without it a converged integral gives ``in_Dm`` and anything
    else gives ``unknown``.
    """
    if not unchecked:
        require_verified(k)
    ev = as_exponents(p)
    if ev.m != k.m:
        raise KernelError(f"kernel has arity {k.m} but {ev.m} exponents were given")
    cfg = cfg or QuadratureConfig()
    weights = [-1.0 / v for v in ev.p]
    if k.profile is not None and all(v > 1.0 for v in ev.p):
        est = _theta_profile(k, ev, cfg)
    else:
        def integrand(y):
            return np.abs(k.reduced_eval(y))

        est = integrate_halfline_m(integrand, weights, cfg, breakpoints=k.breakpoints,
                                   support=(0.0, k.support))
    note = est.note
    if k.domain_predicate is not None:
        if not k.domain_predicate(ev.p):
            return ThetaEstimate(math.inf, est, NOT_IN_DM, ev.p, "outside the analytic domain")
        if est.verdict == CONVERGED:
            return ThetaEstimate(float(est.value), est, IN_DM, ev.p, note)
        # analytically finite but the numbers did not settle
        return ThetaEstimate(float(est.value), est, UNKNOWN, ev.p,
                             f"analytically finite but quadrature {est.verdict}; {note}")
    if est.verdict == CONVERGED:
        return ThetaEstimate(float(est.value), est, IN_DM, ev.p, note)
    value = math.inf if est.verdict == "diverging" else float(est.value)
    return ThetaEstimate(value, est, UNKNOWN, ev.p, note)


def _theta_profile(k, ev, cfg):
    # Q(1, y) = g(max y): the weighted volume of [0, t]^m is
    # F(t) = C t**(m - 1/p), so Theta = int |g(t)| F'(t) dt in one dimension.
    c = math.prod(v / (v - 1.0) for v in ev.p)
    expo = k.m - 1.0 / ev.resultant
    scale = k.scale

    def integrand(t):
        with np.errstate(over="ignore", under="ignore"):
            return np.abs(scale * k.profile(t)) * c * expo * t ** (expo - 1.0)

    return integrate_halfline_m(lambda pts: integrand(pts[:, 0]), [0.0], cfg,
                                breakpoints=[k.breakpoints], support=[(0.0, k.support)])


def theta_closed_form(family: str, m: int, p) -> float:
    """Exact sharp constants for the built-in families.

    hilbert: with ``a_j = 1 - 1/p_j`` the Dirichlet integral
    ``int (1 + sum y)**-m prod y_j**(a_j - 1) dy = prod Gamma(a_j) Gamma(m - sum a_j) / Gamma(m)``
    gives ``Gamma(sum 1/p_j) prod Gamma(1 - 1/p_j) / (m - 1)!``.
    hardy: ``prod p_j / (p_j - 1)``.
    max: ``m * p * prod p_j / (p_j - 1)`` with ``p`` the resultant; the unit
    cube contributes the hardy value and the shell ``max y = t > 1`` the rest.

    Returns ``inf`` when some ``p_j <= 1``.
    """
    if family not in CLOSED_FORM_FAMILIES:
        raise KernelError(f"no closed form for family {family!r}")
    p = [float(v) for v in p]
    if len(p) != m:
        raise ValueError(f"expected {m} exponents, got {len(p)}")
    if any(v <= 1.0 for v in p):
        return math.inf
    if family == "hilbert":
        s = math.fsum(1.0 / v for v in p)
        logv = math.lgamma(s) + math.fsum(math.lgamma(1.0 - 1.0 / v) for v in p) - math.lgamma(m)
        return math.exp(logv)
    hardy = math.prod(v / (v - 1.0) for v in p)
    if family == "hardy":
        return hardy
    return m * resultant_exponent(p) * hardy


@dataclass
class DmScan:
    axes: list
    points: list  # exponent tuples in row-major grid order
    results: list  # ThetaEstimate per point
    open_box: bool = False
    open_box_center: Optional[tuple] = None
    memberships: list = field(default_factory=list)


def dm_scan(k: HomogeneousKernel, grid, cfg: Optional[QuadratureConfig] = None, *,
            unchecked: bool = False) -> DmScan:
    """Membership verdicts on a grid of exponent vectors.

    ``grid`` is either one list of values used on every axis or one list per
    axis. ``open_box`` is set when some in_Dm point has its full ``3**m``
    grid neighbourhood in_Dm, a discrete stand-in for an open subset.
    """
    m = k.m
    if len(grid) > 0 and isinstance(grid[0], (list, tuple, np.ndarray)):
        axes = [sorted(float(v) for v in ax) for ax in grid]
    else:
        axes = [sorted(float(v) for v in grid)] * m
    if len(axes) != m:
        raise ValueError(f"grid has {len(axes)} axes, kernel arity is {m}")
    if not unchecked:
        require_verified(k)
    shape = tuple(len(ax) for ax in axes)
    index = list(itertools.product(*[range(n) for n in shape]))
    points = [tuple(axes[j][i[j]] for j in range(m)) for i in index]
    results = pmap(lambda pt: theta(k, pt, cfg, unchecked=True), points)
    memberships = [r.membership for r in results]
    member = dict(zip(index, memberships))
    scan = DmScan(axes, points, results, memberships=memberships)
    offsets = list(itertools.product((-1, 0, 1), repeat=m))
    for i, pt in zip(index, points):
        if member[i] != IN_DM:
            continue
        if all(member.get(tuple(a + d for a, d in zip(i, off))) == IN_DM for off in offsets):
            scan.open_box = True
            scan.open_box_center = pt
            break
    return scan
