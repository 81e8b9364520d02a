"""Young-Fenchel transform of ``h(p) = p ln psi(p)`` and the tail bound

    T(t) = mu{|v| >= t} <= exp(-h*(ln t)),   t >= e,

for functions ``v`` of unit Grand Lebesgue norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .gls import GeneratingFunction, TestFunction, gls_norm, sup_on_interval
from .quadrature import QuadratureConfig

E = math.e


class UnsupportedTail(ValueError):
    """The level-set measure of this function cannot be evaluated."""


@dataclass
class HStar:
    value: float
    argmax: Optional[float]
    capped: bool = False
    lower: float = math.nan  # attained value on the scanned range


def young_fenchel(psi: GeneratingFunction, v: float, cfg: Optional[QuadratureConfig] = None) -> HStar:
    """``h*(v) = sup_p (p v - p ln psi(p))`` over the finiteness set of psi.

    Uses the same grid and refinement engine as the Grand Lebesgue norm. If
    the objective still rises at the exponent cap the value is ``+inf`` with
    ``capped`` set and ``lower`` holding the best value actually attained.
    """
    v = float(v)
    if psi.is_extremal:
        val = psi.r * (v - math.log(psi(psi.r)))
        return HStar(val, psi.r, False, val)

    def obj(p):
        ps = psi(p)
        if math.isinf(ps):
            return -math.inf
        return p * (v - math.log(ps))

    res = sup_on_interval(obj, psi.a, psi.b)
    return HStar(res.value, res.argmax, res.capped, res.lower)


def _bound_from(h: HStar) -> float:
    # at the cap the true h* is at least the attained value, so the bound
    # computed from it is conservative
    hv = h.lower if h.capped else h.value
    return min(1.0, math.exp(-hv))


@dataclass
class TailBound:
    t: float
    bound: float
    h_star: HStar
    norm: float
    capped: bool = False


def tail_bound(f: TestFunction, psi: GeneratingFunction, t: float,
               cfg: Optional[QuadratureConfig] = None, norm: Optional[float] = None) -> TailBound:
    """Bound on ``mu{|f| / ||f||_G >= t}`` for ``t >= e``.

    ``norm`` may be passed to skip recomputing the Grand Lebesgue norm.
    """
    t = float(t)
    if not t >= E:
        raise ValueError(f"t = {t} below e; the tail bound is stated for t >= e only")
    if norm is None:
        norm = gls_norm(f, psi, cfg).value
    if not math.isfinite(norm):
        raise ValueError("Grand Lebesgue norm of f is not finite")
    if norm <= 0:
        raise ValueError("Grand Lebesgue norm of f is zero; there is nothing to normalize")
    h = young_fenchel(psi, math.log(t), cfg)
    return TailBound(t, _bound_from(h), h, norm, h.capped)


def raw_tail_bound(f: TestFunction, psi: GeneratingFunction, s: float,
                   cfg: Optional[QuadratureConfig] = None, norm: Optional[float] = None) -> TailBound:
    """Bound on ``mu{|f| >= s}`` through ``T_f(s) = T_v(s / ||f||_G)``."""
    if norm is None:
        norm = gls_norm(f, psi, cfg).value
    if not (math.isfinite(norm) and norm > 0):
        raise ValueError("Grand Lebesgue norm of f must be finite and positive")
    return tail_bound(f, psi, s / norm, cfg, norm=norm)


def level_set_measure(f: TestFunction, s: float) -> float:
    """``mu{|f| >= s}``: closed form when declared, root finding for monotone f."""
    m = f.tail_measure(s)
    if m is not None:
        return float(m)
    if f.monotone is None:
        raise UnsupportedTail(f"{f.name}: no closed-form tail and not declared monotone")
    lo, hi = f.support
    if s <= 0:
        return hi - lo

    def g(logd):
        # distance from the left end in log scale keeps resolution near lo
        x = lo + math.exp(logd)
        return float(abs(f(np.array([x]))[0])) - s

    d_lo = math.log(max(lo * 1e-15, 1e-300))
    d_hi = math.log(min(hi - lo, 1e300))
    g_lo, g_hi = g(d_lo), g(d_hi)
    if f.monotone == "decreasing":
        if g_lo < 0:
            return 0.0
        if g_hi >= 0:
            return hi - lo
        return math.exp(brentq(g, d_lo, d_hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))
    if g_hi < 0:
        return 0.0
    if g_lo >= 0:
        return hi - lo
    root = lo + math.exp(brentq(g, d_lo, d_hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))
    return hi - root


@dataclass
class TailCheck:
    norm: float
    rows: list = field(default_factory=list)  # (t, bound, measured, passed)
    skipped: list = field(default_factory=list)  # t values below e

    @property
    def passed(self) -> bool:
        return all(r[3] for r in self.rows)


def tail_check(f: TestFunction, psi: GeneratingFunction, t_grid: Sequence[float],
               cfg: Optional[QuadratureConfig] = None, tol: float = 1e-12) -> TailCheck:
    """Compare the measured tail of ``f / ||f||_G`` with the bound on a t-grid."""
    norm = gls_norm(f, psi, cfg).value
    if not math.isfinite(norm) or norm <= 0:
        raise ValueError("Grand Lebesgue norm of f must be finite and positive")
    report = TailCheck(norm)
    for t in t_grid:
        t = float(t)
        if t < E:
            report.skipped.append(t)
            continue
        b = tail_bound(f, psi, t, cfg, norm=norm)
        measured = level_set_measure(f, t * norm)
        report.rows.append((t, b.bound, measured, measured <= b.bound + tol))
    return report
