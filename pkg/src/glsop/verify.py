"""The multilinear operator

    M[Q](f)(x) = int_{R_+^m} Q(x; x_1..x_m) prod_j f_j(x_j) dx,

its L_p norm, the inequality ||M f||_p <= Theta_m(p) prod_j ||f_j||_{p_j}
and a probe showing that Theta_m cannot be lowered.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from ._parallel import pmap
from .gls import TestFunction, lp_norm, tail_power
from .kernel import HomogeneousKernel, KernelError, require_verified
from .quadrature import (CONVERGED, DIVERGING, INCONCLUSIVE, IntegralEstimate, QuadratureConfig,
                         integrate_halfline_1, integrate_halfline_m)
from .theta import as_exponents, resultant_exponent, theta

INNER_REL_TOL = 1e-7
OUTER_FACTOR = 10.0
CRUDE_REL = 1e-3
CRUDE_MAX_EVALS = 1_000_000
# bound on the log-measure spanned by the outer tanh-sinh nodes (|ln x| < 700)
LOG_SPAN = 1400.0
INNER_ABS_TOL = 1e-300

PASS = "pass"
FAIL = "fail"
UNKNOWN = "unknown"
VACUOUS = "vacuous"


class SharpnessViolation(ArithmeticError):
    """A probe ratio exceeded the sharp constant beyond the error budget."""


def _inner_cfg(cfg: QuadratureConfig) -> QuadratureConfig:
    # inner values far out in x are tiny yet carry weight x in the outer
    # integral, so they are held to a purely relative tolerance
    return cfg.replace(rel_tol=max(cfg.rel_tol, INNER_REL_TOL), abs_tol=INNER_ABS_TOL)


def _outer_cfg(cfg: QuadratureConfig) -> QuadratureConfig:
    inner = _inner_cfg(cfg)
    return cfg.replace(rel_tol=min(0.5, OUTER_FACTOR * inner.rel_tol))


def _check_args(k, fs):
    if len(fs) != k.m:
        raise KernelError(f"kernel arity {k.m} needs {k.m} functions, got {len(fs)}")


def _apply(k: HomogeneousKernel, fs: Sequence[TestFunction], x: float,
           cfg: QuadratureConfig, detect_divergence: bool = True) -> IntegralEstimate:
    # substitute x_j = x y_j: the Jacobian x**m cancels the x**-m of Q(x; .)
    supports, bps = [], []
    for f in fs:
        if f.scale == 0 or f.name == "zero":
            return IntegralEstimate(0.0, 0.0, 1, CONVERGED, level=0, note="zero factor")
        lo, hi = f.support
        a, b = lo / x, min(hi / x, k.support)
        if not a < b:
            return IntegralEstimate(0.0, 0.0, 1, CONVERGED, level=0, note="disjoint supports")
        supports.append((a, b))
        bps.append(tuple(k.breakpoints) + tuple(c / x for c in f.breakpoints))

    def integrand(y):
        vals = k.reduced_eval(y)
        for j, f in enumerate(fs):
            vals = vals * f(x * y[:, j])
        return vals

    return integrate_halfline_m(integrand, [0.0] * k.m, cfg, breakpoints=bps, support=supports,
                                detect_divergence=detect_divergence)


def apply_operator(k: HomogeneousKernel, fs: Sequence[TestFunction], x: float,
                   cfg: Optional[QuadratureConfig] = None, *, unchecked: bool = False) -> float:
    """``M[Q](f)(x)``; non-finite when the inner integral diverges."""
    if not unchecked:
        require_verified(k)
    _check_args(k, fs)
    if not x > 0:
        raise ValueError("x must be positive")
    est = _apply(k, fs, float(x), _inner_cfg(cfg or QuadratureConfig()))
    if est.verdict == DIVERGING:
        return math.inf
    return float(est.value)


@dataclass
class OperatorNorm:
    value: float
    abs_error: float
    verdict: str
    p: float
    outer: Optional[IntegralEstimate] = None
    n_inner: int = 0
    note: str = ""

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


def operator_lp_norm(k: HomogeneousKernel, fs: Sequence[TestFunction], p: float,
                     cfg: Optional[QuadratureConfig] = None, *, unchecked: bool = False) -> OperatorNorm:
    """``||M[Q](f)||_p`` on the half-line by nested quadrature.

    Any ``p > 0`` is accepted: the resultant of ``m >= 3`` exponents can drop
    below 1, where the same integral defines a quasi-norm. Outer tolerance is
    ten times the inner one.

    A crude pass (inner and outer at 1e-3) gives the total ``T0``. In the
    accurate pass a node ``x`` only gets the inner accuracy it can affect:
    an inner relative error ``r`` moves the result by at most
    ``LOG_SPAN * p * x * M(x)**p * r`` (``LOG_SPAN`` bounds the log-measure
    covered by outer nodes), so ``r`` is chosen to keep that below
    ``outer_tol * T0``, never tighter than the inner tolerance.
    """
    if not unchecked:
        require_verified(k)
    _check_args(k, fs)
    p = float(p)
    if not p > 0:
        raise ValueError("p must be positive")
    cfg = cfg or QuadratureConfig()
    inner_cfg, outer_cfg = _inner_cfg(cfg), _outer_cfg(cfg)
    if any(f.scale == 0 or f.name == "zero" for f in fs):
        return OperatorNorm(0.0, 0.0, CONVERGED, p, note="zero factor")
    crude_inner = inner_cfg.replace(rel_tol=max(CRUDE_REL, inner_cfg.rel_tol),
                                    max_evals=min(inner_cfg.max_evals, CRUDE_MAX_EVALS))
    crude_outer = outer_cfg.replace(rel_tol=max(CRUDE_REL, outer_cfg.rel_tol))
    crude: dict = {}
    fine: dict = {}
    lock = threading.Lock()
    state = {"diverging_at": None, "inconclusive": 0, "t0": None}
    extra_err: dict = {}  # per node, summed in x order so threads cannot reorder it

    def crude_at(x):
        with lock:
            hit = crude.get(x)
        if hit is not None:
            return hit
        # rough values only; nodes that matter are redone with divergence checks
        est = _apply(k, fs, x, crude_inner, detect_divergence=False)
        val = abs(float(est.value))
        with lock:
            crude[x] = val
        return val

    def fine_at(x):
        with lock:
            hit = fine.get(x)
        if hit is not None:
            return hit
        m0 = crude_at(x)
        if not math.isfinite(m0) or m0 == 0.0:
            val = m0
        else:
            weight = LOG_SPAN * p * x * m0 ** p
            budget = outer_cfg.rel_tol * state["t0"] / weight if weight > 0 else math.inf
            r = min(max(budget, inner_cfg.rel_tol), CRUDE_REL)
            if r >= CRUDE_REL:
                val = m0
            else:
                est = _apply(k, fs, x, inner_cfg.replace(rel_tol=r))
                if est.verdict == DIVERGING:
                    val = math.inf
                    state["diverging_at"] = x
                else:
                    val = abs(float(est.value))
                    if est.verdict != CONVERGED:
                        # charge this node's own error estimate, weighted as above
                        err = est.abs_error_estimate
                        with lock:
                            state["inconclusive"] += 1
                            extra_err[x] = LOG_SPAN * p * x * val ** (p - 1.0) * err
        with lock:
            fine[x] = val
        return val

    def outer_with(fn):
        def g(xs):
            vals = np.array(pmap(lambda x: fn(float(x)), xs))
            with np.errstate(over="ignore"):
                return vals ** p
        return g

    bps = sorted({c for f in fs for c in (f.support[0], f.support[1], *f.breakpoints)
                  if 0 < c < math.inf})
    est0 = integrate_halfline_1(outer_with(crude_at), crude_outer, breakpoints=bps)
    if est0.verdict == DIVERGING:
        return OperatorNorm(math.inf, math.inf, DIVERGING, p, est0, len(crude), est0.note)
    state["t0"] = max(abs(float(est0.value)), 1e-300)
    est = integrate_halfline_1(outer_with(fine_at), outer_cfg, breakpoints=bps)
    n_inner = len(crude) + len(fine)
    if state["diverging_at"] is not None:
        return OperatorNorm(math.inf, math.inf, DIVERGING, p, est, n_inner,
                            f"inner integral diverges at x = {state['diverging_at']:.6g}")
    if est.verdict == DIVERGING:
        return OperatorNorm(math.inf, math.inf, DIVERGING, p, est, n_inner, est.note)
    total = max(float(est.value), 0.0)
    value = total ** (1.0 / p)
    # inner errors: p-fold relative error at the accurate nodes plus the
    # budget granted to the relaxed ones
    unsettled = math.fsum(extra_err[x] for x in sorted(extra_err))
    err_int = (est.abs_error_estimate + p * inner_cfg.rel_tol * total
               + outer_cfg.rel_tol * state["t0"] + unsettled)
    err = value * err_int / (p * total) if total > 0 else 0.0
    verdict = est.verdict
    note = est.note
    if state["inconclusive"]:
        note = (f"{state['inconclusive']} inner integrals did not settle; their error "
                f"estimates are included; {note}").strip("; ")
        if not err_int <= 3.0 * outer_cfg.rel_tol * total:
            verdict = INCONCLUSIVE
    return OperatorNorm(value, err, verdict, p, est, n_inner, note)


@dataclass
class InequalityReport:
    lhs: float
    lhs_error: float
    rhs: float
    rhs_error: float
    margin: float
    passed: bool
    status: str  # pass | fail | unknown | vacuous
    p: tuple = ()
    resultant: float = math.nan
    theta: float = math.nan
    factor_norms: tuple = ()
    note: str = ""


def check_inequality(k: HomogeneousKernel, fs: Sequence[TestFunction], p,
                     cfg: Optional[QuadratureConfig] = None, *, unchecked: bool = False,
                     tol: float = 1e-9) -> InequalityReport:
    """``||M f||_p <= Theta_m(p) prod ||f_j||_{p_j}`` with p the resultant."""
    if not unchecked:
        require_verified(k)
    _check_args(k, fs)
    ev = as_exponents(p)
    cfg = cfg or QuadratureConfig()
    pr = resultant_exponent(ev)
    th = theta(k, ev, cfg, unchecked=True)
    norms = [lp_norm(f, pj, cfg) for f, pj in zip(fs, ev.p)]
    if not th.finite:
        return InequalityReport(math.nan, math.nan, math.inf, math.inf, math.nan, True, VACUOUS,
                                ev.p, pr, th.theta, tuple(n.value for n in norms),
                                f"Theta not finite ({th.membership}); the inequality says nothing")
    if any(not n.finite for n in norms):
        return InequalityReport(math.nan, math.nan, math.inf, math.inf, math.nan, True, VACUOUS,
                                ev.p, pr, th.theta, tuple(n.value for n in norms),
                                "some ||f_j||_{p_j} is infinite")
    rhs = th.theta * math.prod(n.value for n in norms)
    rhs_rel = th.estimate.rel_error + sum(n.abs_error / n.value for n in norms if n.value > 0)
    rhs_err = abs(rhs) * rhs_rel
    lhs = operator_lp_norm(k, fs, pr, cfg, unchecked=True)
    factor_norms = tuple(n.value for n in norms)
    if not lhs.finite:
        return InequalityReport(lhs.value, lhs.abs_error, rhs, rhs_err, math.nan, False, UNKNOWN,
                                ev.p, pr, th.theta, factor_norms, lhs.note)
    if rhs == 0:
        ok = lhs.value <= lhs.abs_error + tol
        return InequalityReport(lhs.value, lhs.abs_error, 0.0, rhs_err, 0.0 if ok else -math.inf,
                                ok, PASS if ok else FAIL, ev.p, pr, th.theta, factor_norms)
    combined = rhs_rel + lhs.abs_error / max(lhs.value, 1e-300) + tol
    margin = (rhs - lhs.value) / rhs
    ok = lhs.value <= rhs * (1.0 + combined)
    status = PASS if ok else FAIL
    inconclusive = lhs.verdict != CONVERGED or th.estimate.verdict != CONVERGED \
        or any(n.verdict != CONVERGED for n in norms)
    note = ""
    if inconclusive:
        note = "some quadrature did not converge; treat the verdict with care"
        if not ok:
            status = UNKNOWN
    return InequalityReport(lhs.value, lhs.abs_error, rhs, rhs_err, margin, ok, status, ev.p, pr,
                            th.theta, factor_norms, note)


# --------------------------------------------------------------------------
# sharpness
# --------------------------------------------------------------------------

@dataclass
class SharpnessProbe:
    eps: tuple
    ratios: tuple
    ratio_errors: tuple
    extrapolated_limit: float
    target: float
    gamma: float
    fit_note: str = ""
    monotone: bool = True
    norms: list = field(default_factory=list)


def probe_functions(p, eps: float) -> list:
    """``x**(-1/p_j - eps)`` on ``[1, inf)``, in L_{p_j} with norm ``(eps p_j)**(-1/p_j)``."""
    return [tail_power(1.0 / pj + eps, 1.0) for pj in p]


def richardson_limit(eps: Sequence[float], ratios: Sequence[float]):
    """Fit ``r(e) = L - c e**gamma`` through the last three points.

    Returns ``(L, gamma, note)``. ``gamma`` is solved from the ratio of the
    two successive differences; when no root exists in ``(0.05, 5)`` the fit
    falls back to ``gamma = 1`` and says so in ``note``.
    """
    if len(eps) < 2:
        return float(ratios[-1]), math.nan, "single point, no extrapolation"
    if len(eps) == 2:
        e1, e2 = eps[-2:]
        r1, r2 = ratios[-2:]
        c = (r2 - r1) / (e1 - e2)
        return r2 + c * e2, 1.0, "two points, linear in eps"
    e1, e2, e3 = eps[-3:]
    r1, r2, r3 = ratios[-3:]
    note = ""
    d1, d2 = r2 - r1, r3 - r2
    gamma = 1.0
    if d1 != 0 and d2 != 0 and np.sign(d1) == np.sign(d2):
        q = d1 / d2

        def g(gm):
            return (e1 ** gm - e2 ** gm) / (e2 ** gm - e3 ** gm) - q

        try:
            gamma = brentq(g, 0.05, 5.0)
        except ValueError:
            note = "no exponent fits the last three ratios; gamma = 1 used"
    else:
        note = "ratios not monotone over the last three points; gamma = 1 used"
    c = d2 / (e2 ** gamma - e3 ** gamma)
    limit = r3 + c * e3 ** gamma
    if len(eps) > 3:
        # residual of the fitted curve at the earlier points
        resid = max(abs(limit - c * e ** gamma - r) for e, r in zip(eps[:-3], ratios[:-3]))
        note = (note + "; " if note else "") + f"max residual at earlier eps {resid:.3g}"
    return float(limit), float(gamma), note


def sharpness_probe(k: HomogeneousKernel, p, eps_schedule: Sequence[float],
                    cfg: Optional[QuadratureConfig] = None, *, unchecked: bool = False,
                    tol: float = 1e-6) -> SharpnessProbe:
    """Ratios ``||M f_eps||_p / prod ||f_eps_j||_{p_j}`` as eps decreases.

    Each ratio is a lower bound for the best constant, so exceeding Theta
    beyond the combined error raises :class:`SharpnessViolation`.
    """
    if not unchecked:
        require_verified(k)
    ev = as_exponents(p)
    eps = [float(e) for e in eps_schedule]
    if any(not 0 < e <= 0.5 for e in eps):
        raise ValueError("every eps must lie in (0, 0.5]")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps schedule must be strictly decreasing")
    cfg = cfg or QuadratureConfig()
    th = theta(k, ev, cfg, unchecked=True)
    if not th.finite:
        raise ValueError("Theta is not finite at these exponents; nothing to probe")
    target = th.theta
    pr = resultant_exponent(ev)
    ratios, errs, norms = [], [], []
    for e in eps:
        fs = probe_functions(ev.p, e)
        denom = math.prod((e * pj) ** (-1.0 / pj) for pj in ev.p)
        on = operator_lp_norm(k, fs, pr, cfg, unchecked=True)
        norms.append(on)
        r = on.value / denom
        r_err = on.abs_error / denom
        if r > target * (1.0 + tol) + r_err + th.estimate.abs_error_estimate:
            raise SharpnessViolation(
                f"ratio {r:.12g} at eps = {e} exceeds Theta = {target:.12g}; quadrature is off"
            )
        ratios.append(r)
        errs.append(r_err)
    monotone = all(b >= a - 3.0 * (ea + eb) for a, b, ea, eb in zip(ratios, ratios[1:], errs, errs[1:]))
    limit, gamma, note = richardson_limit(eps, ratios)
    return SharpnessProbe(tuple(eps), tuple(ratios), tuple(errs), limit, target, gamma, note,
                          monotone, norms)
