"""Composite generating function

    beta(p) = inf { Theta_m(p_1..p_m) * prod_j ||f_j||_{G psi_j} psi_j(p_j) :  sum 1/p_j = 1/p }

and a certificate that ``||M f||_p <= beta(p)`` on a grid of p.

The norms are constants under the infimum, so the unit-norm infimum is
computed once and multiplied by their product. The search runs in
reciprocal coordinates ``u_j = 1/p_j`` on the slice ``sum u_j = 1/p``.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from ._parallel import pmap
from .gls import GeneratingFunction, TestFunction, gls_norm
from .kernel import HomogeneousKernel, KernelError, require_verified
from .quadrature import CONVERGED, DIVERGING, QuadratureConfig
from .theta import CLOSED_FORM_FAMILIES, theta, theta_closed_form
from .verify import FAIL, PASS, UNKNOWN, operator_lp_norm

GRID_POINTS = 17
CACHE_QUANTUM = 1e-8
BOUNDARY_CLAMP = 1e-6
SLICE_TOL = 1e-12

OK = "ok"
INFEASIBLE = "infeasible"
THETA_INFINITE = "theta infinite"
OBJECTIVE_INFINITE = "objective infinite"
UNCONSTRAINED = "unconstrained"


class ThetaCache:
    """Theta values keyed by ``u`` rounded to a ``1e-8`` grid.

    Values are computed at the rounded point, so a race between threads
    only costs a duplicate evaluation and never changes a value.
    Coordinates listed in ``exact`` (fixed by an extremal psi) are used as
    given.
    """

    def __init__(self, k: HomogeneousKernel, cfg: QuadratureConfig, closed_form: bool = True):
        self.k = k
        self.cfg = cfg
        self.closed_form = closed_form and k.family in CLOSED_FORM_FAMILIES and k.expression is None
        self._store: dict = {}
        self._lock = threading.Lock()
        self.misses = 0

    def key(self, u, exact=()) -> tuple:
        return tuple(float(v) if j in exact else int(round(v / CACHE_QUANTUM))
                     for j, v in enumerate(u))

    def __call__(self, u, exact=()) -> float:
        key = self.key(u, exact)
        with self._lock:
            hit = self._store.get(key)
        if hit is not None:
            return hit
        p = [1.0 / q if isinstance(q, float) else 1.0 / (q * CACHE_QUANTUM) for q in key]
        if any(not v >= 1.0 for v in p):
            val = math.inf
        elif self.closed_form:
            val = abs(self.k.scale) * theta_closed_form(self.k.family, self.k.m, p)
        else:
            est = theta(self.k, p, self.cfg, unchecked=True)
            val = est.theta if est.estimate.verdict == CONVERGED or math.isinf(est.theta) else math.inf
        with self._lock:
            self._store[key] = val
            self.misses += 1
        return val


@dataclass
class BetaPoint:
    p: float
    value: float  # composite beta (unit value times the norm product)
    argmin: Optional[tuple]  # minimizing exponents p_1..p_m
    status: str
    unit_value: float = math.nan
    n_grid: int = 0

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


def _boxes(psis):
    """Per-coordinate open intervals in u, or a fixed value for extremal psi."""
    boxes = []
    for psi in psis:
        if psi.is_extremal:
            boxes.append((1.0 / psi.r, 1.0 / psi.r, True))
            continue
        lo = 0.0 if math.isinf(psi.b) else 1.0 / psi.b
        hi = 1.0 / psi.a
        boxes.append((lo + BOUNDARY_CLAMP, hi - BOUNDARY_CLAMP, False))
    return boxes


def _slice_grid(ranges, total, n):
    """Points of ``{u : sum u = total, lo_j <= u_j <= hi_j}`` on a nested grid.

    The first d-1 coordinates take ``n`` values each inside the range still
    reachable given the earlier choices; the last one closes the sum.
    """
    d = len(ranges)
    out = []

    def rec(prefix, rest):
        j = len(prefix)
        if j == d - 1:
            last = rest
            lo, hi = ranges[-1]
            if lo - SLICE_TOL <= last <= hi + SLICE_TOL:
                out.append(prefix + [min(max(last, lo), hi)])
            return
        later_lo = sum(r[0] for r in ranges[j + 1:])
        later_hi = sum(r[1] for r in ranges[j + 1:])
        lo = max(ranges[j][0], rest - later_hi)
        hi = min(ranges[j][1], rest - later_lo)
        if lo > hi + SLICE_TOL:
            return
        vals = [lo] if hi - lo <= SLICE_TOL else np.linspace(lo, hi, n)
        for v in vals:
            rec(prefix + [float(v)], rest - float(v))

    rec([], total)
    return out


def beta_at(k: HomogeneousKernel, psis: Sequence[GeneratingFunction], norms: Sequence[float],
            p: float, cfg: Optional[QuadratureConfig] = None, *, unchecked: bool = False,
            cache: Optional[ThetaCache] = None, closed_form: bool = True) -> BetaPoint:
    """Composite generating function at one resultant exponent ``p``.

    A nested grid with ``GRID_POINTS`` values per free direction of the slice
    is followed by Nelder-Mead from the best grid point. Coordinates with an
    extremal psi are fixed at ``1/r``. Theta comes from the closed form for
    the built-in families unless ``closed_form`` is false.
    """
    if not unchecked:
        require_verified(k)
    m = k.m
    if len(psis) != m or len(norms) != m:
        raise KernelError(f"kernel arity {m} needs {m} psi and {m} norms")
    norms = [float(v) for v in norms]
    if any(not v >= 0 for v in norms):
        raise ValueError("norms must be nonnegative")
    p = float(p)
    if not p > 0:
        raise ValueError("p must be positive")
    cfg = cfg or QuadratureConfig()
    cache = cache or ThetaCache(k, cfg, closed_form)

    boxes = _boxes(psis)
    fixed = [j for j, b in enumerate(boxes) if b[2]]
    fixed_set = frozenset(fixed)
    free = [j for j, b in enumerate(boxes) if not b[2]]
    rest = 1.0 / p - math.fsum(boxes[j][0] for j in fixed)
    ranges = [(boxes[j][0], boxes[j][1]) for j in free]

    def full_u(uf):
        u = [0.0] * m
        for j in fixed:
            u[j] = boxes[j][0]
        for j, v in zip(free, uf):
            u[j] = v
        return u

    def objective(u):
        th = cache(u, fixed_set)
        if math.isinf(th):
            return math.inf, True
        val = th
        for psi, uj in zip(psis, u):
            val *= psi(psi.r if psi.is_extremal else 1.0 / uj)
        return val, False

    if not free:
        if abs(rest) > SLICE_TOL * max(1.0, 1.0 / p):
            return BetaPoint(p, math.inf, None, INFEASIBLE)
        candidates = [[]]
    elif any(lo > hi for lo, hi in ranges):
        return BetaPoint(p, math.inf, None, INFEASIBLE)
    else:
        candidates = _slice_grid(ranges, rest, GRID_POINTS)
    if not candidates:
        return BetaPoint(p, math.inf, None, INFEASIBLE)

    vals = []
    theta_inf = True
    for uf in candidates:
        v, tinf = objective(full_u(uf))
        vals.append(v)
        theta_inf &= tinf
    i = int(np.argmin(vals))
    best_u, best_v = full_u(candidates[i]), vals[i]
    if not math.isfinite(best_v):
        reason = THETA_INFINITE if theta_inf else OBJECTIVE_INFINITE
        return BetaPoint(p, math.inf, None, reason, n_grid=len(candidates))

    if len(free) >= 2:
        best_u, best_v = _refine(objective, full_u, candidates[i], ranges, rest, best_v)

    argmin = tuple(1.0 / v for v in best_u)
    prod = math.prod(norms)
    value = 0.0 if prod == 0.0 else best_v * prod
    return BetaPoint(p, value, argmin, OK, best_v, len(candidates))


def _refine(objective, full_u, start, ranges, rest, best_v):
    # optimize over the first d-1 free coordinates; the last closes the sum
    d = len(ranges)
    x0 = np.array(start[:-1])
    widths = np.array([hi - lo for lo, hi in ranges[:-1]])
    step = np.maximum(widths / (GRID_POINTS - 1), 1e-9)

    def lift(x):
        last = rest - math.fsum(x)
        uf = list(map(float, x)) + [last]
        for v, (lo, hi) in zip(uf, ranges):
            if not lo <= v <= hi:
                return None
        return uf

    def g(x):
        uf = lift(x)
        if uf is None:
            return math.inf
        v, _ = objective(full_u(uf))
        # normalized so the simplex tolerances are relative
        return v / best_v

    simplex = [x0]
    for j in range(d - 1):
        for s in (step[j], -step[j]):
            trial = x0.copy()
            trial[j] += s
            if lift(trial) is not None:
                simplex.append(trial)
                break
        else:
            trial = x0.copy()
            trial[j] += 1e-3 * step[j]
            simplex.append(trial)
    res = minimize(g, x0, method="Nelder-Mead",
                   options={"initial_simplex": np.array(simplex), "xatol": 1e-10, "fatol": 1e-13,
                            "maxiter": 2000, "maxfev": 4000})
    uf = lift(res.x)
    if uf is not None and math.isfinite(res.fun) and res.fun * best_v < best_v:
        u = full_u(uf)
        return u, objective(u)[0]
    return full_u(list(x0) + [rest - math.fsum(x0)]), best_v


@dataclass
class BetaCurve:
    samples: list  # (p, beta, argmin) triples
    points: list  # BetaPoint per grid value
    finiteness_interval: Optional[tuple]
    contiguous: bool
    norm_factors: tuple

    @property
    def n_finite(self) -> int:
        return sum(1 for pt in self.points if pt.finite)


def beta_curve(k: HomogeneousKernel, psis: Sequence[GeneratingFunction], norms: Sequence[float],
               p_grid: Sequence[float], cfg: Optional[QuadratureConfig] = None, *,
               unchecked: bool = False, closed_form: bool = True) -> BetaCurve:
    """``beta_at`` on an increasing p-grid, sharing one Theta cache.

    The finiteness interval is read off the grid: the smallest and largest
    p with finite beta, flagged non-contiguous when an infinite value sits
    between them.
    """
    if not unchecked:
        require_verified(k)
    grid = [float(v) for v in p_grid]
    if any(not math.isfinite(v) for v in grid):
        raise ValueError("p-grid values must be finite")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("p-grid must be strictly increasing")
    cfg = cfg or QuadratureConfig()
    cache = ThetaCache(k, cfg, closed_form)
    pts = pmap(lambda p: beta_at(k, psis, norms, p, cfg, unchecked=True, cache=cache), grid)
    finite = [i for i, pt in enumerate(pts) if pt.finite]
    if finite:
        interval = (grid[finite[0]], grid[finite[-1]])
        contiguous = finite == list(range(finite[0], finite[-1] + 1))
    else:
        interval, contiguous = None, True
    samples = [(pt.p, pt.value, pt.argmin) for pt in pts]
    return BetaCurve(samples, pts, interval, contiguous, tuple(float(v) for v in norms))


@dataclass
class CertifyPoint:
    p: float
    lhs: float
    lhs_error: float
    beta: float
    argmin: Optional[tuple]
    status: str  # pass | fail | unknown | unconstrained
    note: str = ""


@dataclass
class CertifyReport:
    points: list
    norms: tuple
    curve: BetaCurve
    norm_notes: tuple = ()

    @property
    def status(self) -> str:
        st = [pt.status for pt in self.points]
        if FAIL in st:
            return FAIL
        if UNKNOWN in st:
            return UNKNOWN
        return PASS

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @property
    def n_checked(self) -> int:
        return sum(1 for pt in self.points if pt.status in (PASS, FAIL))


def certify_theorem(k: HomogeneousKernel, fs: Sequence[TestFunction],
                    psis: Sequence[GeneratingFunction], p_grid: Sequence[float],
                    cfg: Optional[QuadratureConfig] = None, *, unchecked: bool = False,
                    tol: float = 1e-9, closed_form: bool = True) -> CertifyReport:
    """Check ``||M f||_p <= beta(p)`` at every grid point with finite beta.

    ``beta`` uses the Grand Lebesgue norms of the ``f_j``. Its value is the
    objective at the reported minimizer, so each check is an instance of the
    inequality with exponents ``argmin`` even when the optimizer stops short
    of the true infimum.
    """
    if not unchecked:
        require_verified(k)
    if len(fs) != k.m or len(psis) != k.m:
        raise KernelError(f"kernel arity {k.m} needs {k.m} functions and {k.m} psi")
    cfg = cfg or QuadratureConfig()
    gls = [gls_norm(f, psi, cfg) for f, psi in zip(fs, psis)]
    for f, g in zip(fs, gls):
        if not g.finite:
            raise ValueError(f"{f.name}: Grand Lebesgue norm is not finite ({g.status})")
    norms = tuple(g.value for g in gls)
    curve = beta_curve(k, psis, norms, p_grid, cfg, unchecked=True, closed_form=closed_form)

    def check(pt: BetaPoint) -> CertifyPoint:
        if not pt.finite:
            return CertifyPoint(pt.p, math.nan, math.nan, pt.value, None, UNCONSTRAINED, pt.status)
        if pt.value == 0.0 and any(v == 0.0 for v in norms):
            # a zero factor makes M f vanish identically
            return CertifyPoint(pt.p, 0.0, 0.0, 0.0, pt.argmin, PASS, "zero factor")
        op = operator_lp_norm(k, fs, pt.p, cfg, unchecked=True)
        if op.verdict == DIVERGING:
            return CertifyPoint(pt.p, math.inf, math.inf, pt.value, pt.argmin, FAIL,
                                f"||M f||_p diverges; {op.note}".strip("; "))
        margin = tol + (op.abs_error / op.value if op.value > 0 else 0.0)
        ok = op.value <= pt.value * (1.0 + margin)
        if op.verdict != CONVERGED:
            status = UNKNOWN
            note = (f"operator norm {op.verdict} (estimate {'below' if ok else 'above'} beta); "
                    f"{op.note}").strip("; ")
        else:
            status, note = (PASS if ok else FAIL), op.note
        return CertifyPoint(pt.p, op.value, op.abs_error, pt.value, pt.argmin, status, note)

    points = pmap(check, curve.points)
    return CertifyReport(points, norms, curve, tuple(g.note for g in gls))


def dense_grid_beta(objective_u, lo: float, hi: float, total: float, n: int = 10_000):
    """Brute-force minimum of an m = 2 objective over ``u_1`` on ``n`` points.

    ``objective_u(u1, u2)`` is evaluated on the segment of the slice
    ``u1 + u2 = total`` with ``lo <= u1 <= hi``. Returns ``(value, u1)``.
    """
    u = np.linspace(lo, hi, n)
    vals = np.array([objective_u(float(a), total - float(a)) for a in u])
    i = int(np.nanargmin(vals))
    return float(vals[i]), float(u[i])
