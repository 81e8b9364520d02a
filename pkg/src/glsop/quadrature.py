"""Improper integrals over products of half-lines with power weights.

The one-dimensional workhorse is the double-exponential (tanh-sinh) rule.
Each axis is split at its breakpoints; finite pieces use
``x = lo + L * sigmoid(pi sinh u)`` and the unbounded piece ``[c, inf)`` uses
``x = c / (1 - t)`` (``x = t / (1 - t)`` when ``c = 0``) followed by the same
tanh-sinh map for ``t``, which collapses to ``x = c * (1 + exp(pi sinh u))``.
Distances to singular endpoints are computed directly so that nodes as close
as 1e-275 to zero stay exact. Up to three dimensions the 1-D rules are
tensorized; from four dimensions on a randomized Sobol rule with
per-axis importance sampling takes over.

Verdicts are tri-state: ``converged``, ``diverging`` (nested-box growth test)
or ``inconclusive``.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import expit
from scipy.stats import qmc

log = logging.getLogger(__name__)

CONVERGED = "converged"
DIVERGING = "diverging"
INCONCLUSIVE = "inconclusive"

# Half-widths of the u-range: ends at 0 or infinity may carry singularities,
# interior breakpoints only carry jumps or kinks.
U_OPEN = 6.0
U_TRIM = 4.0

# finite pieces spanning more than this ratio get a logarithmic map
LOG_RATIO = 1e3

CHUNK = 1 << 20
N_SHIFTS = 8
QMC_REL_FLOOR = 1e-4
GROWTH_FACTOR = 1.05
BOX_LEVELS = range(1, 7)
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_evals: int = 20_000_000
    level_cap: int = 8
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.rel_tol < 1:
            raise ValueError("rel_tol must lie in (0, 1)")
        if not 0 < self.abs_tol < 1:
            raise ValueError("abs_tol must lie in (0, 1)")
        if self.max_evals < 100:
            raise ValueError("max_evals must be at least 100")
        if self.level_cap < 2:
            raise ValueError("level_cap must be at least 2")

    def replace(self, **changes) -> "QuadratureConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class IntegralEstimate:
    value: float
    abs_error_estimate: float
    n_evals: int
    verdict: str
    method: str = "tanh-sinh"
    level: int = -1
    tolerance: float = 0.0
    n_nonfinite: int = 0
    note: str = ""

    @property
    def converged(self) -> bool:
        return self.verdict == CONVERGED

    @property
    def rel_error(self) -> float:
        if self.value == 0:
            return 0.0 if self.abs_error_estimate == 0 else math.inf
        return self.abs_error_estimate / abs(self.value)


# --------------------------------------------------------------------------
# one-dimensional rules
# --------------------------------------------------------------------------

@dataclass
class AxisRule:
    x: np.ndarray
    w: np.ndarray
    power: np.ndarray  # x**exponent, already folded into w
    # positions (in x/w) of the two outermost nodes at an end touching 0 or
    # infinity, used for the power-law end correction in 1-D
    zero_end: Optional[tuple] = None
    inf_end: Optional[tuple] = None


def _u_nodes(h: float, u_lo: float, u_hi: float):
    j = np.arange(int(round(u_lo / h)), int(round(u_hi / h)) + 1)
    u = j * h
    half = np.ones_like(u)
    half[0] = half[-1] = 0.5
    return u, half


def _finite_piece(lo, hi, h, open_left):
    u, half = _u_nodes(h, -(U_OPEN if open_left else U_TRIM), U_TRIM)
    z = math.pi * np.sinh(u)
    L = hi - lo
    sl, sr = expit(z), expit(-z)
    x = np.where(u <= 0, lo + L * sl, hi - L * sr)
    w = L * sl * sr * math.pi * np.cosh(u) * h * half
    return x, w


def _log_piece(lo, hi, h):
    # x = lo * (hi/lo)**sigmoid(pi sinh u): uniform resolution per decade
    u, half = _u_nodes(h, -U_TRIM, U_TRIM)
    z = math.pi * np.sinh(u)
    span = math.log(hi / lo)
    sl, sr = expit(z), expit(-z)
    x = np.where(u <= 0, lo * np.exp(span * sl), hi * np.exp(-span * sr))
    w = x * span * sl * sr * math.pi * np.cosh(u) * h * half
    return x, w


def _tail_piece(c, h, open_left):
    u, half = _u_nodes(h, -(U_OPEN if open_left else U_TRIM), U_OPEN)
    z = math.pi * np.sinh(u)
    with np.errstate(over="ignore"):
        ez = np.exp(z)
        if c == 0.0:
            x = ez
            w = ez * math.pi * np.cosh(u) * h * half
        else:
            x = c * (1.0 + ez)
            w = c * ez * math.pi * np.cosh(u) * h * half
    return x, w


def axis_rule(h: float, exponent: float = 0.0, breakpoints: Sequence[float] = (),
              lo: float = 0.0, hi: float = math.inf) -> AxisRule:
    """Composite tanh-sinh rule for ``int_lo^hi g(x) x**exponent dx`` at step ``h``."""
    cuts = {float(b) for b in breakpoints if lo < b < hi}
    if lo == 0.0 and LOG_RATIO < hi < math.inf and not cuts:
        cuts.add(1.0)
    if 0.0 < lo < 1.0 / LOG_RATIO and math.isinf(hi) and not cuts:
        # a tail piece cannot resolve the decades between lo and 1
        cuts.add(1.0)
    edges = [lo] + sorted(cuts) + [hi]
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if math.isinf(b):
            x, w = _tail_piece(a, h, open_left=(a == 0.0))
        elif a > 0.0 and b / a > LOG_RATIO:
            x, w = _log_piece(a, b, h)
        else:
            x, w = _finite_piece(a, b, h, open_left=(a == 0.0))
        xs.append(x)
        ws.append(w)
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    if exponent != 0.0:
        with np.errstate(over="ignore", divide="ignore"):
            w = w * x ** exponent
    keep = np.isfinite(x) & np.isfinite(w) & (w > 0)
    if lo == 0.0:
        keep &= x > 0
    zero_end = inf_end = None
    idx = np.flatnonzero(keep)
    if lo == 0.0 and len(idx) >= 3:
        zero_end = (idx[0], idx[1], idx[2])
    if math.isinf(hi) and len(idx) >= 3:
        inf_end = (idx[-1], idx[-2], idx[-3])
    x = x[keep]
    rule = AxisRule(x, w[keep], x ** exponent if exponent != 0.0 else np.ones_like(x))
    # remap end indices into the filtered arrays
    pos = np.cumsum(keep) - 1
    if zero_end is not None:
        rule.zero_end = tuple(int(pos[i]) for i in zero_end)
    if inf_end is not None:
        rule.inf_end = tuple(int(pos[i]) for i in inf_end)
    return rule


# --------------------------------------------------------------------------
# tensor evaluation
# --------------------------------------------------------------------------

def _tensor_sum(f, rules):
    """Tensor-rule sum over the grid of ``rules``.

    Returns ``(total, total_abs, n_nonfinite, n_evals, marginals)`` where
    ``marginals[j][i]`` sums all terms whose j-th coordinate is node i.
    """
    m = len(rules)
    first = rules[0]
    shape_rest = tuple(len(r.x) for r in rules[1:])
    if m == 1:
        rest_x = np.zeros((1, 0))
        rest_w = np.ones(1)
    else:
        grids = np.meshgrid(*[r.x for r in rules[1:]], indexing="ij")
        rest_x = np.stack([g.ravel() for g in grids], axis=-1)
        wgrids = np.meshgrid(*[r.w for r in rules[1:]], indexing="ij")
        with np.errstate(over="ignore", under="ignore"):
            rest_w = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    n_rest = len(rest_w)
    step = max(1, CHUNK // max(n_rest, 1))
    total = 0.0
    total_abs = 0.0
    nonfinite = 0
    marginals = [np.zeros(len(r.x)) for r in rules]
    for start in range(0, len(first.x), step):
        x0 = first.x[start:start + step]
        w0 = first.w[start:start + step]
        pts = np.empty((len(x0) * n_rest, m))
        pts[:, 0] = np.repeat(x0, n_rest)
        if m > 1:
            pts[:, 1:] = np.tile(rest_x, (len(x0), 1))
        with np.errstate(all="ignore"):
            vals = np.asarray(f(pts), dtype=float).reshape(len(x0), n_rest)
            terms = np.where(vals == 0.0, 0.0, w0[:, None] * rest_w[None, :] * vals)
        bad = ~np.isfinite(terms)
        if bad.any():
            nonfinite += int(bad.sum())
            terms = np.where(bad, 0.0, terms)
        total += float(np.sum(terms))
        total_abs += float(np.sum(np.abs(terms)))
        marginals[0][start:start + len(x0)] = terms.sum(axis=1)
        if m > 1:
            block = terms.reshape((len(x0),) + shape_rest)
            for j in range(1, m):
                axes = tuple(a for a in range(m) if a != j)
                marginals[j] += block.sum(axis=axes)
    return total, total_abs, nonfinite, len(first.x) * n_rest, marginals


def _end_corrections(rules, marginals, h):
    """Corrections for truncating the u-range at ends touching 0 or infinity.

    Near such an end the marginal integrand behaves like ``C x**lam`` and the
    map gives ``ln x = ln x0 + pi sinh u - pi sinh u0``. The truncated
    trapezoid sum is continued node by node under that model, which keeps the
    exponential accuracy of the infinite trapezoid rule even when the tail
    decays slowly. Returns (correction, uncertainty, hint); ``hint`` flags a
    local power that is not integrable at that end.
    """
    corr = 0.0
    unc = 0.0
    hint = False
    for rule, marg in zip(rules, marginals):
        for ends, sign in ((rule.zero_end, 1.0), (rule.inf_end, -1.0)):
            if ends is None:
                continue
            idx = list(ends)
            xe = rule.x[idx]
            # x-space integrand (power weight included) at the three end nodes
            with np.errstate(all="ignore"):
                g = marg[idx] * rule.power[idx] / rule.w[idx]
            if not np.all(np.isfinite(g)) or np.any(g == 0) or np.any(np.sign(g) != np.sign(g[0])):
                continue
            lam01 = math.log(g[0] / g[1]) / math.log(xe[0] / xe[1])
            lam12 = math.log(g[1] / g[2]) / math.log(xe[1] / xe[2])
            margin0 = sign * (lam01 + 1.0)
            margin1 = sign * (lam12 + 1.0)
            if margin0 <= 1e-3:
                hint = True
                continue
            # the end node carried half weight; it gets the other half here
            base = float(marg[idx[0]])
            tail0 = base + _trapezoid_tail(base, margin0, h)
            tail1 = base + _trapezoid_tail(base, margin1, h) if margin1 > 1e-3 else tail0
            corr += tail0
            unc += abs(tail0 - tail1)
    return corr, unc, hint


def _trapezoid_tail(base, margin, h):
    # sum over k >= 1 of the u-space integrand at u0 + k h, relative to the
    # end term ``base`` = F(u0) h / 2, with F(u) = F(u0) cosh(u)/cosh(u0) *
    # exp(-margin * pi * |sinh u - sinh u0|)
    u0 = U_OPEN
    s0, c0 = math.sinh(u0), math.cosh(u0)
    total = 0.0
    k = 1
    while True:
        u = u0 + k * h
        logr = math.log(math.cosh(u) / c0) - margin * math.pi * (math.sinh(u) - s0)
        term = 2.0 * math.exp(logr)
        total += term
        if term < 1e-17 * max(total, 1.0) or k > 100_000:
            break
        k += 1
    return base * total


def _tolerance(value, cfg):
    return max(cfg.abs_tol, cfg.rel_tol * abs(value))


def _normalize_axis_specs(m, breakpoints, support):
    if breakpoints is None:
        breakpoints = ()
    if len(breakpoints) > 0 and isinstance(breakpoints[0], (list, tuple, np.ndarray)):
        bps = [tuple(b) for b in breakpoints]
    else:
        bps = [tuple(breakpoints)] * m
    if support is None:
        support = (0.0, math.inf)
    if isinstance(support[0], (list, tuple, np.ndarray)):
        sup = [tuple(map(float, s)) for s in support]
    else:
        sup = [tuple(map(float, support))] * m
    if len(bps) != m or len(sup) != m:
        raise ValueError("per-axis breakpoints/support must have one entry per axis")
    return bps, sup


def integrate_halfline_m(
    f: Callable[[np.ndarray], np.ndarray],
    weights: Sequence[float],
    cfg: Optional[QuadratureConfig] = None,
    *,
    breakpoints=None,
    support=None,
    method: str = "auto",
    detect_divergence: bool = True,
) -> IntegralEstimate:
    """Estimate ``int f(x) prod_j x_j**weights[j] dx`` over ``(0, inf)**m``.

    Parameters
    ----------
    f : callable
        Vectorized integrand taking points of shape ``(N, m)``.
    weights : sequence of float
        Power-weight exponents, each in ``[-1, 0]``. An exponent of exactly
        -1 goes straight to the divergence test.
    cfg : QuadratureConfig
    breakpoints : sequence, optional
        Points where ``f`` jumps or kinks, shared by all axes or given per axis.
    support : (lo, hi) or per-axis list, optional
        ``f`` is assumed to vanish outside the box.
    method : {"auto", "tensor", "qmc"}
        ``auto`` picks tensor tanh-sinh for ``m <= 3``.
    detect_divergence : bool
        Run the nested-box test when refinement does not settle. Without it
        such results are simply ``inconclusive`` with the last value.
    """
    cfg = cfg or QuadratureConfig()
    weights = [float(e) for e in weights]
    m = len(weights)
    if m < 1:
        raise ValueError("need at least one axis")
    for e in weights:
        if e < -1.0 or e > 0.0:
            raise ValueError(f"weight exponent {e} outside [-1, 0]; the integral is not defined")
    bps, sup = _normalize_axis_specs(m, breakpoints, support)
    for lo, hi in sup:
        if not 0.0 <= lo <= hi:
            raise ValueError(f"bad support interval ({lo}, {hi})")
    if any(lo == hi for lo, hi in sup):
        return IntegralEstimate(0.0, 0.0, 0, CONVERGED, level=0)
    if method == "auto":
        method = "tensor" if m <= 3 else "qmc"
    if any(e <= -1.0 and lo == 0.0 for e, (lo, _) in zip(weights, sup)):
        return _box_verdict(f, weights, bps, sup, cfg, method, n_evals=0,
                            note="weight exponent -1 at the origin")
    if method == "tensor":
        return _integrate_tensor(f, weights, bps, sup, cfg, detect_divergence)
    if method == "qmc":
        return _integrate_qmc(f, weights, sup, cfg, detect_divergence)
    raise ValueError(f"unknown method {method!r}")


def integrate_halfline_1(
    f: Callable[[np.ndarray], np.ndarray],
    cfg: Optional[QuadratureConfig] = None,
    *,
    breakpoints: Sequence[float] = (),
    support=(0.0, math.inf),
    weight: float = 0.0,
) -> IntegralEstimate:
    """One-dimensional version; ``f`` takes and returns 1-D arrays."""
    return integrate_halfline_m(
        lambda pts: f(pts[:, 0]), [weight], cfg, breakpoints=[tuple(breakpoints)],
        support=[tuple(support)],
    )


def _integrate_tensor(f, weights, bps, sup, cfg, detect_divergence=True):
    m = len(weights)
    prev = None
    n_evals = 0
    nonfinite = 0
    history = []
    hint = False
    for k in range(cfg.level_cap + 1):
        h = 2.0 ** (-k)
        rules = []
        for e, b, (lo, hi) in zip(weights, bps, sup):
            rules.append(axis_rule(h, e, b, lo, hi))
        size = int(np.prod([len(r.x) for r in rules]))
        if n_evals + size > cfg.max_evals:
            if prev is None:
                return IntegralEstimate(math.nan, math.inf, n_evals, INCONCLUSIVE, level=k,
                                        note="max_evals too small for the coarsest level")
            break
        total, total_abs, bad, used, marginals = _tensor_sum(f, rules)
        n_evals += used
        nonfinite = max(nonfinite, bad)
        corr, unc, hint = _end_corrections(rules, marginals, h)
        value = total + corr
        history.append(value)
        if prev is not None:
            d1 = abs(value - prev)
            if len(history) >= 3:
                d2 = abs(prev - history[-3])
                # the error roughly squares per level once the rule is resolving
                if d2 > 0 and d1 < 1e-2 * d2:
                    d1 = d1 * d1 / d2
            err = d1 + unc + 64 * _EPS * total_abs
            tol = _tolerance(value, cfg)
            if k >= 2 and err <= tol and not hint:
                verdict = CONVERGED if nonfinite == 0 else INCONCLUSIVE
                note = f"{nonfinite} non-finite integrand values" if nonfinite else ""
                return IntegralEstimate(value, err, n_evals, verdict, "tanh-sinh", k, tol,
                                        nonfinite, note)
        prev = value
    level = len(history) - 1
    err = abs(history[-1] - history[-2]) if len(history) >= 2 else math.inf
    note = "refinement did not settle"
    if hint:
        note = "non-integrable local power at an open end"
    if nonfinite:
        note += f"; {nonfinite} non-finite integrand values"
    if detect_divergence:
        est = _box_verdict(f, weights, bps, sup, cfg, "tensor", n_evals, note)
        if est.verdict == DIVERGING:
            return est
        n_evals = est.n_evals
    return IntegralEstimate(history[-1], err, n_evals, INCONCLUSIVE, "tanh-sinh", level,
                            _tolerance(history[-1], cfg), nonfinite, note)


# --------------------------------------------------------------------------
# divergence heuristic
# --------------------------------------------------------------------------

def _box_integral(f, weights, bps, sup, eps, big, method, seed):
    m = len(weights)
    boxes = []
    for (lo, hi) in sup:
        # only ends at 0 or infinity are approached; finite ends stay put
        a = max(lo, eps) if lo == 0.0 else lo
        b = min(hi, big) if math.isinf(hi) else hi
        if a >= b:
            return 0.0, 0
        boxes.append((a, b))
    if method == "tensor":
        h = 0.25 if m <= 2 else 0.5
        rules = []
        for e, bp, (a, b) in zip(weights, bps, boxes):
            # log-spaced cuts keep each piece within a few decades
            cuts = list(bp) + list(np.logspace(math.log10(a), math.log10(b), 7)[1:-1])
            r = axis_rule(h, e, cuts, a, b)
            rules.append(r)
        total, _, _, used, _ = _tensor_sum(f, rules)
        return total, used
    n = 1 << 14
    u = qmc.Sobol(d=m, scramble=True, seed=seed).random(n)
    a = np.array([b[0] for b in boxes])
    b = np.array([b[1] for b in boxes])
    span = np.log(b / a)
    x = a * np.exp(u * span)
    jac = np.prod(x * span, axis=1) * np.prod(x ** np.array(weights), axis=1)
    with np.errstate(all="ignore"):
        vals = np.asarray(f(x), dtype=float) * jac
    vals = np.where(np.isfinite(vals), vals, 0.0)
    return float(np.mean(vals)), n


def _box_verdict(f, weights, bps, sup, cfg, method, n_evals, note):
    """Nested boxes ``[10**-k, 10**k]`` for k = 1..6; diverging if the partial
    integrals still grow by more than 5 % at each of the last two steps."""
    partial = []
    for k in BOX_LEVELS:
        val, used = _box_integral(f, weights, bps, sup, 10.0 ** (-k), 10.0 ** k, method, cfg.seed)
        n_evals += used
        partial.append(abs(val))
    p4, p5, p6 = partial[-3:]
    growing = p4 > 0 and p5 > GROWTH_FACTOR * p4 and p6 > GROWTH_FACTOR * p5
    if growing:
        return IntegralEstimate(math.inf, math.inf, n_evals, DIVERGING, method, -1, 0.0, 0,
                                f"{note}; nested-box partials {p4:.3g}, {p5:.3g}, {p6:.3g}")
    return IntegralEstimate(partial[-1], math.inf, n_evals, INCONCLUSIVE, method, -1, 0.0, 0,
                            f"{note}; nested-box partials do not show growth")


# --------------------------------------------------------------------------
# randomized low-discrepancy path
# --------------------------------------------------------------------------

def _sample_axis(u, s, lo, hi):
    """Map uniforms to (x, x**-s / density).

    Density: ``(1 - s) x**-s`` on (0, 1] and a Pareto tail ``~ x**(-1 - tau)``
    beyond 1 with ``tau = max(s, 0.05)``; half the mass on each side unless the
    support stops at 1.
    """
    tau = max(s, 0.05)
    if hi <= 1.0:
        x = u ** (1.0 / (1.0 - s))
        ratio = np.full_like(u, 1.0 / (1.0 - s))
        return x, ratio
    left = u < 0.5
    with np.errstate(divide="ignore", over="ignore"):
        x_left = (2.0 * u) ** (1.0 / (1.0 - s))
        x_right = (2.0 * (1.0 - u)) ** (-1.0 / tau)
        x = np.where(left, x_left, x_right)
        ratio = np.where(left, 2.0 / (1.0 - s), 2.0 * x ** (1.0 + tau - s) / tau)
    return x, ratio


def _integrate_qmc(f, weights, sup, cfg, detect_divergence=True):
    m = len(weights)
    s = [-e for e in weights]
    seeds = np.random.SeedSequence(cfg.seed).spawn(N_SHIFTS)
    engines = [qmc.Sobol(d=m, scramble=True, seed=np.random.default_rng(sd)) for sd in seeds]
    rel_tol = max(cfg.rel_tol, QMC_REL_FLOOR)
    n_evals = 0
    sums = np.zeros(N_SHIFTS)
    count = 0
    n_new = 1 << 10
    nonfinite = 0
    level = 0
    while True:
        if n_evals + n_new * N_SHIFTS > cfg.max_evals and count > 0:
            break
        for i, eng in enumerate(engines):
            u = eng.random(n_new)
            x = np.empty_like(u)
            ratio = np.ones(n_new)
            for j in range(m):
                xj, rj = _sample_axis(u[:, j], s[j], *sup[j])
                x[:, j] = xj
                ratio *= rj
            lo = np.array([a for a, _ in sup])
            hi = np.array([b for _, b in sup])
            inside = np.all((x > lo) & (x <= hi), axis=1)
            with np.errstate(all="ignore"):
                vals = np.where(inside, np.asarray(f(x), dtype=float) * ratio, 0.0)
            bad = ~np.isfinite(vals)
            nonfinite += int(bad.sum())
            sums[i] += float(np.sum(np.where(bad, 0.0, vals)))
        count += n_new
        n_evals += n_new * N_SHIFTS
        level += 1
        means = sums / count
        value = float(np.mean(means))
        err = float(np.std(means, ddof=1) / math.sqrt(N_SHIFTS))
        tol = max(cfg.abs_tol, rel_tol * abs(value))
        if err <= tol:
            verdict = CONVERGED if nonfinite == 0 else INCONCLUSIVE
            return IntegralEstimate(value, err, n_evals, verdict, "qmc", level, tol, nonfinite,
                                    "scrambled Sobol, 8 independent randomizations")
        n_new = count  # doubling keeps the points a base-2 prefix
    if detect_divergence:
        est = _box_verdict(f, weights, [()] * m, sup, cfg, "qmc", n_evals,
                           "standard error above tolerance at max_evals")
        if est.verdict == DIVERGING:
            return est
        n_evals = est.n_evals
    return IntegralEstimate(value, err, n_evals, INCONCLUSIVE, "qmc", level, tol, nonfinite,
                            "standard error above tolerance at max_evals")
