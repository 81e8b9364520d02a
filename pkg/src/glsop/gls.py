"""Generating functions, Lebesgue-Riesz norms and Grand Lebesgue norms

    ||f||_{G psi} = sup_{a <= p < b} ||f||_p / psi(p).

A generating function that is infinite at some p contributes nothing there
(``C / inf = 0``); the extremal family psi_r is finite only at ``p = r`` and
turns the Grand Lebesgue norm into the plain L_r norm.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from . import expr as _expr
from .quadrature import CONVERGED, DIVERGING, INCONCLUSIVE, IntegralEstimate, QuadratureConfig, integrate_halfline_1

P_CAP = 1e3
N_GRID = 256
GOLDEN_REL_WIDTH = 1e-6

PSI_FAMILIES = ("power", "two_sided", "extremal", "constant")
F_FAMILIES = ("indicator", "trunc_power", "tail_power", "constant", "exponential", "neglog", "zero")
HALFLINE = "halfline"
UNIT = "unit"


class SpecError(ValueError):
    pass


# --------------------------------------------------------------------------
# generating functions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratingFunction:
    """psi on ``[a, b)``; values may be ``+inf`` (the point is then ignored).

    ``r`` is set only for the extremal family, whose domain is ``{r}``.
    """

    a: float
    b: float
    family: str
    params: tuple = ()
    func: Optional[Callable[[float], float]] = field(default=None, compare=False)
    scale: float = 1.0
    r: Optional[float] = None
    source: Optional[str] = None

    def __call__(self, p: float) -> float:
        p = float(p)
        if self.r is not None:
            return self.scale if p == self.r else math.inf
        if not self.a <= p < self.b:
            return math.inf
        with np.errstate(all="ignore"):
            v = float(self.func(p))
        if math.isnan(v):
            return math.inf
        return self.scale * v

    @property
    def is_extremal(self) -> bool:
        return self.r is not None

    def domain(self) -> tuple:
        if self.r is not None:
            return (self.r, self.r)
        return (self.a, self.b)

    def scaled(self, c: float) -> "GeneratingFunction":
        if not c > 0:
            raise SpecError("scale factor must be positive")
        return dataclasses.replace(self, scale=self.scale * c)

    def describe(self) -> dict:
        if self.source is not None:
            d = {"expr": self.source, "a": self.a, "b": self.b}
        else:
            d = {"family": self.family}
            d.update(dict(self.params))
        if self.scale != 1.0:
            d["scale"] = self.scale
        return d


def power_psi(k: float, a: float = 1.0, b: float = math.inf) -> GeneratingFunction:
    """``psi(p) = p**(1/k)``."""
    if not k > 0:
        raise SpecError("power family needs k > 0")
    _check_interval(a, b)
    return GeneratingFunction(a, b, "power", (("m", k),), lambda p: p ** (1.0 / k))


def two_sided_psi(a: float, b: float, alpha: float = 0.0, beta: float = 0.0) -> GeneratingFunction:
    """``psi(p) = (p - a)**-alpha * (b - p)**-beta`` on ``(a, b)``."""
    _check_interval(a, b)
    if alpha < 0 or beta < 0:
        raise SpecError("two_sided family needs alpha, beta >= 0")
    if math.isinf(b):
        raise SpecError("two_sided family needs a finite right end b")

    def f(p):
        if (alpha > 0 and p <= a) or (beta > 0 and p >= b):
            return math.inf
        return (p - a) ** (-alpha) * (b - p) ** (-beta)

    params = (("a", a), ("b", b), ("alpha", alpha), ("beta", beta))
    return GeneratingFunction(a, b, "two_sided", params, f)


def extremal_psi(r: float) -> GeneratingFunction:
    """psi_r: 1 at ``p = r`` and ``+inf`` elsewhere."""
    if not (r >= 1 and math.isfinite(r)):
        raise SpecError("extremal family needs 1 <= r < inf")
    return GeneratingFunction(1.0, math.inf, "extremal", (("r", r),), None, r=float(r))


def constant_psi(c: float = 1.0, a: float = 1.0, b: float = math.inf) -> GeneratingFunction:
    if not c > 0:
        raise SpecError("constant family needs c > 0")
    _check_interval(a, b)
    return GeneratingFunction(a, b, "constant", (("c", c),), lambda p: c)


def expr_psi(text: str, a: float, b: float) -> GeneratingFunction:
    """Custom psi written in the variable ``p``."""
    _check_interval(a, b)
    tree = _expr.parse(text, ("p",))

    def f(p):
        try:
            return _expr.evaluate_point(tree, {"p": p})
        except _expr.NonFiniteValue:
            return math.inf

    return GeneratingFunction(a, b, "custom", (), f, source=text)


def _check_interval(a, b):
    if not (a >= 1 and math.isfinite(a)):
        raise SpecError(f"left end a = {a} must satisfy 1 <= a < inf")
    if not b > a:
        raise SpecError(f"need b > a, got a = {a}, b = {b}")


_PSI_KEYS = {
    "power": ("m", "a", "b"), "two_sided": ("a", "b", "alpha", "beta"), "extremal": ("r",),
    "constant": ("c", "a", "b"),
}
_F_KEYS = {
    "indicator": ("lo", "hi", "c"), "trunc_power": ("alpha", "hi"), "tail_power": ("alpha", "lo"),
    "constant": ("c",), "exponential": ("lam",), "neglog": ("L",), "zero": (),
}


def _check_keys(spec: dict, allowed, what: str):
    # a misspelt parameter would otherwise fall back to its default silently
    extra = sorted(set(spec) - set(allowed))
    if extra:
        raise SpecError(f"{what}: unknown key(s) {extra}; allowed {sorted(allowed)}")


def psi_from_spec(spec: dict) -> GeneratingFunction:
    spec = dict(spec)
    c = float(spec.pop("scale", 1.0))
    if "expr" in spec:
        _check_keys(spec, ("expr", "a", "b"), "psi spec")
    elif spec.get("family") in _PSI_KEYS:
        _check_keys(spec, ("family",) + _PSI_KEYS[spec["family"]], f"psi family {spec['family']}")
    if "expr" in spec:
        psi = expr_psi(spec["expr"], float(spec["a"]), float(spec.get("b", math.inf)))
    else:
        fam = spec.get("family")
        if fam == "power":
            psi = power_psi(float(spec.get("m", 1.0)), float(spec.get("a", 1.0)),
                            float(spec.get("b", math.inf)))
        elif fam == "two_sided":
            psi = two_sided_psi(float(spec["a"]), float(spec["b"]), float(spec.get("alpha", 0.0)),
                                float(spec.get("beta", 0.0)))
        elif fam == "extremal":
            psi = extremal_psi(float(spec["r"]))
        elif fam == "constant":
            psi = constant_psi(float(spec.get("c", 1.0)), float(spec.get("a", 1.0)),
                               float(spec.get("b", math.inf)))
        else:
            raise SpecError(f"unknown psi family {fam!r}; expected one of {PSI_FAMILIES} or expr")
    return psi.scaled(c) if c != 1.0 else psi


def psi_infimum(psi: GeneratingFunction, n: int = 1024) -> float:
    """Grid minimum of psi over its finiteness set."""
    if psi.is_extremal:
        return psi(psi.r)
    hi = min(psi.b, P_CAP)
    grid = np.geomspace(psi.a, hi, n + 1)[:-1] if hi == psi.b else np.geomspace(psi.a, hi, n)
    vals = [psi(p) for p in grid]
    return float(min(vals))


# --------------------------------------------------------------------------
# test functions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """Closed-form function on the half-line or the unit interval.

    ``known_lp`` gives exact L_p norms for oracle use, ``level_measure`` the
    exact tail ``t -> mu{|f| >= t}``. ``sup_bound`` is a declared bound on
    ``|f|``, needed for the ``p = inf`` norm.
    """

    __test__ = False  # keep pytest from collecting this class

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    space: str = HALFLINE
    support: tuple = (0.0, math.inf)
    breakpoints: tuple = ()
    params: tuple = ()
    known_lp: Optional[Callable[[float], float]] = field(default=None, compare=False)
    level_measure: Optional[Callable[[float], float]] = field(default=None, compare=False)
    monotone: Optional[str] = None  # "decreasing" | "increasing" on the support
    sup_bound: Optional[float] = None
    scale: float = 1.0
    source: Optional[str] = None

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        with np.errstate(all="ignore"):
            v = np.asarray(self.func(x), dtype=float)
            v = np.where((x > lo) & (x <= hi), v, 0.0)
        return self.scale * v if self.scale != 1.0 else v

    def lp_exact(self, p: float) -> Optional[float]:
        if self.known_lp is None:
            return None
        return abs(self.scale) * self.known_lp(p)

    def tail_measure(self, t: float) -> Optional[float]:
        if self.level_measure is None:
            return None
        if self.scale == 0:
            return 0.0
        return self.level_measure(t / abs(self.scale))

    @property
    def bound(self) -> Optional[float]:
        return None if self.sup_bound is None else abs(self.scale) * self.sup_bound

    def scaled(self, c: float) -> "TestFunction":
        return dataclasses.replace(self, scale=self.scale * c)

    def describe(self) -> dict:
        d = {"expr": self.source} if self.source is not None else {"family": self.name}
        d.update(dict(self.params))
        if self.scale != 1.0:
            d["scale"] = self.scale
        return d


def indicator(lo: float = 0.0, hi: float = 1.0, c: float = 1.0) -> TestFunction:
    """``c`` on ``(lo, hi]``."""
    if not 0 <= lo < hi < math.inf:
        raise SpecError("indicator needs 0 <= lo < hi < inf")
    L = hi - lo
    return TestFunction(
        "indicator", lambda x: np.ones_like(x), HALFLINE, (lo, hi), (lo, hi),
        (("lo", lo), ("hi", hi), ("c", c)) if c != 1.0 else (("lo", lo), ("hi", hi)),
        known_lp=lambda p: L ** (1.0 / p) if math.isfinite(p) else 1.0,
        level_measure=lambda t: L if t <= 1.0 else 0.0,
        monotone=None, sup_bound=1.0, scale=c,
    )


def trunc_power(alpha: float, hi: float = 1.0) -> TestFunction:
    """``x**-alpha`` on ``(0, hi]``; in L_p exactly when ``alpha * p < 1``."""
    if not (alpha >= 0 and hi > 0 and math.isfinite(hi)):
        raise SpecError("trunc_power needs alpha >= 0 and 0 < hi < inf")

    def known(p):
        if math.isinf(p):
            return math.inf if alpha > 0 else 1.0
        e = 1.0 - alpha * p
        return (hi ** e / e) ** (1.0 / p) if e > 0 else math.inf

    def level(t):
        if t <= 0:
            return hi
        if alpha == 0:
            return hi if t <= 1.0 else 0.0
        return min(hi, t ** (-1.0 / alpha))

    return TestFunction(
        "trunc_power", lambda x: x ** (-alpha), HALFLINE, (0.0, hi), (hi,),
        (("alpha", alpha), ("hi", hi)), known, level,
        "decreasing", None if alpha > 0 else 1.0,
    )


def tail_power(alpha: float, lo: float = 1.0) -> TestFunction:
    """``x**-alpha`` on ``[lo, inf)``; in L_p exactly when ``alpha * p > 1``."""
    if not (alpha > 0 and lo > 0):
        raise SpecError("tail_power needs alpha > 0 and lo > 0")

    def known(p):
        if math.isinf(p):
            return lo ** (-alpha)
        e = alpha * p - 1.0
        return (lo ** (-e) / e) ** (1.0 / p) if e > 0 else math.inf

    def level(t):
        if t <= 0:
            return math.inf
        return max(0.0, t ** (-1.0 / alpha) - lo)

    # support is written (lo, inf); the single point lo carries no mass
    return TestFunction(
        "tail_power", lambda x: x ** (-alpha), HALFLINE, (lo, math.inf), (lo,),
        (("alpha", alpha), ("lo", lo)), known, level, "decreasing", lo ** (-alpha),
    )


def constant_function(c: float = 1.0) -> TestFunction:
    """``c`` on the unit interval with Lebesgue (probability) measure."""
    return TestFunction(
        "constant", lambda x: np.ones_like(x), UNIT, (0.0, 1.0), (), (("c", c),),
        known_lp=lambda p: 1.0, level_measure=lambda t: 1.0 if t <= 1.0 else 0.0,
        sup_bound=1.0, scale=c,
    )


def exponential(lam: float = 1.0) -> TestFunction:
    """``exp(-lam x)`` on the half-line."""
    if not lam > 0:
        raise SpecError("exponential needs lam > 0")
    return TestFunction(
        "exponential", lambda x: np.exp(-lam * x), HALFLINE, (0.0, math.inf), (),
        (("lam", lam),),
        known_lp=lambda p: (lam * p) ** (-1.0 / p) if math.isfinite(p) else 1.0,
        level_measure=lambda t: math.inf if t <= 0 else max(0.0, math.log(1.0 / t) / lam),
        monotone="decreasing", sup_bound=1.0,
    )


def neglog(L: float = 1.0) -> TestFunction:
    """``log(L / x)`` on ``(0, L)``: in every L_p, ``||f||_p = (L Gamma(p + 1))**(1/p)``."""
    if not L > 0:
        raise SpecError("neglog needs L > 0")

    def known(p):
        if math.isinf(p):
            return math.inf
        return math.exp((math.log(L) + float(gammaln(p + 1.0))) / p)

    return TestFunction(
        "neglog", lambda x: np.log(L / x), HALFLINE, (0.0, L), (L,), (("L", L),),
        known, lambda t: L if t <= 0 else L * math.exp(-t), "decreasing", None,
    )


def zero_function() -> TestFunction:
    return TestFunction("zero", lambda x: np.zeros_like(x), HALFLINE, (0.0, 1.0), (), (),
                        known_lp=lambda p: 0.0, level_measure=lambda t: 0.0, sup_bound=0.0)


def expr_function(text: str, support=(0.0, math.inf), breakpoints: Sequence[float] = (),
                  space: str = HALFLINE, monotone: Optional[str] = None,
                  sup_bound: Optional[float] = None) -> TestFunction:
    """Function written in the variable ``x``."""
    tree = _expr.parse(text, ("x",))
    lo, hi = float(support[0]), float(support[1])
    if space == UNIT:
        lo, hi = max(lo, 0.0), min(hi, 1.0)
    if not 0 <= lo < hi:
        raise SpecError(f"bad support ({lo}, {hi})")
    if monotone not in (None, "decreasing", "increasing"):
        raise SpecError("monotone must be 'decreasing', 'increasing' or absent")
    return TestFunction(
        "expr", lambda x: _expr.evaluate(tree, {"x": x}), space, (lo, hi),
        tuple(float(b) for b in breakpoints), (), monotone=monotone, sup_bound=sup_bound,
        source=text,
    )


def function_from_spec(spec: dict) -> TestFunction:
    spec = dict(spec)
    c = float(spec.pop("scale", 1.0))
    if "expr" in spec:
        _check_keys(spec, ("expr", "support", "breakpoints", "space", "monotone", "sup_bound"),
                    "function spec")
    elif spec.get("family") in _F_KEYS:
        fam = spec["family"]
        _check_keys(spec, ("family",) + _F_KEYS[fam], f"function family {fam}")
    if "expr" in spec:
        f = expr_function(spec["expr"], tuple(spec.get("support", (0.0, math.inf))),
                          spec.get("breakpoints", ()), spec.get("space", HALFLINE),
                          spec.get("monotone"), spec.get("sup_bound"))
    else:
        fam = spec.get("family")
        if fam == "indicator":
            f = indicator(float(spec.get("lo", 0.0)), float(spec.get("hi", 1.0)),
                          float(spec.get("c", 1.0)))
        elif fam == "trunc_power":
            f = trunc_power(float(spec["alpha"]), float(spec.get("hi", 1.0)))
        elif fam == "tail_power":
            f = tail_power(float(spec["alpha"]), float(spec.get("lo", 1.0)))
        elif fam == "constant":
            f = constant_function(float(spec.get("c", 1.0)))
        elif fam == "exponential":
            f = exponential(float(spec.get("lam", 1.0)))
        elif fam == "neglog":
            f = neglog(float(spec.get("L", 1.0)))
        elif fam == "zero":
            f = zero_function()
        else:
            raise SpecError(f"unknown function family {fam!r}; "
                            f"expected one of {F_FAMILIES} or expr")
    return f.scaled(c) if c != 1.0 else f


# --------------------------------------------------------------------------
# norms
# --------------------------------------------------------------------------

@dataclass
class NormEstimate:
    value: float
    abs_error: float
    verdict: str
    estimate: Optional[IntegralEstimate] = None

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def __float__(self):
        return float(self.value)


def _norm_scale(f: TestFunction, p: float) -> float:
    # |f|**p dx = (|f| x**(1/p))**p dlog x, so max |f(x)| x**(1/p) over
    # log-spaced probes sets the size of the integrand per unit log-measure.
    lo, hi = f.support
    pts = np.geomspace(1e-300, 1e300, 1201)
    pts = np.concatenate([pts, lo + (min(hi, lo + 1.0) - lo) * np.linspace(0.01, 1.0, 100)])
    pts = pts[(pts > lo) & (pts <= hi)]
    with np.errstate(all="ignore"):
        vals = np.abs(f(pts)) * pts ** (1.0 / p)
    vals = vals[np.isfinite(vals)]
    s = float(vals.max()) if vals.size else 0.0
    return s if s > 0 else 1.0


def _edge_mass(f: TestFunction, p: float) -> Optional[str]:
    """Look for L_p mass beyond the range of doubles at 0 or infinity.

    Works on ``log G = p log|f(x)| + log x``, the integrand per unit
    log-measure, at decades near the representable extremes. Returns
    ``"diverging"`` when log G still grows toward an end with a constant
    local power (a power law that cannot be integrable), ``"lost"`` when it
    grows with a drifting power (mass sits out of reach, e.g. log(1/x)**p for
    p in the hundreds), and ``None`` otherwise.
    """
    lo, hi = f.support
    ends = []
    if lo == 0.0:
        ends.append(-np.arange(300, 9, -10, dtype=float))
    if math.isinf(hi):
        ends.append(np.arange(300, 9, -10, dtype=float))
    for k in ends:
        x = 10.0 ** k
        with np.errstate(all="ignore"):
            lg = p * np.log(np.abs(f(x))) + k * math.log(10.0)
        ok = np.isfinite(lg)
        if ok.sum() < 12 or not ok[0]:
            continue
        k, lg = k[ok], lg[ok]
        if lg[0] <= lg[1]:
            continue
        lam_far = (lg[0] - lg[1]) / abs(k[0] - k[1])
        lam_near = (lg[10] - lg[11]) / abs(k[10] - k[11])
        if lam_far > 0 and abs(lam_far - lam_near) <= 1e-6 * max(1.0, abs(lam_far)):
            return "diverging"
        return "lost"
    return None


def lp_norm(f: TestFunction, p: float, cfg: Optional[QuadratureConfig] = None) -> NormEstimate:
    """``(int |f|**p dmu)**(1/p)``; ``p = inf`` needs a declared bound."""
    p = float(p)
    if math.isnan(p) or p < 1:
        raise ValueError(f"p = {p} outside [1, inf]")
    if math.isinf(p):
        if f.bound is None:
            raise ValueError("ess-sup norm needs a declared pointwise bound (sup_bound)")
        return NormEstimate(f.bound, 0.0, CONVERGED)
    cfg = cfg or QuadratureConfig()
    edge = _edge_mass(f, p)
    if edge == "diverging":
        return NormEstimate(math.inf, math.inf, DIVERGING)
    s = _norm_scale(f, p)

    def integrand(x):
        with np.errstate(all="ignore"):
            return np.abs(f(x) / s) ** p

    est = integrate_halfline_1(integrand, cfg, breakpoints=f.breakpoints, support=f.support)
    if est.verdict == DIVERGING:
        return NormEstimate(math.inf, math.inf, DIVERGING, est)
    val = max(float(est.value), 0.0)
    norm = s * val ** (1.0 / p)
    if val > 0:
        err = s * val ** (1.0 / p - 1.0) * est.abs_error_estimate / p
    else:
        err = s * est.abs_error_estimate ** (1.0 / p)
    if edge == "lost":
        return NormEstimate(norm, math.inf, INCONCLUSIVE, est)
    return NormEstimate(norm, err, est.verdict, est)


def validate_known_lp(f: TestFunction, probes: Sequence[float] = (1.0, 1.5, 2.0),
                      cfg: Optional[QuadratureConfig] = None, rtol: float = 1e-6) -> bool:
    """Compare the closed-form norms with quadrature at the probe exponents."""
    if f.known_lp is None:
        raise ValueError(f"{f.name} has no closed-form norm")
    for p in probes:
        exact = f.lp_exact(p)
        num = lp_norm(f, p, cfg)
        if math.isinf(exact) != math.isinf(num.value):
            return False
        if math.isfinite(exact) and abs(num.value - exact) > rtol * abs(exact) + 1e-300:
            return False
    return True


# --------------------------------------------------------------------------
# supremum over an exponent interval
# --------------------------------------------------------------------------

@dataclass
class SupResult:
    value: float
    argmax: float
    capped: bool = False
    n_evals: int = 0
    note: str = ""
    lower: float = math.nan  # best finite value seen; a lower bound when capped


def sup_on_interval(obj: Callable[[float], float], a: float, b: float, *,
                    n: int = N_GRID, cap: float = P_CAP,
                    rel_width: float = GOLDEN_REL_WIDTH) -> SupResult:
    """Supremum of ``obj`` over ``[a, b)``.

    A log-spaced grid of ``n`` points over ``[a, min(b, cap))`` (``b`` itself is
    excluded; the cap is included when ``b > cap``) locates the best cell and
    a bounded Brent search refines it to relative width ``rel_width``. When
    ``b > cap`` and the grid maximum sits at the cap while the objective is
    still rising over the last decade, the result is ``+inf`` with
    ``capped=True``: the supremum was not attained below the cap.
    """
    if not b > a:
        raise ValueError("need b > a")
    if b > cap:
        grid = np.geomspace(a, cap, n)
    else:
        grid = np.geomspace(a, b, n + 1)[:-1]
    count = 0

    def safe(p):
        nonlocal count
        count += 1
        v = float(obj(float(p)))
        return -math.inf if math.isnan(v) else v

    vals = np.array([safe(p) for p in grid])
    if np.any(vals == math.inf):
        i = int(np.argmax(vals == math.inf))
        return SupResult(math.inf, float(grid[i]), False, count, "objective infinite on the grid")
    i = int(np.argmax(vals))
    best_p, best_v = float(grid[i]), float(vals[i])
    if not math.isfinite(best_v):
        return SupResult(best_v, best_p, False, count, "objective -inf everywhere")
    if b > cap and i == n - 1:
        decade = int(np.searchsorted(grid, cap / 10.0))
        if vals[-1] > vals[min(decade, n - 2)]:
            return SupResult(math.inf, best_p, True, count, "sup not attained below cap", best_v)
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[i + 1]) if i + 1 < n else (min(b, cap) if b <= cap else float(grid[-1]))
    if hi > lo:
        # Brent needs finite values; -inf points are simply very bad
        res = minimize_scalar(lambda p: -max(safe(p), -1e300), bounds=(lo, hi), method="bounded",
                              options={"xatol": rel_width * 0.5 * (lo + hi)})
        if np.isfinite(res.fun) and -res.fun > best_v:
            best_p, best_v = float(res.x), float(-res.fun)
    return SupResult(best_v, best_p, False, count, "", best_v)


@dataclass
class GlsNorm:
    value: float
    argmax: Optional[float]
    status: str  # ok | extremal | capped | lp infinite | inconclusive
    n_norms: int = 0
    note: str = ""

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


def gls_norm(f: TestFunction, psi: GeneratingFunction,
             cfg: Optional[QuadratureConfig] = None) -> GlsNorm:
    """Grand Lebesgue norm ``sup_p ||f||_p / psi(p)``."""
    cfg = cfg or QuadratureConfig()
    if psi.is_extremal:
        n = lp_norm(f, psi.r, cfg)
        return GlsNorm(n.value / psi(psi.r), psi.r, "extremal", 1,
                       "" if n.verdict == CONVERGED else f"L_r quadrature {n.verdict}")
    flags = {"inconclusive": False, "infinite_at": None}

    def objective(p):
        ps = psi(p)
        if math.isinf(ps):
            return 0.0
        n = lp_norm(f, p, cfg)
        if math.isinf(n.value):
            flags["infinite_at"] = p
            return math.inf
        if n.verdict != CONVERGED:
            flags["inconclusive"] = True
        return n.value / ps

    res = sup_on_interval(objective, psi.a, psi.b)
    if res.capped:
        return GlsNorm(math.inf, res.argmax, "capped", res.n_evals, res.note)
    if math.isinf(res.value):
        return GlsNorm(math.inf, flags["infinite_at"], "lp infinite", res.n_evals,
                       f"||f||_p infinite at p = {flags['infinite_at']:.6g} where psi is finite")
    status = "inconclusive" if flags["inconclusive"] else "ok"
    return GlsNorm(res.value, res.argmax, status, res.n_evals, res.note)
