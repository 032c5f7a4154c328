"""Decay-rate harnesses: curves on a time ladder, slope fits, lower bounds, regimes."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import special

from .datum import (DatumComponent, Gaussian, InitialDatum, PowerTail, degree_indices,
                    gaussian_datum, make_threshold_datum, taylor_terms)
from .kernels import kernel_pair
from .profiles import (ProfileSpec, ProfileStack, build_A, kernel_truncation, residual_stack,
                       solution_stack)
from .quadrature import (DEFAULT_CONFIG, Expression, QuadConfig, Region, Term, lemma7_integral,
                         norm, radial_integral, sphere_area, sphere_moment, thm45_constants)

UPPER_TOL = 0.05
TWO_SIDED_TOL = 0.03
LOWER_SLACK = 0.95
FIT_T_MIN = 2.0**10
LOWER_T_MIN = 2.0**12


class DegenerateFitError(ValueError):
    """A curve with vanishing values cannot be fitted in log scale."""


class InconsistentSpecError(ValueError):
    """Profile request incompatible with the datum or the expansion hypotheses."""


# -- curves and fits -------------------------------------------------------------

@dataclass(frozen=True)
class TimeLadder:
    t0: float = 2.0**8
    ratio: float = 2.0
    J: int = 8

    def __post_init__(self):
        if not (self.t0 > 0 and self.ratio > 1):
            raise ValueError("ladder needs t0 > 0 and ratio > 1")
        if self.J < 4:
            raise ValueError("ladder needs J >= 4")

    @property
    def times(self) -> np.ndarray:
        return self.t0 * self.ratio ** np.arange(self.J + 1)


@dataclass(frozen=True)
class DecayCurve:
    t: tuple[float, ...]
    values: tuple[float, ...]
    experiment_id: str = ""
    region: str = "low"
    datum_digest: str = ""

    def __post_init__(self):
        if len(self.t) != len(self.values):
            raise ValueError("t and values differ in length")
        if any(b <= a for a, b in zip(self.t, self.t[1:])):
            raise ValueError("t must be strictly increasing")
        if any(v < 0 for v in self.values):
            raise ValueError("curve values must be nonnegative")

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.t, self.values))

    def window(self, t_min: float = 0.0, t_max: float = math.inf) -> "DecayCurve":
        keep = [(t, v) for t, v in self.points if t_min <= t <= t_max]
        return DecayCurve(tuple(t for t, _ in keep), tuple(v for _, v in keep),
                          self.experiment_id, self.region, self.datum_digest)

    def mapped(self, fn: Callable[[np.ndarray], np.ndarray]) -> "DecayCurve":
        return DecayCurve(self.t, tuple(float(x) for x in fn(np.array(self.values))),
                          self.experiment_id, self.region, self.datum_digest)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    max_rel_residual: float
    model: str
    r_squared: float


def fit_decay(curve: DecayCurve, model: str = "power") -> SlopeFit:
    """Least squares in (log t, log v) for ``power`` or (log t, v) for ``log``."""
    t = np.asarray(curve.t, dtype=float)
    v = np.asarray(curve.values, dtype=float)
    if t.size < 4:
        raise ValueError("need at least 4 points to fit")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise DegenerateFitError("curve has vanishing or non-finite values")
    x = np.log(t)
    if model == "power":
        y = np.log(v)
        slope, icpt = np.polyfit(x, y, 1)
        pred = np.exp(icpt + slope * x)
        yy, fit = y, icpt + slope * x
    elif model == "log":
        slope, icpt = np.polyfit(x, v, 1)
        pred = icpt + slope * x
        yy, fit = v, pred
    else:
        raise ValueError(f"unknown model {model!r}")
    rel = float(np.max(np.abs(pred - v) / np.abs(v)))
    ss_tot = float(np.sum((yy - yy.mean()) ** 2))
    r2 = 1.0 - float(np.sum((yy - fit) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return SlopeFit(float(slope), float(icpt), rel, model, r2)


@dataclass(frozen=True)
class LogLawCheck:
    detected: bool
    power: SlopeFit
    log: SlopeFit


def detect_log_law(curve: DecayCurve, ratio: float = 5.0, min_r2: float = 0.99) -> LogLawCheck:
    power = fit_decay(curve, "power")
    log = fit_decay(curve, "log")
    detected = log.max_rel_residual * ratio <= power.max_rel_residual and log.r_squared >= min_r2
    return LogLawCheck(bool(detected), power, log)


# -- sampling --------------------------------------------------------------------

def _sample(fn: Callable[[float], float], times: Sequence[float], jobs: int) -> list[float]:
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, times))
    return [fn(t) for t in times]


def curve_of(expr: Expression, region: Region | str, n: int, ladder: TimeLadder,
             experiment_id: str = "", datum_digest: str = "",
             config: QuadConfig = DEFAULT_CONFIG, jobs: int = 1) -> DecayCurve:
    region = Region.parse(region)
    values = _sample(lambda t: norm(expr, region, t, n, config), ladder.times, jobs)
    return DecayCurve(tuple(float(t) for t in ladder.times), tuple(values), experiment_id,
                      region.value, datum_digest)


def run_solution_norm(n: int, datum: InitialDatum, ladder: TimeLadder = TimeLadder(),
                      region: Region | str = Region.LOW_BALL,
                      config: QuadConfig = DEFAULT_CONFIG, jobs: int = 1) -> DecayCurve:
    """‖û(t)‖ over the region (low ball by default)."""
    _check_dim(n, datum)
    return curve_of(solution_stack(datum).expression(), region, n, ladder, "solution",
                    datum.digest(), config, jobs)


def _check_dim(n: int, datum: InitialDatum) -> None:
    if datum.n != n:
        raise InconsistentSpecError(f"datum lives in dimension {datum.n}, not {n}")


def run_profile_residual(n: int, datum: InitialDatum, spec: ProfileSpec,
                         region: Region | str = Region.LOW_BALL,
                         ladder: TimeLadder = TimeLadder(),
                         config: QuadConfig = DEFAULT_CONFIG, jobs: int = 1) -> DecayCurve:
    """‖û - (requested profiles)‖ over the region."""
    _check_dim(n, datum)
    for j, k in spec.low:
        if j not in (0, 1) or not 0 <= k <= 2:
            raise InconsistentSpecError(f"A_{j}^{k} is not available (need j in 0,1 and k <= 2)")
        if k > datum.weight_gamma:
            raise InconsistentSpecError(
                f"A_{j}^{k} uses moments of order {k} but the datum only declares L^1,{datum.weight_gamma:g}")
    if spec.high is not None and not 0 <= spec.high <= 8:
        raise InconsistentSpecError("C^k is available for 0 <= k <= 8")
    stack = residual_stack(datum, spec)
    return curve_of(stack.expression(), region, n, ladder, stack.label, datum.digest(),
                    config, jobs)


def kernel_side_stack(j: int, datum: InitialDatum) -> ProfileStack:
    """E_j · û_j alone (the objects of the first two expansion results)."""
    side = datum.side(f"u{j}")

    def make(env):
        return lambda t, r: kernel_pair(t, r)[j] * env(r)

    terms = tuple(Term(c.amplitude, c.padded_beta(datum.n), make(c.envelope),
                       c.envelope.decay + 4.0 * j) for c in side)
    return ProfileStack(terms, "low", f"E{j}u{j}")


def run_kernel_side_residual(n: int, datum: InitialDatum, j: int, gamma: float,
                             ladder: TimeLadder = TimeLadder(),
                             config: QuadConfig = DEFAULT_CONFIG, jobs: int = 1) -> DecayCurve:
    """‖E_j û_j - A_j^{[γ]}‖ over the low ball."""
    _check_dim(n, datum)
    k = int(math.floor(gamma))
    if k > 2:
        raise InconsistentSpecError("[gamma] > 2 needs moments beyond degree 2")
    stack = kernel_side_stack(j, datum) - build_A(j, k, datum)
    return curve_of(stack.expression(), Region.LOW_BALL, n, ladder, f"E{j}u{j}-A{j}{k}",
                    datum.digest(), config, jobs)


def run_kernel_truncation(n: int, j: int, k: int, ladder: TimeLadder = TimeLadder(),
                          config: QuadConfig = DEFAULT_CONFIG, jobs: int = 1) -> DecayCurve:
    """‖E_j - Σ_{p<=k} 𝓛_j^p‖ over the low ball."""
    expr = Expression((Term(1.0, (0,) * n, lambda t, r: kernel_truncation(j, k, t, r)),))
    return curve_of(expr, Region.LOW_BALL, n, ladder, f"kernel-trunc-{j}{k}", "", config, jobs)


def run_lemma7(n: int, ladder: TimeLadder = TimeLadder(),
               config: QuadConfig = DEFAULT_CONFIG, jobs: int = 1) -> DecayCurve:
    values = _sample(lambda t: lemma7_integral(n, t, config), ladder.times, jobs)
    return DecayCurve(tuple(float(t) for t in ladder.times), tuple(values), "lemma7", "low")


# -- lower bounds ----------------------------------------------------------------------

@dataclass(frozen=True)
class LowerBound:
    coefficient: float
    exponent: float = 0.0
    law: str = "power"  # or "log" / "sqrtlog": coefficient · (sqrt) log t

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.law == "sqrtlog":
            return self.coefficient * np.sqrt(np.log(t))
        if self.law == "log":
            return self.coefficient * np.log(t)
        return self.coefficient * t**self.exponent


@dataclass(frozen=True)
class LowerBoundResult:
    status: str  # "pass", "fail" or "degenerate"
    margin: float

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def check_lower_bound(curve: DecayCurve, bound: LowerBound, window: tuple[float, float] = (LOWER_T_MIN, math.inf),
                      slack: float = LOWER_SLACK) -> LowerBoundResult:
    """Worst ratio curve(t) / bound(t) on the window; pass when >= slack."""
    if bound.coefficient == 0:
        return LowerBoundResult("degenerate", math.nan)
    part = curve.window(*window)
    if not part.t:
        raise ValueError("no ladder points inside the lower-bound window")
    t = np.array(part.t)
    margin = float(np.min(np.array(part.values) / bound(t)))
    return LowerBoundResult("pass" if margin >= slack else "fail", margin)


def _ball_radial(p: float) -> float:
    """∫_0^1 x^p e^{-x⁴} dx through the regularised incomplete gamma function."""
    a = (p + 1) / 4
    return float(special.gamma(a) * special.gammainc(a, 1.0) / 4)


def lemma7_lower_constant(n: int) -> tuple[float, str]:
    """Constant c and law with ∫_{|ξ|<=1} e^{-t|ξ|⁴} sin²(t|ξ|)/|ξ|² ≥ c·law(t) for large t."""
    if n == 1:
        return (2 - 2 / math.pi) / (4 * math.e), "t"
    if n == 2:
        return 3 * math.pi / 16, "log"
    return 0.25 * sphere_area(n) * _ball_radial(n - 3), "power"


def moment_values(datum: InitialDatum):
    """Physical moments (P1, P0, P_{1,j}, P_{0,j}, second moments of u1)."""
    n = datum.n
    t0 = taylor_terms(datum.u0, 1, n)
    t1 = taylor_terms(datum.u1, 2, n)
    zero = (0,) * n
    P1 = t1.physical_moment(zero)
    P0 = t0.physical_moment(zero)
    P1j = [t1.physical_moment(a) for a in degree_indices(n, 1)]
    P0j = [t0.physical_moment(a) for a in degree_indices(n, 1)]
    second = {a: t1.physical_moment(a) for a in degree_indices(n, 2)}
    return P1, P0, P1j, P0j, second


def thm43_lower(datum: InitialDatum) -> LowerBound:
    n = datum.n
    P1 = abs(moment_values(datum)[0])
    c, law = lemma7_lower_constant(n)
    if law == "t":
        return LowerBound(P1 * math.sqrt(c), 0.5)
    if law == "log":
        return LowerBound(P1 * math.sqrt(c), 0.0, "sqrtlog")
    return LowerBound(P1 * math.sqrt(c), -n / 8 + 0.25)


def thm44_lower(datum: InitialDatum) -> LowerBound:
    n = datum.n
    _, P0, P1j, _, _ = moment_values(datum)
    K = sphere_area(n) * _ball_radial(n - 1)
    coef2 = K * (sum(abs(p) ** 2 for p in P1j) / (4 * n) + abs(P0) ** 2 / 4)
    return LowerBound(math.sqrt(coef2), -n / 8)


def thm45_lower(datum: InitialDatum, config: QuadConfig = DEFAULT_CONFIG) -> LowerBound:
    n = datum.n
    _, _, _, P0j, second = moment_values(datum)
    c1, c2, c3 = thm45_constants(n, config)
    diag = []
    for j in range(n):
        a = [0] * n
        a[j] = 2
        diag.append(second[tuple(a)])
    coef2 = c1 * sum(abs(m) ** 2 for m in diag)
    for j in range(n):
        for k in range(j + 1, n):
            a = [0] * n
            a[j] += 1
            a[k] += 1
            coef2 += c2 * (diag[j] * np.conj(diag[k])).real + 2 * c2 * abs(second[tuple(a)]) ** 2
    coef2 += c3 * sum(abs(p) ** 2 for p in P0j)
    return LowerBound(math.sqrt(max(coef2, 0.0)), -n / 8 - 0.25)


def thm45_constants_direct(n: int) -> tuple[float, float, float]:
    """(C1, C2, C3) by nested quadrature in polar/spherical coordinates (n <= 3)."""
    from scipy import integrate

    def w(r):
        return np.exp(-r**4)

    if n == 1:
        c3 = integrate.quad(lambda x: x**2 * w(abs(x)), -1, 1, epsabs=0, epsrel=1e-13)[0] / 8
        c1 = integrate.quad(lambda x: x**2 * w(abs(x)), -1, 1, epsabs=0, epsrel=1e-13)[0] / 32
        return c1, 0.0, c3
    if n == 2:
        def polar(f):
            return integrate.dblquad(lambda th, r: f(r, th) * r, 0, 1, 0, 2 * math.pi,
                                     epsabs=0, epsrel=1e-12)[0]
        c1 = polar(lambda r, th: (r * math.cos(th)) ** 4 / r**2 * w(r)) / 32
        c2 = polar(lambda r, th: (r * math.cos(th)) ** 2 * (r * math.sin(th)) ** 2 / r**2 * w(r)) / 16
        c3 = polar(lambda r, th: r**2 * w(r)) / 16
        return c1, c2, c3
    if n == 3:
        def sph(f):
            return integrate.tplquad(
                lambda ph, th, r: f(r, th, ph) * r**2 * math.sin(th),
                0, 1, 0, math.pi, 0, 2 * math.pi, epsabs=0, epsrel=1e-11)[0]
        c1 = sph(lambda r, th, ph: (r * math.sin(th) * math.cos(ph)) ** 4 / r**2 * w(r)) / 32
        c2 = sph(lambda r, th, ph: (r * math.sin(th) * math.cos(ph)) ** 2
                 * (r * math.sin(th) * math.sin(ph)) ** 2 / r**2 * w(r)) / 16
        c3 = sph(lambda r, th, ph: r**2 * w(r)) / 24
        return c1, c2, c3
    raise ValueError("direct cross-check implemented for n <= 3")


# -- case map ------------------------------------------------------------------------------

@dataclass(frozen=True)
class CaseEntry:
    case: str
    profiles: ProfileSpec
    exponent: Fraction
    rule: str

    @property
    def subtracts(self) -> str:
        names = [f"A_{j}^{k}" for j, k in self.profiles.low]
        if self.profiles.high is not None:
            names.append(f"C^{self.profiles.high}")
        return " and ".join(names) if names else "none"


def _exact(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


A10 = ProfileSpec(low=((1, 0),))
C0 = ProfileSpec(high=0)
A10_C0 = ProfileSpec(low=((1, 0),), high=0)


def classify_case(n: int, l) -> CaseEntry:
    """Regime of ‖û - profiles‖_2 for data in H^{l+1} × H^l (exact rational boundaries)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lq = _exact(l)
    if lq < 0:
        raise ValueError("l must be >= 0")
    nq = Fraction(n)
    lstar = nq / 4 - Fraction(3, 2)
    if n <= 3:
        return CaseEntry("iii", A10, -nq / 8, "0 <= l, n = 1, 2, 3")
    if n in (4, 5):
        if lq <= nq / 4 - 1:
            return CaseEntry("iii", A10, -(lq + 1) / 2, "0 <= l <= n/4 - 1, n = 4, 5")
        return CaseEntry("iii", A10, -nq / 8, "n/4 - 1 < l, n >= 4")
    if lq < lstar:
        if n >= 18 and lq <= nq / 4 - Fraction(9, 2):
            return CaseEntry("i", C0, -(lq + 4) / 2, "0 <= l <= n/4 - 9/2, n >= 18")
        return CaseEntry("i", C0, -nq / 8 + Fraction(1, 4), "l < n/4 - 3/2 (high-frequency part removed)")
    if lq == lstar:
        return CaseEntry("ii", A10_C0, -nq / 8, "l = n/4 - 3/2, n >= 6")
    if lq <= nq / 4 - 1:
        return CaseEntry("iii", A10, -(lq + 1) / 2, "n/4 - 3/2 < l <= n/4 - 1, n >= 6")
    return CaseEntry("iii", A10, -nq / 8, "n/4 - 1 < l, n >= 4")


def l_star(n: int) -> Fraction:
    return Fraction(n, 4) - Fraction(3, 2)


def k_star(n: int) -> Fraction:
    return Fraction(n - 18, 12)


def solution_norm_exponent(n: int, l) -> tuple[float, str]:
    """Expected law of the full-space ‖û‖: regularity-limited or diffusive."""
    lq = _exact(l)
    if n >= 6 and lq <= l_star(n):
        return float(-(lq + 1) / 2), "power"
    if n == 1:
        return 0.5, "power"
    if n == 2:
        return 0.0, "sqrtlog"
    return -n / 8 + 0.25, "power"


# -- verdicts ----------------------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    name: str
    status: str  # pass | fail | degenerate
    measured: float
    expected: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status != "fail"


def slope_verdict(name: str, fit: SlopeFit, expected: float, tol: float, two_sided: bool) -> Verdict:
    if two_sided:
        ok = abs(fit.slope - expected) <= tol
        rule = "two-sided"
    else:
        ok = fit.slope <= expected + tol
        rule = "upper"
    return Verdict(name, "pass" if ok else "fail", fit.slope, expected, tol,
                   f"{rule} slope, max rel residual {fit.max_rel_residual:.2e}")


def lower_verdict(name: str, result: LowerBoundResult) -> Verdict:
    return Verdict(name, result.status, result.margin, LOWER_SLACK, 0.0, "lower-bound margin")


def trend_nonincreasing(curve: DecayCurve, rate: float, last: int = 4) -> bool:
    """t^{rate}·value is nonincreasing over the last ``last`` points."""
    t = np.array(curve.t[-last:])
    v = np.array(curve.values[-last:]) * t**rate
    return bool(np.all(np.diff(v) <= 0))


# -- sweeps ----------------------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    parameter: float
    regime: str
    slope: float
    expected: float
    residual_slope: float | None = None
    residual_expected: float | None = None
    case: str = ""


@dataclass(frozen=True)
class SweepTable:
    n: int
    kind: str
    rows: tuple[SweepRow, ...]
    threshold: Fraction
    regime_change: tuple[tuple[float, float], ...] = ()
    curves: tuple[DecayCurve, ...] = field(default=(), repr=False)


def flattened_threshold_datum(n: int, l: float, eps: float) -> InitialDatum:
    """Threshold datum whose u1 has no |ξ|² Taylor term (smaller pre-asymptotic drift)."""
    return make_threshold_datum(n, l, eps, flatten=True)


def threshold_sweep(n: int, l_values: Iterable[float], ladder: TimeLadder = TimeLadder(),
                    eps: float = 0.02, config: QuadConfig = DEFAULT_CONFIG, jobs: int = 1,
                    fit_t_min: float = FIT_T_MIN) -> SweepTable:
    """Full-space solution-norm slope and case residual slope for each l."""
    rows = []
    curves = []
    lstar = l_star(n)
    for l in l_values:
        datum = make_threshold_datum(n, l, eps)
        curve = run_solution_norm(n, datum, ladder, Region.FULL, config, jobs)
        curves.append(curve)
        expected, law = solution_norm_exponent(n, l)
        part = curve.window(fit_t_min)
        slope = fit_decay(part, "log" if law == "sqrtlog" else "power").slope
        entry = classify_case(n, l)
        res = run_profile_residual(n, datum, entry.profiles, Region.FULL, ladder, config, jobs)
        curves.append(res)
        rslope = fit_decay(res.window(fit_t_min)).slope
        regime = "regularity-loss" if _exact(l) < lstar else "diffusion-wave"
        rows.append(SweepRow(float(l), regime, slope, expected, rslope, float(entry.exponent),
                             entry.case))
    changes = tuple((a.parameter, b.parameter) for a, b in zip(rows, rows[1:])
                    if a.regime != b.regime)
    return SweepTable(n, "l", tuple(rows), lstar, changes, tuple(curves))


def k_sweep(n: int, k_values: Iterable[int], ladder: TimeLadder = TimeLadder(), l: float = 0.0,
            eps: float = 0.02, config: QuadConfig = DEFAULT_CONFIG, jobs: int = 1,
            fit_t_min: float = FIT_T_MIN, datum: InitialDatum | None = None) -> SweepTable:
    """Full-space slope of ‖û - C^k‖ for each k; saturation expected once k >= k*."""
    if datum is None:
        datum = flattened_threshold_datum(n, l, eps)
    kstar = k_star(n)
    diffusive = -n / 8 + 0.25
    rows = []
    curves = []
    for k in k_values:
        curve = run_profile_residual(n, datum, ProfileSpec(high=int(k)), Region.FULL, ladder,
                                     config, jobs)
        curves.append(curve)
        slope = fit_decay(curve.window(fit_t_min)).slope
        regime = "diffusion-wave" if k >= kstar else "regularity-loss"
        expected = diffusive if k >= kstar else -(l + 3 * k + 4) / 2
        rows.append(SweepRow(float(k), regime, slope, expected))
    changes = tuple((a.parameter, b.parameter) for a, b in zip(rows, rows[1:])
                    if a.regime != b.regime)
    return SweepTable(n, "k", tuple(rows), kstar, changes, tuple(curves))


# -- default data per harness ------------------------------------------------------------------------

def default_datum(experiment: str, n: int, l: float = 0.0, eps: float = 0.02) -> InitialDatum:
    zero = (0,) * n
    if experiment == "thm45" or experiment == "thm63":
        e1 = (1,) + (0,) * (n - 1)
        u0 = (DatumComponent(Gaussian(1.0), zero, 1.0), DatumComponent(Gaussian(1.0), e1, 0.5))
        u1 = (DatumComponent(Gaussian(1.0), zero, 1.0),)
        return InitialDatum(n, u0, u1, 0.0, 2.0)
    if experiment in ("thm46", "thm47"):
        return make_threshold_datum(n, l, eps)
    if experiment == "thm61":
        return flattened_threshold_datum(n, l, eps)
    return gaussian_datum(n)


def zero_moment_datum(n: int) -> InitialDatum:
    """u0 = 0 and u1 with vanishing zeroth and first moments."""
    beta = (2,) + (0,) * (n - 1)
    return InitialDatum(n, (), (DatumComponent(Gaussian(1.0), beta, 1.0),), 0.0, 2.0)


# -- kernel checks --------------------------------------------------------------------------------------

KERNEL_T_GRID = np.geomspace(0.1, 100.0, 20)
KERNEL_R_GRID = np.geomspace(1e-2, 10.0, 20)
CONTINUITY_T = (0.1, 1.0, 10.0, 100.0)
CONTINUITY_EPS = 1e-8


def ode_residual_max(t_grid: Sequence[float] = KERNEL_T_GRID,
                     r_grid: Sequence[float] = KERNEL_R_GRID) -> float:
    from .kernels import ode_residual

    datum = gaussian_datum(1)
    worst = 0.0
    for t in t_grid:
        h = min(1e-3, t / 4)
        for r in r_grid:
            worst = max(worst, ode_residual(float(t), float(r), datum, h))
    return worst


def branch_jump(t: float, j: int, eps: float = CONTINUITY_EPS) -> float:
    """|E_j(t, r_b - eps) - E_j(t, r_b + eps)| / max(1, |E_j|)."""
    from .kernels import BRANCH_R

    lo = kernel_pair(t, BRANCH_R - eps)[j]
    hi = kernel_pair(t, BRANCH_R + eps)[j]
    return float(abs(lo - hi) / max(1.0, abs(lo), abs(hi)))


def root_identity_max(r_grid: Sequence[float] = np.geomspace(1e-4, 1e4, 200)) -> float:
    from .kernels import char_roots

    worst = 0.0
    for r in r_grid:
        roots = char_roots(float(r))
        s = roots.lambda1 + roots.lambda2
        p = roots.lambda1 * roots.lambda2
        worst = max(worst, abs(s + r**4) / r**4, abs(p - r**2) / r**2)
    return worst


def c0_identity_max(t_grid: Sequence[float] = (0.5, 4.0, 64.0, 1024.0),
                    r_grid: Sequence[float] = np.geomspace(0.05, 50.0, 40)) -> float:
    """max relative |C⁰ multipliers - (e^{-t/r²}, 0)|."""
    from .profiles import c_multipliers

    worst = 0.0
    for t in t_grid:
        r = np.asarray(r_grid)
        c0, c1 = c_multipliers(0, t, r)
        ref = np.exp(-t / r**2)
        mask = ref > 0
        worst = max(worst, float(np.max(np.abs(c0[mask] - ref[mask]) / ref[mask])),
                    float(np.max(np.abs(c1))))
    return worst


def kernel_checks() -> list[Verdict]:
    out = []
    ode = ode_residual_max()
    out.append(Verdict("ode-residual", "pass" if ode <= 1e-6 else "fail", ode, 0.0, 1e-6,
                       "20x20 (t, r) grid"))
    jump = max(branch_jump(t, j) for t in CONTINUITY_T for j in (0, 1))
    out.append(Verdict("branch-continuity", "pass" if jump <= 1e-8 else "fail", jump, 0.0, 1e-8,
                       f"eps = {CONTINUITY_EPS:g}"))
    roots = root_identity_max()
    out.append(Verdict("root-identities", "pass" if roots <= 1e-12 else "fail", roots, 0.0, 1e-12,
                       "sum and product of roots"))
    c0 = c0_identity_max()
    out.append(Verdict("c0-identity", "pass" if c0 <= 1e-14 else "fail", c0, 0.0, 1e-14,
                       "C^0 against e^{-t/r^2} u0"))
    return out
