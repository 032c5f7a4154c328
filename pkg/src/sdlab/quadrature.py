"""L² norms of radial-times-monomial expressions over balls and shells.

An expression is a finite sum of terms c · f(t, |ξ|) · ξ^α with complex c,
real radial factor f and multi-index α. Its squared modulus expands into
pairs; each pair splits into a sphere moment (closed form) times a 1-D radial
integral, so the cost does not depend on the dimension n.

Radial integrals use composite Gauss-Legendre panels. Where the integrand
oscillates like sin(t r) the panel width is capped so the phase advances at
most ``panel_phase_cap`` per panel. Unbounded ranges are covered by
geometric panels and closed with a power-law tail correction derived from
the declared large-r decay of each term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .kernels import BRANCH_R

SQRT2 = math.sqrt(2.0)


class Region(Enum):
    LOW_BALL = "low"  # r <= 1
    HIGH_SHELL = "high"  # r >= sqrt(2)
    MID_ANNULUS = "mid"  # 1 <= r <= sqrt(2)
    FULL = "full"

    @classmethod
    def parse(cls, value: "Region | str") -> "Region":
        if isinstance(value, Region):
            return value
        aliases = {
            "low": cls.LOW_BALL, "lowball": cls.LOW_BALL, "low_ball": cls.LOW_BALL,
            "high": cls.HIGH_SHELL, "highshell": cls.HIGH_SHELL, "high_shell": cls.HIGH_SHELL,
            "mid": cls.MID_ANNULUS, "midannulus": cls.MID_ANNULUS, "mid_annulus": cls.MID_ANNULUS,
            "full": cls.FULL,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown region {value!r}") from None


class NonintegrableTailError(ArithmeticError):
    """The integrand does not decay fast enough at infinity."""


class BudgetExceededError(RuntimeError):
    """The panel layout would exceed ``QuadConfig.max_panels``."""


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float = 1e-7
    panel_phase_cap: float = math.pi / 4
    gl_order: int = 16
    tail_tol: float = 1e-12
    max_panels: int = 4_000_000
    min_panels: int = 32
    geometric_ratio: float = 2.0**0.25
    chunk_nodes: int = 1 << 18

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not 0 < self.panel_phase_cap <= math.pi / 2:
            raise ValueError("panel_phase_cap must lie in (0, pi/2]")
        if self.gl_order < 2:
            raise ValueError("gl_order must be >= 2")


DEFAULT_CONFIG = QuadConfig()

RadialFn = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Term:
    """coeff · radial(t, r) · ξ^alpha.

    ``decay`` is the exact large-r power law of the radial factor,
    |radial| ~ C r^{-decay}; ``math.inf`` for faster-than-power decay and
    ``None`` when unknown (measured numerically).
    """

    coeff: complex
    alpha: tuple[int, ...]
    radial: RadialFn
    decay: float | None = math.inf
    label: str = ""

    @property
    def degree(self) -> int:
        return sum(self.alpha)


@dataclass(frozen=True)
class Expression:
    terms: tuple[Term, ...] = ()

    def __add__(self, other: "Expression") -> "Expression":
        return Expression(self.terms + tuple(other.terms))

    def __sub__(self, other: "Expression") -> "Expression":
        return self + other.scaled(-1.0)

    def scaled(self, c: complex) -> "Expression":
        return Expression(tuple(
            Term(c * tm.coeff, tm.alpha, tm.radial, tm.decay, tm.label) for tm in self.terms
        ))

    def fused(self) -> "Expression":
        """One term per angular monomial, radial parts summed pointwise.

        Differences such as û - profile then cancel inside the radial factor
        instead of inside a Gram expansion, which keeps small residuals exact.
        """
        width = max((len(tm.alpha) for tm in self.terms), default=0)
        groups: dict[tuple[int, ...], list[Term]] = {}
        for tm in self.terms:
            if tm.coeff == 0:
                continue
            groups.setdefault((tuple(tm.alpha) + (0,) * width)[:width], []).append(tm)
        fused = []
        for alpha, members in groups.items():
            if len(members) == 1:
                fused.append(members[0])
                continue
            decays = [m.decay for m in members]
            decay = None if any(d is None for d in decays) else min(decays)
            fused.append(Term(1.0, alpha, _combined_radial(tuple(members)), decay,
                              "+".join(m.label for m in members if m.label)))
        return Expression(tuple(fused))

    def evaluate(self, t: float, xi: np.ndarray) -> np.ndarray:
        """Pointwise value at frequency vectors xi of shape (..., n)."""
        xi = np.asarray(xi, dtype=float)
        r = np.sqrt(np.sum(xi * xi, axis=-1))
        out = np.zeros(r.shape, dtype=complex)
        for tm in self.terms:
            mono = np.ones(r.shape)
            for j, a in enumerate(tm.alpha):
                if a:
                    mono = mono * xi[..., j] ** a
            out += tm.coeff * tm.radial(t, r) * mono
        return out


def _combined_radial(members: tuple[Term, ...]) -> RadialFn:
    def radial(t, r):
        out = None
        for m in members:
            v = m.coeff * np.asarray(m.radial(t, r))
            out = v if out is None else out + v
        if np.iscomplexobj(out) and not np.any(out.imag):
            out = out.real
        return out
    return radial


def sphere_moment(alpha: Sequence[int], n: int) -> float:
    """∫_{S^{n-1}} η^alpha dS; for n = 1 the sphere is {-1, +1}."""
    if n < 1:
        raise ValueError("n must be >= 1")
    alpha = tuple(alpha) + (0,) * (n - len(alpha))
    if len(alpha) > n:
        if any(alpha[n:]):
            raise ValueError(f"multi-index {alpha} longer than dimension {n}")
        alpha = alpha[:n]
    if any(a % 2 for a in alpha):
        return 0.0
    log_num = sum(special.gammaln((a + 1) / 2) for a in alpha)
    return 2.0 * math.exp(log_num - special.gammaln((n + sum(alpha)) / 2))


def sphere_area(n: int) -> float:
    return sphere_moment((0,) * n, n)


def _pad(alpha: tuple[int, ...], n: int) -> tuple[int, ...]:
    if len(alpha) > n and any(alpha[n:]):
        raise ValueError(f"multi-index {alpha} longer than dimension {n}")
    return (tuple(alpha) + (0,) * n)[:n]


def expand_pairs(expr: Expression, n: int) -> list[tuple[int, int, float]]:
    """Index pairs (a, b) with a <= b and their angular weights.

    The weight is the sphere moment of the combined class, doubled for
    off-diagonal pairs. Pairs whose combined class has an odd exponent
    integrate to zero over the sphere and are dropped here, before any radial
    work.
    """
    pairs = []
    terms = expr.terms
    for a in range(len(terms)):
        for b in range(a, len(terms)):
            alpha = tuple(x + y for x, y in zip(_pad(terms[a].alpha, n), _pad(terms[b].alpha, n)))
            if any(x % 2 for x in alpha):
                continue
            if terms[a].coeff == 0 or terms[b].coeff == 0:
                continue
            w = sphere_moment(alpha, n) * (2.0 if a != b else 1.0)
            if w != 0.0:
                pairs.append((a, b, w))
    return pairs


@lru_cache(maxsize=None)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel_nodes(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gauss_legendre(order)
    a = edges[:-1, None]
    b = edges[1:, None]
    half = (b - a) / 2
    nodes = (a + b) / 2 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def _oscillatory_edges(a: float, b: float, omega: float, cfg: QuadConfig) -> np.ndarray:
    count = max(cfg.min_panels, math.ceil((b - a) * omega / cfg.panel_phase_cap))
    if count > cfg.max_panels:
        raise BudgetExceededError(
            f"{count} panels needed on [{a}, {b}] at frequency {omega}; cap is {cfg.max_panels}"
        )
    return np.linspace(a, b, count + 1)


def _real_dot(u: np.ndarray, v: np.ndarray, w) -> float:
    if np.iscomplexobj(u) or np.iscomplexobj(v):
        return float(np.sum((u.real * v.real + u.imag * v.imag) * w))
    return float(np.sum(u * v * w))


@dataclass
class _Accumulator:
    """Real parts of ∫ c_a F_a conj(c_b F_b) r^{n-1} dr over the used pairs."""

    expr: Expression
    n: int
    t: float
    pairs: list[tuple[int, int, float]]
    used: list[int] = field(init=False)
    gram: dict[tuple[int, int], float] = field(init=False)
    panels: int = 0

    def __post_init__(self):
        self.used = sorted({a for a, _, _ in self.pairs} | {b for _, b, _ in self.pairs})
        self.gram = {(a, b): 0.0 for a, b, _ in self.pairs}

    def values(self, r: np.ndarray) -> dict[int, np.ndarray]:
        """c_a F_a(r) r^{(n-1)/2}; splitting the Jacobian keeps large n finite."""
        half = r ** ((self.n - 1) / 2) if self.n > 1 else None
        out = {}
        for i in self.used:
            tm = self.expr.terms[i]
            f = np.asarray(tm.radial(self.t, r))
            if tm.coeff != 1:
                f = tm.coeff * f
            if tm.degree:
                f = f * r**tm.degree
            if half is not None:
                f = f * half
            out[i] = f
        return out

    def add_nodes(self, r: np.ndarray, w: np.ndarray, cfg: QuadConfig) -> None:
        step = cfg.chunk_nodes
        for lo in range(0, r.size, step):
            rr = r[lo:lo + step]
            ww = w[lo:lo + step]
            vals = self.values(rr)
            for a, b, _ in self.pairs:
                self.gram[(a, b)] += _real_dot(vals[a], vals[b], ww)

    def total(self) -> float:
        return sum(wt * self.gram[(a, b)] for a, b, wt in self.pairs)

    def abs_total(self) -> float:
        return sum(abs(wt * self.gram[(a, b)]) for a, b, wt in self.pairs)


def _integrate_finite(acc: _Accumulator, edges: np.ndarray, cfg: QuadConfig) -> None:
    acc.panels += len(edges) - 1
    if acc.panels > cfg.max_panels:
        raise BudgetExceededError(f"panel budget {cfg.max_panels} exceeded")
    r, w = _panel_nodes(edges, cfg.gl_order)
    acc.add_nodes(r, w, cfg)


def _pair_decay(acc: _Accumulator, a: int, b: int) -> float | None:
    ta, tb = acc.expr.terms[a], acc.expr.terms[b]
    if ta.decay is None or tb.decay is None:
        return None
    return (ta.decay - ta.degree) + (tb.decay - tb.degree) - (acc.n - 1)


def _integrate_to_infinity(acc: _Accumulator, start: float, cfg: QuadConfig) -> None:
    """Geometric panels from ``start`` outward plus a power-law tail."""
    for a, b, _ in acc.pairs:
        p = _pair_decay(acc, a, b)
        if p is not None and p <= 1.0:
            raise NonintegrableTailError(
                f"integrand pair ({acc.expr.terms[a].label or a}, "
                f"{acc.expr.terms[b].label or b}) decays like r^-{p:g}; not integrable"
            )
    q = cfg.geometric_ratio
    per_chunk = 16
    chunk_log = per_chunk * math.log(q)
    declared = {(a, b): _pair_decay(acc, a, b) for a, b, _ in acc.pairs}
    finite = [p for p in declared.values() if p is not None and math.isfinite(p)]
    p_floor = min(finite) if finite else None
    radius = start
    seen_nonzero = False
    hard_cap = 1e12 * max(1.0, math.sqrt(acc.t))
    prev_env = None
    while True:
        edges = radius * q ** np.arange(per_chunk + 1)
        _integrate_finite(acc, edges, cfg)
        radius = float(edges[-1])
        vals = acc.values(np.array([radius]))
        raw = {(a, b): _real_dot(vals[a], vals[b], 1.0) for a, b, _ in acc.pairs}
        local = {(a, b): wt * raw[(a, b)] for a, b, wt in acc.pairs}
        envelope = sum(abs(v) for v in local.values())
        measured = None
        if prev_env and envelope > 0:
            measured = -math.log(envelope / prev_env) / chunk_log
        prev_env = envelope
        if envelope == 0.0:
            if seen_nonzero or radius > hard_cap:
                return
            continue
        seen_nonzero = True
        if radius > 1e150:
            raise NonintegrableTailError("tail did not converge before r = 1e150")
        # the power-law tail is only trusted once the integrand decays at
        # (nearly) its declared rate; e^{-t/r²}-type factors grow before that
        if measured is None or measured <= 1.0:
            if measured is not None and p_floor is None and radius > 1e6:
                raise NonintegrableTailError(f"measured tail decay r^-{measured:.3g} is not integrable")
            continue
        if p_floor is not None and measured < 0.9 * p_floor:
            continue
        tail_abs = 0.0
        for key, v in local.items():
            p = declared[key]
            if p is None:
                p = measured
            if math.isfinite(p):
                tail_abs += abs(v) * radius / (p - 1.0)
        scale = max(acc.abs_total(), 1e-300)
        if tail_abs <= cfg.tail_tol * scale:
            break
        # the tail is a leading-order power law with relative error O((1 + t)/R²)
        if tail_abs * (1.0 + acc.t) / radius**2 <= cfg.tail_tol * scale:
            break
    for key, v in raw.items():
        p = declared[key]
        if p is None:
            p = measured
        if math.isfinite(p):
            acc.gram[key] += v * radius / (p - 1.0)


def _layout(region: Region, t: float, cfg: QuadConfig) -> list[tuple[str, float, float]]:
    """Pieces as (kind, a, b); kind is 'osc', 'smooth' or 'inf'."""
    if region is Region.LOW_BALL:
        return [("osc", 0.0, 1.0)]
    if region is Region.MID_ANNULUS:
        return [("osc", 1.0, BRANCH_R), ("smooth", BRANCH_R, SQRT2)]
    if region is Region.HIGH_SHELL:
        return [("inf", SQRT2, math.inf)]
    return [("osc", 0.0, BRANCH_R), ("inf", BRANCH_R, math.inf)]


def radial_gram(expr: Expression, region: Region | str, t: float, n: int,
                config: QuadConfig = DEFAULT_CONFIG) -> tuple[list, dict]:
    """Pairs kept after parity filtering and their radial integrals."""
    region = Region.parse(region)
    if t < 0:
        raise ValueError("t must be nonnegative")
    pairs = expand_pairs(expr, n)
    acc = _Accumulator(expr, n, float(t), pairs)
    if not pairs:
        return pairs, acc.gram
    omega = max(float(t), 1.0)
    for kind, a, b in _layout(region, t, config):
        if kind == "osc":
            _integrate_finite(acc, _oscillatory_edges(a, b, omega, config), config)
        elif kind == "smooth":
            _integrate_finite(acc, np.linspace(a, b, config.min_panels + 1), config)
        else:
            _integrate_to_infinity(acc, a, config)
    return pairs, acc.gram


def norm_sq(expr: Expression, region: Region | str, t: float, n: int,
            config: QuadConfig = DEFAULT_CONFIG, fuse: bool = True) -> float:
    """∫_region |expr(t, ξ)|² dξ."""
    if fuse:
        expr = expr.fused()
    pairs, gram = radial_gram(expr, region, t, n, config)
    return float(sum(w * gram[(a, b)] for a, b, w in pairs))


def norm(expr: Expression, region: Region | str, t: float, n: int,
         config: QuadConfig = DEFAULT_CONFIG, fuse: bool = True) -> float:
    return math.sqrt(max(norm_sq(expr, region, t, n, config, fuse), 0.0))


def radial_integral(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                    omega: float = 0.0, config: QuadConfig = DEFAULT_CONFIG) -> float:
    """∫_a^b f(r) dr on a finite interval with the panel-phase rule."""
    edges = _oscillatory_edges(a, b, max(omega, 1e-300), config)
    r, w = _panel_nodes(edges, config.gl_order)
    return float(np.dot(f(r), w))


# -- Monte Carlo oracle -------------------------------------------------------

@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    samples: int


def _region_mask(r: np.ndarray, region: Region) -> np.ndarray:
    if region is Region.LOW_BALL:
        return r <= 1.0
    if region is Region.MID_ANNULUS:
        return (r >= 1.0) & (r <= SQRT2)
    if region is Region.HIGH_SHELL:
        return r >= SQRT2
    return np.ones(r.shape, dtype=bool)


def mc_crosscheck(expr: Expression, region: Region | str, t: float, n: int,
                  samples: int = 10**6, radius: float | None = None,
                  seed: int = 20240601) -> MCEstimate:
    """Plain Monte Carlo of ∫|expr|² over the region intersected with a ball.

    Points are uniform in the ball of the given radius (1 for the low ball,
    6 otherwise), so unbounded regions are truncated there.
    """
    region = Region.parse(region)
    if n > 3:
        raise ValueError("Monte Carlo oracle is limited to n <= 3")
    if samples < 10**5:
        raise ValueError("use at least 1e5 samples")
    if radius is None:
        radius = 1.0 if region is Region.LOW_BALL else 6.0
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal((samples, n))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    rad = radius * rng.random(samples) ** (1.0 / n)
    xi = direction * rad[:, None]
    vol = sphere_area(n) * radius**n / n
    vals = np.abs(expr.evaluate(t, xi)) ** 2
    vals = np.where(_region_mask(rad, region), vals, 0.0)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(samples))
    return MCEstimate(vol * mean, vol * se, samples)


# -- integrals with a fixed integrand -----------------------------------------

def diffusion_wave_radial(t: float, r: np.ndarray) -> np.ndarray:
    """e^{-t r⁴/2} sin(t r)/r, continuous at r = 0."""
    r = np.asarray(r, dtype=float)
    return np.exp(-t * r**4 / 2) * t * np.sinc(t * r / np.pi)


def lemma7_integral(n: int, t: float, config: QuadConfig = DEFAULT_CONFIG) -> float:
    """∫_{|ξ|<=1} e^{-t|ξ|⁴} sin²(t|ξ|)/|ξ|² dξ by panel quadrature."""
    if t < 1:
        raise ValueError("t must be >= 1")
    expr = Expression((Term(1.0, (0,) * n, diffusion_wave_radial, label="L10"),))
    return norm_sq(expr, Region.LOW_BALL, t, n, config)


def lemma7_integral_split(n: int, t: float) -> float:
    """Same integral through sin² = (1 - cos 2tr)/2, with library quadrature.

    Write e^{-tr⁴} = 1 + D. The undamped part ∫ sin²(tr) r^{n-3} dr is exact
    for n <= 2 (sine/cosine integrals) and Fourier-weighted QUADPACK for
    n >= 3; the correction D r^{n-3} sin²(tr) is non-singular and split into
    a plain half and a cosine-weighted half.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    if n == 1:
        si, _ = special.sici(2 * t)
        base = t * si - math.sin(t) ** 2
    elif n == 2:
        _, ci = special.sici(2 * t)
        base = 0.5 * (np.euler_gamma + math.log(2 * t) - ci)
    else:
        p = n - 3
        osc, _ = integrate.quad(lambda r: r**p, 0.0, 1.0, weight="cos", wvar=2 * t, limit=5000)
        base = 0.5 * (1.0 / (p + 1) - osc)

    def corr(r):
        return math.expm1(-t * r**4) * r ** (n - 3) if r > 0 else 0.0

    knots = [0.0] + [k * t**-0.25 for k in (1.0, 2.0, 3.0) if k * t**-0.25 < 1.0] + [1.0]
    plain = cosine = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        plain += integrate.quad(corr, a, b, limit=500, epsabs=0, epsrel=1e-13)[0]
        cosine += integrate.quad(corr, a, b, weight="cos", wvar=2 * t, limit=5000,
                                 epsabs=0, epsrel=1e-10)[0]
    return sphere_area(n) * (base + 0.5 * (plain - cosine))


def _ball_power_integral(p: float, config: QuadConfig = DEFAULT_CONFIG) -> float:
    """∫_0^1 r^p e^{-r⁴} dr."""
    return radial_integral(lambda r: r**p * np.exp(-r**4), 0.0, 1.0, 0.0, config)


def thm45_constants(n: int, config: QuadConfig = DEFAULT_CONFIG) -> tuple[float, float, float]:
    """(C1, C2, C3) of the second-order lower bound; C2 = 0 when n = 1.

    C1 = 1/32 ∫ η1⁴/|η|² e^{-|η|⁴}, C2 = 1/16 ∫ η1²η2²/|η|² e^{-|η|⁴},
    C3 = 1/(8n) ∫ |η|² e^{-|η|⁴}, all over the unit ball.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rad = _ball_power_integral(n + 1, config)
    c1 = sphere_moment((4,) + (0,) * (n - 1), n) * rad / 32
    c2 = sphere_moment((2, 2) + (0,) * (n - 2), n) * rad / 16 if n >= 2 else 0.0
    c3 = sphere_area(n) * rad / (8 * n)
    return c1, c2, c3
