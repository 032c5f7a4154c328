"""Low- and high-frequency asymptotic profiles.

Low frequencies. With a = |ξ|³ the multipliers factor as

    E_j(t, ξ) = e^{-t r⁴/2} L_j(t, r, a),
    L_0 = cos θ(a),  L_1 = sin θ(a) / ((r/2)√(4 - a²)),  θ(a) = t r - t r⁴ φ(a),
    φ(a) = a / (4 + 2√(4 - a²)),

and the k-th profile term is e^{-t r⁴/2} [L_j]_k r^{3k}, [·]_k the k-th
Taylor coefficient in a.

High frequencies. With b = |ξ|^{-6} and τ = t/r²,

    H_0 = ½ exp(-τ h(b)),  H_1 = exp(-τ h(b)) / (r⁴ √(1 - 4b)),
    h(b) = 2 / (1 + √(1 - 4b))            (Catalan generating function),

the k-th term is [H_j]_k r^{-6k}, and summing all k reproduces the slowly
decaying real-root part of E_0, E_1 exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .datum import InitialDatum, taylor_terms
from .jets import Jet
from .kernels import kernel_pair, solution_multipliers
from .quadrature import Expression, Term

MAX_TERM_ORDER = 4
HIGH_SERIES_ORDER = 40
# the shell remainder is summed as a series where t/r⁸ is small and r >= 2
FUSED_MIN_R = 2.0
FUSED_MAX_X = 0.5


class ProfileSpecError(ValueError):
    """Requested profile is not available for the datum or order."""


# -- scalar series -----------------------------------------------------------------

def phi_taylor(K: int) -> Jet:
    """Taylor coefficients of a / (4 + 2√(4 - a²)) at a = 0."""
    if not 0 <= K <= 8:
        raise ValueError("phi_taylor supports 0 <= K <= 8")
    a = Jet.variable(K)
    return a / (2.0 * (4.0 - a * a).sqrt() + 4.0)


def catalan_h_coeffs(K: int) -> Jet:
    """Taylor coefficients of 2 / (1 + √(1 - 4b)); the Catalan numbers."""
    if not 0 <= K <= 12:
        raise ValueError("catalan_h_coeffs supports 0 <= K <= 12")
    return _h_series(K)


def _h_series(K: int) -> Jet:
    b = Jet.variable(K)
    return 2.0 / ((1.0 - 4.0 * b).sqrt() + 1.0)


def catalan_numbers(K: int) -> list[int]:
    """Reference values from the recurrence C_{k+1} = Σ C_i C_{k-i}."""
    c = [1]
    for k in range(K):
        c.append(sum(c[i] * c[k - i] for i in range(k + 1)))
    return c


# -- closed forms (used as finite-difference oracles) ------------------------------

def phi(a):
    a = np.asarray(a, dtype=float)
    return a / (4.0 + 2.0 * np.sqrt(4.0 - a * a))


def lowfreq_family(j: int, t, r, a):
    """L_j(t, r, a) in closed form."""
    t, r, a = (np.asarray(x, dtype=float) for x in (t, r, a))
    theta = t * r - t * r**4 * phi(a)
    if j == 0:
        return np.cos(theta)
    if j == 1:
        return np.sin(theta) / (0.5 * r * np.sqrt(4.0 - a * a))
    raise ValueError("j must be 0 or 1")


def highfreq_family(j: int, t, r, b):
    """H_j(t, r, b) in closed form."""
    t, r, b = (np.asarray(x, dtype=float) for x in (t, r, b))
    root = np.sqrt(1.0 - 4.0 * b)
    g = np.exp(-(t / r**2) * 2.0 / (1.0 + root))
    if j == 0:
        return 0.5 * g
    if j == 1:
        return g / (r**4 * root)
    raise ValueError("j must be 0 or 1")


# -- jets of the families ----------------------------------------------------------

def _check_j(j: int) -> None:
    if j not in (0, 1):
        raise ValueError("j must be 0 or 1")


def lowfreq_coeffs(j: int, K: int, t, r) -> np.ndarray:
    """[L_j]_k for k = 0..K, shape (K+1, *broadcast(t, r)).

    The large phase t·r never enters a series: sin/cos are split as
    sin(tr + δ) = sin(tr)cos δ + cos(tr) sin δ with δ the nilpotent part.
    """
    _check_j(j)
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    ph = phi_taylor(K).coeffs
    delta = np.zeros((K + 1,) + t.shape)
    for k in range(1, K + 1):
        delta[k] = -t * r**4 * ph[k]
    s, c = Jet(delta)._sincos_nilpotent()
    tr = t * r
    if j == 0:
        return np.cos(tr) * c - np.sin(tr) * s
    sin_over_r = t * np.sinc(tr / np.pi)
    safe = np.where(r > 0, r, 1.0)
    s_over_r = np.where(r > 0, s / safe, 0.0)
    num = Jet(sin_over_r * c + np.cos(tr) * s_over_r)
    a = Jet.variable(K)
    weight = 2.0 * (4.0 - a * a).power(-0.5)
    return (num * Jet(weight.coeffs.reshape((K + 1,) + (1,) * t.ndim))).coeffs


def lowfreq_term(j: int, k: int, t, r):
    """𝓛_j^k(t, r) = e^{-t r⁴/2} [L_j]_k r^{3k}."""
    if not 0 <= k <= MAX_TERM_ORDER:
        raise ValueError(f"order k must lie in 0..{MAX_TERM_ORDER}")
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(t < 0) or np.any(r < 0):
        raise ValueError("t and r must be nonnegative")
    coef = lowfreq_coeffs(j, k, t, r)[k]
    out = np.exp(-t * r**4 / 2) * coef * r ** (3 * k)
    return float(out) if out.ndim == 0 else out


def highfreq_coeffs(j: int, K: int, t, r) -> np.ndarray:
    """[H_j]_k for k = 0..K by jet arithmetic, shape (K+1, *broadcast(t, r)); r > 0."""
    _check_j(j)
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    tau = t / r**2
    h = _h_series(K).coeffs.reshape((K + 1,) + (1,) * t.ndim)
    g = Jet(-tau * h).exp()
    if j == 0:
        return 0.5 * g.coeffs
    b = Jet.variable(K)
    pref = (1.0 - 4.0 * b).power(-0.5).coeffs.reshape((K + 1,) + (1,) * t.ndim)
    return (g * Jet(pref / r**4)).coeffs


def highfreq_term(j: int, k: int, t, r):
    """𝓗_j^k(t, r) = [H_j]_k r^{-6k}; intended for r >= 1, defined for r > 0."""
    if not 0 <= k <= MAX_TERM_ORDER:
        raise ValueError(f"order k must lie in 0..{MAX_TERM_ORDER}")
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    out = _highfreq_term_array(j, k, t, r)
    return float(out) if out.ndim == 0 else out


def _highfreq_term_array(j: int, k: int, t, r) -> np.ndarray:
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    pos = r > 0
    safe = np.where(pos, r, 1.0)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        val = highfreq_coeffs(j, k, t, safe)[k] * safe ** (-6.0 * k)
    return np.where(pos, val, 0.0)


# -- C^k multipliers and the shell remainder ----------------------------------------

def _orders(k: int) -> tuple[int, int]:
    """Highest 𝓗 index multiplying û0 and û1 inside C^k (-1: none)."""
    return k // 2, (k - 1) // 2


def c_multipliers(k: int, t, r) -> tuple[np.ndarray, np.ndarray]:
    """(c0, c1) with C^k = c0·û0 + c1·û1."""
    if not 0 <= k <= 8:
        raise ValueError("C^k is available for 0 <= k <= 8")
    k0, k1 = _orders(k)
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    pos = r > 0
    safe = np.where(pos, r, 1.0)
    K = max(k0, 0)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        h0 = highfreq_coeffs(0, K, t, safe)
        h1 = highfreq_coeffs(1, K, t, safe)
        b = safe**-6.0
        c0 = np.zeros(t.shape)
        c1 = np.zeros(t.shape)
        for p in range(k0 + 1):
            c0 = c0 + (h0[p] + 0.5 * safe**4 * h1[p]) * b**p
        for p in range(k1 + 1):
            c1 = c1 + h1[p] * b**p
    return np.where(pos, c0, 0.0), np.where(pos, c1, 0.0)


@lru_cache(maxsize=None)
def _shell_matrices(P: int) -> tuple[np.ndarray, np.ndarray]:
    """Q[p, m] = [(h-1)^m]_p / m!  and  G = (1-4b)^{-1/2} ∗ Q (in p).

    Then [e^{τ}·2H_0]_p = Σ_m Q[p, m] (-τ)^m and [e^{τ} r⁴ H_1]_p = Σ_m G[p, m] (-τ)^m.
    """
    hm1 = _h_series(P) - 1.0
    Q = np.zeros((P + 1, P + 1))
    power = Jet.constant(1.0, P)
    for m in range(P + 1):
        Q[:, m] = power.coeffs / math.factorial(m)
        power = power * hm1
    b = Jet.variable(P)
    pref = (1.0 - 4.0 * b).power(-0.5).coeffs
    G = np.zeros_like(Q)
    for p in range(P + 1):
        for i in range(p + 1):
            G[p] += pref[i] * Q[p - i]
    return Q, G


def _shell_tail(t: np.ndarray, r: np.ndarray, start0: int, start1: int,
                P: int = HIGH_SERIES_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Σ_{p>=start0} (𝓗_0^p + r⁴/2 𝓗_1^p) and Σ_{p>=start1} 𝓗_1^p, summed directly.

    Written in x = t/r⁸ and b = r^{-6}; Q[p, m] vanishes for m > p so the
    (p, m) term is Q[p, m] (-x)^m b^{p-m}.
    """
    Q, G = _shell_matrices(P)
    x = t / r**8
    b = r**-6.0
    xpow = np.stack([(-x) ** m for m in range(P + 1)])
    bpow = np.stack([b**q for q in range(P + 1)])
    s0 = np.zeros(t.shape)
    s1 = np.zeros(t.shape)
    for p in range(min(start0, start1), P + 1):
        mix = xpow[: p + 1] * bpow[p::-1]
        gp = np.tensordot(G[p, : p + 1], mix, axes=1)
        if p >= start0:
            s0 = s0 + 0.5 * np.tensordot(Q[p, : p + 1], mix, axes=1) + 0.5 * gp
        if p >= start1:
            s1 = s1 + gp
    damp = np.exp(-t / r**2)
    return damp * s0, damp * s1 / r**4


def residual_multipliers(k: int, t, r) -> tuple[np.ndarray, np.ndarray]:
    """(m0 - c0, m1 - c1) for û - C^k, free of cancellation on the far shell."""
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    m0, m1 = solution_multipliers(t, r)
    c0, c1 = c_multipliers(k, t, r)
    d0 = m0 - c0
    d1 = m1 - c1
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        mask = (r >= FUSED_MIN_R) & (t / np.maximum(r, 1.0) ** 8 <= FUSED_MAX_X)
    if mask.any():
        tf, rf = t[mask], r[mask]
        k0, k1 = _orders(k)
        s0, s1 = _shell_tail(tf, rf, k0 + 1, k1 + 1)
        r2 = rf * rf
        sq = np.sqrt(1.0 - 4.0 / (r2 * r2 * r2))
        lam1 = -2.0 / (r2 * (1.0 + sq))
        gap = r2 * r2 * sq
        e2 = np.exp((lam1 - gap) * tf)
        d0 = np.array(d0, dtype=float)
        d1 = np.array(d1, dtype=float)
        d0[mask] = s0 + 0.5 * e2 - 0.5 * r2 * r2 * e2 / gap
        d1[mask] = s1 - e2 / gap
    return d0, d1


def kernel_truncation(j: int, k: int, t, r) -> np.ndarray:
    """E_j - Σ_{p<=k} 𝓛_j^p, evaluated pointwise."""
    e = kernel_pair(t, r)[j]
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    coef = lowfreq_coeffs(j, k, t, r)
    damp = np.exp(-t * r**4 / 2)
    partial = sum(coef[p] * r ** (3 * p) for p in range(k + 1))
    return e - damp * partial


# -- profile stacks ------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileStack:
    """A sum of (coefficient · radial(t, r) · ξ^α) terms with a region tag."""

    terms: tuple[Term, ...]
    region: str = "full"
    label: str = ""

    def expression(self) -> Expression:
        return Expression(self.terms)

    def evaluate(self, t: float, xi) -> complex:
        xi = np.asarray(xi, dtype=float)
        val = self.expression().evaluate(t, xi)
        return complex(val) if np.ndim(val) == 0 else val

    def __add__(self, other: "ProfileStack") -> "ProfileStack":
        region = self.region if self.region == other.region else "full"
        label = "+".join(x for x in (self.label, other.label) if x)
        return ProfileStack(self.terms + other.terms, region, label)

    def __neg__(self) -> "ProfileStack":
        return ProfileStack(tuple(Term(-tm.coeff, tm.alpha, tm.radial, tm.decay, tm.label)
                                  for tm in self.terms), self.region, f"-({self.label})")

    def __sub__(self, other: "ProfileStack") -> "ProfileStack":
        return self + (-other)

    def parity_classes(self) -> list[int]:
        return [tm.degree % 2 for tm in self.terms]


def _low_radial(j: int):
    def radial(t, r):
        return lowfreq_term(j, 0, t, r)
    return radial


def _times_envelope(fn, env, which: int):
    def radial(t, r):
        return fn(t, r)[which] * env(r)
    return radial


def build_B(j: int, k: int, datum: InitialDatum) -> ProfileStack:
    """B_j^k = 𝓛_j^0 · m[u_j]^k (the only term while k <= 2)."""
    _check_j(j)
    if not 0 <= k <= 2:
        raise ProfileSpecError("moment profiles are available for k <= 2")
    table = taylor_terms(datum.side(f"u{j}"), k, datum.n)
    radial = _low_radial(j)
    terms = tuple(Term(c, alpha, radial, math.inf, f"B{j}{k}{alpha}")
                  for alpha, c in sorted(table.taylor[k].items()))
    return ProfileStack(terms, "low", f"B_{j}^{k}")


def build_A(j: int, k: int, datum: InitialDatum) -> ProfileStack:
    if not 0 <= k <= 2:
        raise ProfileSpecError("moment profiles are available for k <= 2")
    stack = build_B(j, 0, datum)
    for q in range(1, k + 1):
        stack = stack + build_B(j, q, datum)
    return ProfileStack(stack.terms, "low", f"A_{j}^{k}")


def _component_terms(datum: InitialDatum, fn, decay_shift: tuple[float, float], tag: str):
    terms = []
    for which, name in ((0, "u0"), (1, "u1")):
        for i, comp in enumerate(datum.side(name)):
            terms.append(Term(comp.amplitude, comp.padded_beta(datum.n),
                              _times_envelope(fn, comp.envelope, which),
                              comp.envelope.decay + decay_shift[which], f"{tag}:{name}[{i}]"))
    return tuple(terms)


def solution_stack(datum: InitialDatum) -> ProfileStack:
    """û(t, ξ) itself."""
    return ProfileStack(_component_terms(datum, solution_multipliers, (0.0, 4.0), "u"),
                        "full", "u")


def build_C(k: int, datum: InitialDatum) -> ProfileStack:
    if not 0 <= k <= 8:
        raise ProfileSpecError("C^k is available for 0 <= k <= 8")
    fn = lambda t, r: c_multipliers(k, t, r)  # noqa: E731
    return ProfileStack(_component_terms(datum, fn, (0.0, 4.0), f"C{k}"), "high", f"C^{k}")


def build_D(k: int, datum: InitialDatum) -> ProfileStack:
    """D^k = C^k - C^{k-1}: one new 𝓗 term on û0 (k even) or û1 (k odd)."""
    if not 0 <= k <= 8:
        raise ProfileSpecError("D^k is available for 0 <= k <= 8")
    p = k // 2

    def fn(t, r):
        t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
        zero = np.zeros(t.shape)
        if k % 2 == 0:
            h0 = _highfreq_term_array(0, p, t, r)
            h1 = _highfreq_term_array(1, p, t, r)
            return h0 + 0.5 * r**4 * h1, zero
        return zero, _highfreq_term_array(1, p, t, r)

    return ProfileStack(_component_terms(datum, fn, (6.0 * p, 4.0 + 6.0 * p), f"D{k}"),
                        "high", f"D^{k}")


def solution_minus_C(k: int, datum: InitialDatum) -> ProfileStack:
    """û - C^k with the subtraction done inside each radial factor."""
    if not 0 <= k <= 8:
        raise ProfileSpecError("C^k is available for 0 <= k <= 8")
    k0, k1 = _orders(k)
    fn = lambda t, r: residual_multipliers(k, t, r)  # noqa: E731
    shift = (6.0 * (k0 + 1), 4.0 + 6.0 * (k1 + 1))
    return ProfileStack(_component_terms(datum, fn, shift, f"u-C{k}"), "full", f"u-C^{k}")


@dataclass(frozen=True)
class ProfileSpec:
    """Which profiles to subtract from û.

    ``low`` lists (j, k) pairs meaning A_j^k; ``high`` is the C^k order or None.
    """

    low: tuple[tuple[int, int], ...] = ()
    high: int | None = None

    def describe(self) -> str:
        parts = [f"A_{j}^{k}" for j, k in self.low]
        if self.high is not None:
            parts.append(f"C^{self.high}")
        return "u - " + " - ".join(parts) if parts else "u"


def residual_stack(datum: InitialDatum, spec: ProfileSpec) -> ProfileStack:
    base = solution_stack(datum) if spec.high is None else solution_minus_C(spec.high, datum)
    for j, k in spec.low:
        base = base - build_A(j, k, datum)
    return ProfileStack(base.terms, "full", spec.describe())
