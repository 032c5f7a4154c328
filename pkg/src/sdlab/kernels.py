"""Exact Fourier multipliers for u_tt - Δu + Δ²u_t = 0.

In Fourier variables each frequency evolves by the scalar ODE

    v'' + r⁴ v' + r² v = 0,      r = |ξ|,

whose characteristic roots are complex for r < 2^{1/3} and real beyond.
E0 solves it with v(0)=1, v'(0)=-r⁴/2 and E1 with v(0)=0, v'(0)=1, so that

    û = E0·û0 + E1·(r⁴/2·û0 + û1).

Both are evaluated with formulas that stay accurate at r = 0, at the branch
point, and for large t·r⁴ (no cosh/sinh, only decaying exponentials).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .datum import InitialDatum

BRANCH_R = 2.0 ** (1.0 / 3.0)
BRANCH_DELTA = 1e-6

# cosh(√z) and sinh(√z)/√z, four terms each
_COSH_SERIES = np.array([1.0 / math.factorial(2 * m) for m in range(4)])
_SINHC_SERIES = np.array([1.0 / math.factorial(2 * m + 1) for m in range(4)])


@dataclass(frozen=True)
class Frequency:
    r: float
    n: int = 1

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError(f"radial frequency must be nonnegative, got {self.r}")
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")


@dataclass(frozen=True)
class CharRoots:
    lambda1: complex
    lambda2: complex


@dataclass(frozen=True)
class KernelValue:
    e0: float
    e1: float
    t: float


def _radius(freq) -> float:
    return freq.r if isinstance(freq, Frequency) else freq


def char_roots(freq: Frequency | float) -> CharRoots:
    """Roots of λ² + r⁴λ + r² = 0, larger real part first."""
    r = float(_radius(freq))
    if r < 0:
        raise ValueError("r must be nonnegative")
    r2 = r * r
    r4 = r2 * r2
    if r == 0.0:
        return CharRoots(0j, 0j)
    if r < BRANCH_R:
        im = r * math.sqrt(max(4.0 - r2 * r4, 0.0)) / 2.0
        return CharRoots(complex(-r4 / 2, im), complex(-r4 / 2, -im))
    sq = math.sqrt(max(1.0 - 4.0 / (r4 * r2), 0.0))
    lam1 = -2.0 / (r2 * (1.0 + sq))
    lam2 = -r4 - lam1
    return CharRoots(complex(lam1), complex(lam2))


def kernel_pair(t, r):
    """Vectorised (E0, E1) on broadcast arrays t >= 0, r >= 0."""
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    e0 = np.empty(t.shape)
    e1 = np.empty(t.shape)
    r2 = r * r
    r4 = r2 * r2
    r6 = r4 * r2

    lo = r < BRANCH_R - BRANCH_DELTA
    hi = r > BRANCH_R + BRANCH_DELTA
    mid = ~(lo | hi)

    if lo.any():
        tl, rl = t[lo], r[lo]
        damp = np.exp(-tl * r4[lo] / 2)
        x = tl * rl * np.sqrt(4.0 - r6[lo]) / 2
        e0[lo] = damp * np.cos(x)
        e1[lo] = damp * tl * np.sinc(x / np.pi)

    if hi.any():
        th = t[hi]
        sq = np.sqrt(1.0 - 4.0 / r6[hi])
        lam1 = -2.0 / (r2[hi] * (1.0 + sq))
        gap = r4[hi] * sq  # λ1 - λ2
        lam2 = lam1 - gap
        g1 = np.exp(lam1 * th)
        e0[hi] = 0.5 * (g1 + np.exp(lam2 * th))
        x = gap * th
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(x > 0, -np.expm1(-x) / np.where(x > 0, x, 1.0), 1.0)
        e1[hi] = g1 * th * ratio

    if mid.any():
        tm = t[mid]
        z = tm * tm * r2[mid] * (r6[mid] - 4.0) / 4
        damp = np.exp(-tm * r4[mid] / 2)
        e0[mid] = damp * np.polynomial.polynomial.polyval(z, _COSH_SERIES)
        e1[mid] = damp * tm * np.polynomial.polynomial.polyval(z, _SINHC_SERIES)

    return e0, e1


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def eval_E0(t, freq):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    return _scalar_or_array(kernel_pair(t, _radius(freq))[0])


def eval_E1(t, freq):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    return _scalar_or_array(kernel_pair(t, _radius(freq))[1])


def kernel_value(t: float, freq: Frequency | float) -> KernelValue:
    e0, e1 = kernel_pair(t, _radius(freq))
    return KernelValue(float(e0), float(e1), float(t))


def solution_multipliers(t, r):
    """Radial multipliers (m0, m1) with û = m0·û0 + m1·û1."""
    e0, e1 = kernel_pair(t, r)
    r = np.asarray(r, dtype=float)
    return e0 + 0.5 * r**4 * e1, e1


def eval_solution(t: float, xi, datum: InitialDatum) -> complex:
    """û(t, ξ) for a Fourier-side datum at a single frequency vector ξ."""
    from .datum import side_eval

    if t < 0:
        raise ValueError("t must be nonnegative")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    r = float(np.sqrt(np.sum(xi * xi)))
    m0, m1 = solution_multipliers(t, r)
    return complex(m0 * side_eval(datum.u0, xi) + m1 * side_eval(datum.u1, xi))


def ode_residual(t: float, freq: Frequency | float, datum: InitialDatum, h: float) -> float:
    """Fourth-order finite-difference residual of v'' + r⁴v' + r²v at time t.

    ξ is taken along the first axis with |ξ| = r. The result is normalised
    by max(|v(t)|, 1).
    """
    if not (h > 0 and t >= 2 * h):
        raise ValueError("need t >= 2h > 0")
    r = float(_radius(freq))
    xi = np.zeros(datum.n)
    xi[0] = r
    f = [eval_solution(t + k * h, xi, datum) for k in (-2, -1, 0, 1, 2)]
    d1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    res = d2 + r**4 * d1 + r**2 * f[2]
    return float(abs(res) / max(abs(f[2]), 1.0))
