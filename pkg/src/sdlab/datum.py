"""Initial data given directly on the Fourier side.

Each side (u0 or u1) is a sum of components amplitude · ξ^β · g(|ξ|) with a
radial envelope g. Low-order Taylor coefficients at ξ = 0 are known in closed
form, which is all the moment-based profiles need: with the unnormalised
transform f̂(ξ) = ∫ e^{-ix·ξ} f(x) dx the degree-k Taylor part of f̂ is the
moment polynomial, and ∫ x^α f dx = α! · i^{|α|} · (Taylor coefficient).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Iterable, Sequence

import numpy as np

from .quadrature import (DEFAULT_CONFIG, Expression, NonintegrableTailError, QuadConfig,
                         Region, Term, norm_sq)


class SobolevDivergenceError(ArithmeticError):
    """The requested Sobolev norm is infinite for this datum."""


class DatumError(ValueError):
    """Inconsistent datum description."""


# -- envelopes ---------------------------------------------------------------

@dataclass(frozen=True)
class Gaussian:
    sigma: float = 1.0
    kind = "gaussian"

    def __post_init__(self):
        if not self.sigma > 0:
            raise DatumError("Gaussian width must be positive")

    def __call__(self, r):
        return np.exp(-self.sigma * np.asarray(r, dtype=float) ** 2)

    @property
    def parameter(self) -> float:
        return self.sigma

    @property
    def taylor(self) -> tuple[float, float]:
        return 1.0, -self.sigma

    @property
    def decay(self) -> float:
        return math.inf


@dataclass(frozen=True)
class PowerTail:
    s: float
    kind = "powertail"

    def __post_init__(self):
        if not self.s > 0:
            raise DatumError("tail exponent must be positive")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return (1.0 + r * r) ** (-self.s / 2)

    @property
    def parameter(self) -> float:
        return self.s

    @property
    def taylor(self) -> tuple[float, float]:
        return 1.0, -self.s / 2

    @property
    def decay(self) -> float:
        return self.s


@dataclass(frozen=True)
class GaussBump:
    """(1 + σr²)e^{-σr²}: flat to second order at the origin."""

    sigma: float = 1.0
    kind = "gaussbump"

    def __post_init__(self):
        if not self.sigma > 0:
            raise DatumError("bump width must be positive")

    def __call__(self, r):
        x = self.sigma * np.asarray(r, dtype=float) ** 2
        return (1.0 + x) * np.exp(-x)

    @property
    def parameter(self) -> float:
        return self.sigma

    @property
    def taylor(self) -> tuple[float, float]:
        return 1.0, 0.0

    @property
    def decay(self) -> float:
        return math.inf


ENVELOPES = {"gaussian": Gaussian, "powertail": PowerTail, "gaussbump": GaussBump}
Envelope = Gaussian | PowerTail | GaussBump


def make_envelope(kind: str, parameter: float) -> Envelope:
    try:
        cls = ENVELOPES[kind.lower()]
    except KeyError:
        raise DatumError(f"unknown envelope kind {kind!r}") from None
    return cls(float(parameter))


# -- components and data ---------------------------------------------------------

@dataclass(frozen=True)
class DatumComponent:
    envelope: Envelope
    beta: tuple[int, ...] = ()
    amplitude: float = 1.0

    def __post_init__(self):
        beta = tuple(int(b) for b in self.beta)
        if any(b < 0 for b in beta):
            raise DatumError("angular exponents must be nonnegative")
        if sum(beta) > 2:
            raise DatumError(f"angular degree {sum(beta)} exceeds 2")
        object.__setattr__(self, "beta", beta)

    @property
    def degree(self) -> int:
        return sum(self.beta)

    def padded_beta(self, n: int) -> tuple[int, ...]:
        if len(self.beta) > n and any(self.beta[n:]):
            raise DatumError(f"angular monomial {self.beta} needs more than {n} coordinates")
        return (self.beta + (0,) * n)[:n]

    def term(self, n: int, label: str = "") -> Term:
        env = self.envelope
        return Term(self.amplitude, self.padded_beta(n), lambda t, r: env(r), env.decay, label)


def fourier_eval(component: DatumComponent, xi) -> complex:
    """amplitude · ξ^β · g(|ξ|)."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    mono = 1.0
    for j, b in enumerate(component.padded_beta(xi.shape[-1])):
        if b:
            mono = mono * xi[..., j] ** b
    r = np.sqrt(np.sum(xi * xi, axis=-1))
    val = component.amplitude * mono * component.envelope(r)
    return complex(val) if np.ndim(val) == 0 else val.astype(complex)


def side_eval(side: Sequence[DatumComponent], xi) -> complex:
    return sum((fourier_eval(c, xi) for c in side), 0j)


@dataclass(frozen=True)
class InitialDatum:
    n: int
    u0: tuple[DatumComponent, ...] = ()
    u1: tuple[DatumComponent, ...] = ()
    sobolev_l: float = 0.0
    weight_gamma: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise DatumError("dimension must be >= 1")
        if self.sobolev_l < 0 or self.weight_gamma < 0:
            raise DatumError("regularity metadata must be nonnegative")
        object.__setattr__(self, "u0", tuple(self.u0))
        object.__setattr__(self, "u1", tuple(self.u1))
        for c in self.u0 + self.u1:
            c.padded_beta(self.n)
        half = self.n / 2
        for c in self.u1:
            if c.envelope.decay - c.degree <= self.sobolev_l + half:
                raise DatumError(
                    f"u1 component {c.envelope} with beta {c.beta} is not in H^{self.sobolev_l}"
                )
        for c in self.u0:
            if c.envelope.decay - c.degree <= self.sobolev_l + 1 + half:
                raise DatumError(
                    f"u0 component {c.envelope} with beta {c.beta} is not in H^{self.sobolev_l + 1}"
                )

    def side(self, name: str) -> tuple[DatumComponent, ...]:
        if name not in ("u0", "u1"):
            raise DatumError(f"datum side must be 'u0' or 'u1', got {name!r}")
        return getattr(self, name)

    def expression(self, name: str) -> Expression:
        return Expression(tuple(c.term(self.n, f"{name}[{i}]")
                                for i, c in enumerate(self.side(name))))

    def records(self) -> list[dict]:
        out = []
        for name in ("u0", "u1"):
            for c in self.side(name):
                out.append({"side": name, "kind": c.envelope.kind,
                            "parameter": c.envelope.parameter,
                            "beta": list(c.beta), "amplitude": c.amplitude})
        return out

    def digest(self) -> str:
        payload = {"n": self.n, "l": self.sobolev_l, "gamma": self.weight_gamma,
                   "components": self.records()}
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def datum_from_records(n: int, records: Iterable[dict], sobolev_l: float = 0.0,
                       weight_gamma: float = 0.0) -> InitialDatum:
    sides: dict[str, list[DatumComponent]] = {"u0": [], "u1": []}
    for rec in records:
        side = rec.get("side")
        if side not in sides:
            raise DatumError(f"datum side must be 'u0' or 'u1', got {side!r}")
        env = make_envelope(rec.get("kind", "gaussian"), rec.get("parameter", 1.0))
        sides[side].append(DatumComponent(env, tuple(rec.get("beta", ())),
                                          float(rec.get("amplitude", 1.0))))
    return InitialDatum(n, tuple(sides["u0"]), tuple(sides["u1"]), sobolev_l, weight_gamma)


# -- Taylor data ----------------------------------------------------------------

def _unit(n: int, j: int) -> tuple[int, ...]:
    e = [0] * n
    e[j] = 1
    return tuple(e)


def _add(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(x + y for x, y in zip(a, b))


@dataclass(frozen=True)
class MomentTable:
    """taylor[k] maps multi-indices of total degree k to their coefficients."""

    n: int
    taylor: tuple[dict, ...] = field(default_factory=tuple)

    @property
    def max_degree(self) -> int:
        return len(self.taylor) - 1

    def coefficient(self, alpha: Sequence[int]) -> complex:
        alpha = tuple(alpha)
        k = sum(alpha)
        if k > self.max_degree:
            raise KeyError(f"degree {k} not tabulated")
        return self.taylor[k].get(alpha, 0.0)

    def physical_moment(self, alpha: Sequence[int]) -> complex:
        """∫ x^α f(x) dx recovered from the Taylor coefficient."""
        alpha = tuple(alpha)
        fact = math.prod(math.factorial(a) for a in alpha)
        return fact * (1j ** sum(alpha)) * self.coefficient(alpha)

    def evaluate(self, k: int, xi) -> complex:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        total = 0j
        for alpha, c in self.taylor[k].items():
            total += c * np.prod([x**a for x, a in zip(xi, alpha)])
        return total

    def nonzero(self, k: int) -> bool:
        return any(c != 0 for c in self.taylor[k].values())


def taylor_terms(side: Sequence[DatumComponent], K: int, n: int) -> MomentTable:
    """Homogeneous Taylor parts of the summed components at ξ = 0, degrees 0..K."""
    if K > 2:
        raise ValueError(f"Taylor degree {K} > 2 is not supported")
    if K < 0:
        raise ValueError("K must be >= 0")
    table: list[dict] = [dict() for _ in range(K + 1)]

    def put(alpha, c):
        k = sum(alpha)
        if k <= K and c != 0:
            table[k][alpha] = table[k].get(alpha, 0.0) + c

    for comp in side:
        beta = comp.padded_beta(n)
        g0, g2 = comp.envelope.taylor
        put(beta, comp.amplitude * g0)
        for j in range(n):
            put(_add(beta, _add(_unit(n, j), _unit(n, j))), comp.amplitude * g2)
    for d in table:
        for a in [a for a, c in d.items() if c == 0]:
            del d[a]
    return MomentTable(n, tuple(table))


def degree_indices(n: int, k: int) -> list[tuple[int, ...]]:
    out = []
    for combo in combinations_with_replacement(range(n), k):
        alpha = [0] * n
        for j in combo:
            alpha[j] += 1
        out.append(tuple(alpha))
    return out


# -- norms ------------------------------------------------------------------------

def _power_radial(g, p):
    return lambda t, r: g(r) * np.asarray(r, dtype=float) ** p


def sobolev_norm_sq(side: Sequence[DatumComponent], p: float, n: int,
                    config: QuadConfig = DEFAULT_CONFIG) -> float:
    """∫ (1 + |ξ|^{2p}) |Σ components|² dξ."""
    if p < 0:
        raise ValueError("regularity order must be nonnegative")
    for c in side:
        if c.envelope.decay - c.degree <= p + n / 2:
            raise SobolevDivergenceError(
                f"component with tail exponent {c.envelope.decay} and |beta| = {c.degree} "
                f"has infinite H^{p} norm in dimension {n}"
            )
    base = Expression(tuple(c.term(n) for c in side))
    weighted = Expression(tuple(
        Term(c.amplitude, c.padded_beta(n), _power_radial(c.envelope, p), c.envelope.decay - p)
        for c in side
    ))
    try:
        return norm_sq(base, Region.FULL, 0.0, n, config) + norm_sq(weighted, Region.FULL, 0.0, n, config)
    except NonintegrableTailError as exc:
        raise SobolevDivergenceError(str(exc)) from exc


def make_threshold_datum(n: int, l: float, eps: float, amplitude0: float = 1.0,
                         amplitude1: float = 1.0, flatten: bool = False) -> InitialDatum:
    """Radial power-tail data that sit just inside H^{l+1} × H^l.

    ``flatten`` adds -amplitude1/2 · e^{-s|ξ|²} to u1, which cancels the |ξ|²
    Taylor term of the power tail (the tail and P1 = amplitude1/2 are kept).
    """
    if not eps > 0:
        raise DatumError("eps must be positive")
    if l < 0:
        raise DatumError("l must be nonnegative")
    s = l + n / 2 + eps
    u0 = (DatumComponent(PowerTail(s + 1), (0,) * n, amplitude0),)
    u1 = (DatumComponent(PowerTail(s), (0,) * n, amplitude1),)
    if flatten:
        u1 += (DatumComponent(Gaussian(s), (0,) * n, -0.5 * amplitude1),)
    return InitialDatum(n, u0, u1, sobolev_l=l, weight_gamma=1.0)


def gaussian_datum(n: int, sigma0: float = 1.0, sigma1: float = 1.0,
                   amplitude0: float = 1.0, amplitude1: float = 1.0) -> InitialDatum:
    zero = (0,) * n
    u0 = (DatumComponent(Gaussian(sigma0), zero, amplitude0),) if amplitude0 else ()
    u1 = (DatumComponent(Gaussian(sigma1), zero, amplitude1),) if amplitude1 else ()
    return InitialDatum(n, u0, u1, sobolev_l=0.0, weight_gamma=2.0)
