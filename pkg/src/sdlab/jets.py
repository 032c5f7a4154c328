"""Truncated power series in one formal variable.

A :class:`Jet` stores Taylor coefficients c[0..K] along the first axis of an
array; trailing axes are a batch (e.g. a grid of (t, r) points), so one jet
computation serves a whole quadrature panel at once.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


class Jet:
    __slots__ = ("coeffs",)
    __array_priority__ = 100

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        if c.ndim == 0:
            c = c[None]
        self.coeffs = c

    # construction -----------------------------------------------------------
    @classmethod
    def constant(cls, value, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros((order + 1,) + value.shape)
        c[0] = value
        return cls(c)

    @classmethod
    def variable(cls, order: int, at: float = 0.0) -> "Jet":
        """The identity series x ↦ at + x."""
        c = np.zeros(order + 1)
        c[0] = at
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    def __getitem__(self, k):
        return self.coeffs[k]

    def __len__(self):
        return self.coeffs.shape[0]

    def __repr__(self):
        return f"Jet({self.coeffs!r})"

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.order != self.order:
                raise ValueError("jets of different order")
            return other
        return Jet.constant(other, self.order)

    # ring operations ----------------------------------------------------------
    def __neg__(self):
        return Jet(-self.coeffs)

    def __add__(self, other):
        o = self._coerce(other)
        return Jet(self.coeffs + o.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Jet(self.coeffs - o.coeffs)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return Jet(self.coeffs * other)
        o = self._coerce(other)
        a, b = self.coeffs, o.coeffs
        K = self.order
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for k in range(K + 1):
            for i in range(k + 1):
                out[k] += a[i] * b[k - i]
        return Jet(out)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        a = self.coeffs
        if np.any(a[0] == 0):
            raise ZeroDivisionError("reciprocal of a jet with zero constant term")
        out = np.zeros(a.shape)
        out[0] = 1.0 / a[0]
        for k in range(1, self.order + 1):
            acc = np.zeros(a.shape[1:])
            for i in range(1, k + 1):
                acc = acc + a[i] * out[k - i]
            out[k] = -acc / a[0]
        return Jet(out)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.coeffs / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    # elementary functions -----------------------------------------------------
    def sqrt(self) -> "Jet":
        a = self.coeffs
        if np.any(a[0] <= 0):
            raise ValueError("sqrt of a jet needs a positive constant term")
        out = np.zeros(a.shape)
        out[0] = np.sqrt(a[0])
        for k in range(1, self.order + 1):
            acc = a[k].copy()
            for i in range(1, k):
                acc = acc - out[i] * out[k - i]
            out[k] = acc / (2 * out[0])
        return Jet(out)

    def nilpotent(self) -> "Jet":
        c = self.coeffs.copy()
        c[0] = 0.0
        return Jet(c)

    def exp(self) -> "Jet":
        a = self.coeffs
        out = np.zeros(a.shape)
        out[0] = np.exp(a[0])
        for k in range(1, self.order + 1):
            acc = np.zeros(a.shape[1:])
            for i in range(1, k + 1):
                acc = acc + i * a[i] * out[k - i]
            out[k] = acc / k
        return Jet(out)

    def _sincos_nilpotent(self) -> tuple[np.ndarray, np.ndarray]:
        """sin and cos of the nilpotent part only."""
        a = self.coeffs
        s = np.zeros(a.shape)
        c = np.zeros(a.shape)
        c[0] = 1.0
        for k in range(1, self.order + 1):
            sk = np.zeros(a.shape[1:])
            ck = np.zeros(a.shape[1:])
            for i in range(1, k + 1):
                sk = sk + i * a[i] * c[k - i]
                ck = ck - i * a[i] * s[k - i]
            s[k] = sk / k
            c[k] = ck / k
        return s, c

    def sincos(self) -> tuple["Jet", "Jet"]:
        """(sin, cos) of the jet.

        The constant term (possibly a large phase) only enters through one
        sin/cos evaluation; the series work is done on the nilpotent part.
        """
        s, c = self._sincos_nilpotent()
        s0 = np.sin(self.coeffs[0])
        c0 = np.cos(self.coeffs[0])
        return Jet(s0 * c + c0 * s), Jet(c0 * c - s0 * s)

    def sin(self) -> "Jet":
        return self.sincos()[0]

    def cos(self) -> "Jet":
        return self.sincos()[1]

    def power(self, alpha: float) -> "Jet":
        """self**alpha for a positive constant term (binomial recurrence)."""
        a = self.coeffs
        if np.any(a[0] <= 0):
            raise ValueError("power of a jet needs a positive constant term")
        out = np.zeros(a.shape)
        out[0] = a[0] ** alpha
        for k in range(1, self.order + 1):
            acc = np.zeros(a.shape[1:])
            for i in range(1, k + 1):
                acc = acc + (alpha * i - (k - i)) * a[i] * out[k - i]
            out[k] = acc / (k * a[0])
        return Jet(out)

    def compose(self, inner: "Jet") -> "Jet":
        """self(inner(x)) for an inner series with zero constant term."""
        if np.any(inner.coeffs[0] != 0):
            raise ValueError("inner series must vanish at the origin")
        result = Jet.constant(self.coeffs[-1], self.order)
        for k in range(self.order - 1, -1, -1):
            result = result * inner + Jet.constant(self.coeffs[k], self.order)
        return result

    def evaluate(self, x):
        """Horner evaluation of the truncated polynomial."""
        out = np.zeros(np.broadcast_shapes(self.coeffs.shape[1:], np.shape(x)))
        for k in range(self.order, -1, -1):
            out = out * x + self.coeffs[k]
        return out

    def tolist(self) -> list:
        return self.coeffs.tolist()


def from_coeffs(values: Sequence[float]) -> Jet:
    return Jet(np.asarray(values, dtype=float))
