"""Exact payments of the form ``r + sum(c * ln(a))`` with sound interval evaluation.

Logarithm arguments are split into prime factors, so every expression has a
canonical form ``r + sum_p c_p ln p``. Since 1 and the logarithms of distinct
primes are linearly independent over the rationals, an expression is zero
exactly when ``r`` and every ``c_p`` vanish; any other sign is found by
refining an interval enclosure.
"""
from __future__ import annotations

import os
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

from mpmath import libmp
from sympy import factorint

from .core import KnightianError, format_rational, parse_rational

DEFAULT_PRECISION_CAP = 256
PRECISION_ENV = "KNIGHTIAN_PRECISION_BITS"


class UndecidableAtPrecision(KnightianError):
    """An interval comparison could not be separated at the precision cap."""


def precision_cap() -> int:
    raw = os.environ.get(PRECISION_ENV)
    return int(raw) if raw else DEFAULT_PRECISION_CAP


@lru_cache(maxsize=4096)
def _factor(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(factorint(n).items()))


@lru_cache(maxsize=8192)
def _ln_prime(p: int, prec: int) -> tuple[Fraction, Fraction]:
    lo, hi = libmp.mpi_log((libmp.from_int(p), libmp.from_int(p)), prec)
    return Fraction(*libmp.to_rational(lo)), Fraction(*libmp.to_rational(hi))


def _log_coefficients(arg: Fraction, coef: Fraction) -> dict[int, Fraction]:
    if arg <= 0:
        raise ValueError(f"logarithm of non-positive value {arg}")
    out: dict[int, Fraction] = {}
    for p, e in _factor(arg.numerator):
        out[p] = out.get(p, Fraction(0)) + coef * e
    for p, e in _factor(arg.denominator):
        out[p] = out.get(p, Fraction(0)) - coef * e
    return out


class PriceExpression:
    """``rational_part + sum(coef * ln(arg) for coef, arg in log_terms)``."""

    __slots__ = ("rational_part", "_logs")

    def __init__(self, rational_part=0, log_terms: Iterable[tuple] = ()):
        self.rational_part = Fraction(rational_part)
        logs: dict[int, Fraction] = {}
        for coef, arg in log_terms:
            coef = Fraction(coef)
            if coef == 0:
                continue
            for p, c in _log_coefficients(Fraction(arg), coef).items():
                logs[p] = logs.get(p, Fraction(0)) + c
        self._logs = {p: c for p, c in sorted(logs.items()) if c != 0}

    @classmethod
    def _raw(cls, rational_part: Fraction, logs: dict[int, Fraction]) -> PriceExpression:
        obj = cls.__new__(cls)
        obj.rational_part = rational_part
        obj._logs = {p: c for p, c in sorted(logs.items()) if c != 0}
        return obj

    @classmethod
    def coerce(cls, value) -> PriceExpression:
        if isinstance(value, PriceExpression):
            return value
        return cls._raw(Fraction(value), {})

    @property
    def log_terms(self) -> tuple[tuple[Fraction, Fraction], ...]:
        return tuple((c, Fraction(p)) for p, c in self._logs.items())

    @property
    def is_rational(self) -> bool:
        return not self._logs

    def as_fraction(self) -> Fraction:
        if self._logs:
            raise ValueError("expression has logarithmic terms")
        return self.rational_part

    # arithmetic -------------------------------------------------------------
    def __add__(self, other):
        other = PriceExpression.coerce(other)
        logs = dict(self._logs)
        for p, c in other._logs.items():
            logs[p] = logs.get(p, Fraction(0)) + c
        return PriceExpression._raw(self.rational_part + other.rational_part, logs)

    __radd__ = __add__

    def __neg__(self):
        return PriceExpression._raw(-self.rational_part, {p: -c for p, c in self._logs.items()})

    def __sub__(self, other):
        return self + (-PriceExpression.coerce(other))

    def __rsub__(self, other):
        return PriceExpression.coerce(other) - self

    def __mul__(self, k):
        if isinstance(k, PriceExpression):
            if k.is_rational:
                k = k.rational_part
            elif self.is_rational:
                return k * self.rational_part
            else:
                raise TypeError("product of two logarithmic expressions is not representable")
        k = Fraction(k)
        return PriceExpression._raw(self.rational_part * k, {p: c * k for p, c in self._logs.items()})

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self * (1 / Fraction(k))

    def __eq__(self, other):
        try:
            other = PriceExpression.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.rational_part == other.rational_part and self._logs == other._logs

    def __hash__(self):
        return hash((self.rational_part, tuple(self._logs.items())))

    # evaluation -------------------------------------------------------------
    def interval(self, bits: int = 64) -> tuple[Fraction, Fraction]:
        """Rational enclosure of the value with width at most ``2**-bits``."""
        if not self._logs:
            return self.rational_part, self.rational_part
        scale = sum(abs(c) for c in self._logs.values())
        prec = bits + max(1, int(scale).bit_length()) + 8
        target = Fraction(1, 2 ** bits)
        while True:
            lo = hi = self.rational_part
            for p, c in self._logs.items():
                a, b = _ln_prime(p, prec)
                if c > 0:
                    lo += c * a
                    hi += c * b
                else:
                    lo += c * b
                    hi += c * a
            if hi - lo <= target:
                return lo, hi
            prec += 16

    def sign(self, cap: int | None = None) -> int:
        """Exact sign, refining the enclosure up to ``cap`` bits."""
        if not self._logs:
            r = self.rational_part
            return (r > 0) - (r < 0)
        cap = precision_cap() if cap is None else cap
        bits = min(32, cap)
        while True:
            lo, hi = self.interval(bits)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            if bits >= cap:
                raise UndecidableAtPrecision(f"sign of {self!r} unresolved at {cap} bits")
            bits = min(cap, bits * 2)

    def __float__(self):
        lo, hi = self.interval(60)
        return float((lo + hi) / 2)

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def __repr__(self):
        parts = [format_rational(self.rational_part)]
        for p, c in self._logs.items():
            parts.append(f"{format_rational(c)}*ln({p})")
        return "PriceExpression(" + " + ".join(parts) + ")"

    # serialization ----------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "rat": format_rational(self.rational_part),
            "logs": [[format_rational(c), format_rational(a)] for c, a in self.log_terms],
        }

    @classmethod
    def from_json(cls, doc: dict) -> PriceExpression:
        return cls(parse_rational(doc["rat"]),
                   [(parse_rational(c), parse_rational(a)) for c, a in doc.get("logs", [])])


def sign_of(value, cap: int | None = None) -> int:
    if isinstance(value, PriceExpression):
        return value.sign(cap)
    value = Fraction(value)
    return (value > 0) - (value < 0)
