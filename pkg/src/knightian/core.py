"""Domain model for single-good Knightian auctions.

Every scalar is an exact :class:`fractions.Fraction`. Players are indexed from
0 in the Python API; human-facing messages number them from 1.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Iterable, Sequence

Rational = Fraction


class KnightianError(Exception):
    """Base class for domain errors raised by this package."""


class EmptyInterval(KnightianError):
    pass


class DomainError(KnightianError, ValueError):
    pass


class HypothesisViolated(KnightianError):
    pass


class BudgetExceeded(KnightianError):
    pass


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"``, an integer, or a decimal string into an exact Fraction.

    Decimals convert exactly, so ``"0.05"`` becomes ``1/20``.
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    s = str(text).strip()
    if not s:
        raise ValueError("empty rational")
    if "/" in s:
        num, _, den = s.partition("/")
        try:
            p, q = int(num), int(den)
        except ValueError:
            raise ValueError(f"invalid rational {s!r}") from None
        if q == 0:
            raise ZeroDivisionError(f"zero denominator in {s!r}")
        return Fraction(p, q)
    try:
        return Fraction(Decimal(s))
    except (InvalidOperation, ValueError):
        raise ValueError(f"invalid rational {s!r}") from None


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def check_delta(delta) -> Fraction:
    delta = Fraction(delta)
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    return delta


@dataclass(frozen=True, order=True)
class CandidateSet:
    """A nonempty finite set of integer candidate valuations."""

    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(sorted(set(int(v) for v in self.values)))
        if not vals:
            raise ValueError("candidate set must be nonempty")
        if vals[0] < 0:
            raise ValueError("candidate valuations must be nonnegative")
        object.__setattr__(self, "values", vals)

    @classmethod
    def interval(cls, lo: int, hi: int) -> CandidateSet:
        if lo > hi:
            raise EmptyInterval(f"empty interval [{lo}, {hi}]")
        return cls(tuple(range(lo, hi + 1)))

    @property
    def min(self) -> int:
        return self.values[0]

    @property
    def max(self) -> int:
        return self.values[-1]

    @property
    def is_interval(self) -> bool:
        return len(self.values) == self.max - self.min + 1

    def inaccuracy(self) -> Fraction:
        return inaccuracy(self)

    def __contains__(self, v) -> bool:
        return v in self.values

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:
        if self.is_interval and len(self) > 2:
            return f"CandidateSet({{{self.min}..{self.max}}})"
        return f"CandidateSet({set(self.values)})"


def inaccuracy(K: CandidateSet | Iterable[int]) -> Fraction:
    """(max - min) / (max + min), with the all-zero set mapped to 0."""
    if not isinstance(K, CandidateSet):
        K = CandidateSet(tuple(K))
    total = K.max + K.min
    if total == 0:
        return Fraction(0)
    return Fraction(K.max - K.min, total)


def delta_interval(x, delta, B: int) -> CandidateSet:
    """Integers z with (1-delta)x <= z <= (1+delta)x and 0 <= z <= B."""
    x = Fraction(x)
    delta = check_delta(delta)
    if x < 0:
        raise DomainError(f"center must be nonnegative, got {x}")
    lo = max(0, math.ceil((1 - delta) * x))
    hi = min(B, math.floor((1 + delta) * x))
    if lo > hi:
        raise EmptyInterval(f"delta[{x}] has no integer in [0, {B}]")
    return CandidateSet.interval(lo, hi)


@dataclass(frozen=True)
class Outcome:
    """Allocation (``winner`` is a player index or None) and price profile."""

    winner: int | None
    prices: tuple[Fraction, ...]


@dataclass(frozen=True)
class Context:
    n: int
    B: int
    delta: Fraction
    K: tuple[CandidateSet, ...]
    theta: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "delta", Fraction(self.delta))
        object.__setattr__(self, "K", tuple(
            k if isinstance(k, CandidateSet) else CandidateSet(tuple(k)) for k in self.K))
        object.__setattr__(self, "theta", tuple(int(t) for t in self.theta))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "B": self.B,
            "delta": format_rational(self.delta),
            "K": [list(k.values) for k in self.K],
            "theta": list(self.theta),
        }

    @classmethod
    def from_json(cls, doc: dict | str) -> Context:
        if isinstance(doc, str):
            doc = json.loads(doc)
        return cls(
            n=int(doc["n"]),
            B=int(doc["B"]),
            delta=parse_rational(doc["delta"]),
            K=tuple(CandidateSet(tuple(k)) for k in doc["K"]),
            theta=tuple(doc["theta"]),
        )


def validate_context(c: Context) -> list[str]:
    """Return one message per violated context invariant (empty when valid)."""
    problems = []
    if c.n < 1:
        problems.append(f"n must be >= 1, got {c.n}")
    if c.B < 1:
        problems.append(f"B must be a positive integer, got {c.B}")
    if not 0 < c.delta < 1:
        problems.append(f"delta {c.delta} not in (0, 1)")
    if len(c.K) != c.n:
        problems.append(f"K has {len(c.K)} entries, expected {c.n}")
    if len(c.theta) != c.n:
        problems.append(f"theta has {len(c.theta)} entries, expected {c.n}")
    for i, (k, t) in enumerate(zip(c.K, c.theta), start=1):
        if k.max > c.B:
            problems.append(f"K[{i}] exceeds valuation bound {c.B}")
        if t not in k:
            problems.append(f"theta[{i}] not in K[{i}]")
        d = inaccuracy(k)
        if d > c.delta:
            problems.append(f"K[{i}] inaccuracy {format_rational(d)} exceeds delta {format_rational(c.delta)}")
    return problems


def social_welfare(theta: Sequence[int], outcome: Outcome | int | None) -> Fraction:
    winner = outcome.winner if isinstance(outcome, Outcome) else outcome
    if winner is None:
        return Fraction(0)
    return Fraction(theta[winner])


def expected_social_welfare(theta: Sequence[int], probs: Sequence[Fraction]) -> Fraction:
    return sum((Fraction(p) * t for p, t in zip(probs, theta)), Fraction(0))


def max_social_welfare(theta: Sequence[int]) -> Fraction:
    if not theta:
        raise ValueError("empty valuation profile")
    return Fraction(max(theta))


def check_allocation(probs: Sequence[Fraction]) -> bool:
    """True when every entry is in [0, 1] and the entries sum to at most 1."""
    return all(0 <= p <= 1 for p in probs) and sum(probs, Fraction(0)) <= 1
