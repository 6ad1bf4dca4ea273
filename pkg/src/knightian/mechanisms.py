"""Second-price, random-assignment and threshold-based optimal mechanisms.

The optimal mechanism allocates with ``f_delta``: bids above a data-dependent
threshold become candidate winners and share the good with probabilities
that grow with their own bid. Its expected payments follow the classical
``v_i f_i(v) - int_0^{v_i} f_i(z, v_-i) dz`` rule, integrated in closed form
over a piecewise ``a + b/z`` profile.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Sequence

from .core import DomainError, KnightianError, Outcome, check_allocation, check_delta
from .pricing import PriceExpression, sign_of

ZERO = Fraction(0)


class AllZeroBids(KnightianError):
    pass


class ZeroWinProbability(KnightianError):
    pass


class TieRule(enum.Enum):
    LEXICOGRAPHIC = "lex"
    UNIFORM_RANDOM = "random"


@dataclass(frozen=True)
class ExpectedOutcome:
    probs: tuple[Fraction, ...]
    prices: tuple[Fraction, ...]


# ---------------------------------------------------------------- second price

def second_price(v: Sequence[int], tie: TieRule = TieRule.LEXICOGRAPHIC):
    """Highest bid wins and pays the highest competing bid.

    With lexicographic ties the lowest-indexed top bidder wins and an
    :class:`Outcome` is returned. With uniform ties the result is the
    :class:`ExpectedOutcome` over the tied bidders.
    """
    tie = TieRule(tie)
    v = [Fraction(x) for x in v]
    n = len(v)
    top = max(v)
    winners = [i for i in range(n) if v[i] == top]

    def pay(i):
        rest = v[:i] + v[i + 1:]
        return max(rest) if rest else ZERO

    if tie is TieRule.LEXICOGRAPHIC:
        w = winners[0]
        prices = tuple(pay(i) if i == w else ZERO for i in range(n))
        return Outcome(w, prices)
    share = Fraction(1, len(winners))
    probs = tuple(share if i in winners else ZERO for i in range(n))
    prices = tuple(share * pay(i) if i in winners else ZERO for i in range(n))
    return ExpectedOutcome(probs, prices)


def random_assignment(n: int) -> tuple[Fraction, ...]:
    if n < 1:
        raise DomainError("need at least one player")
    return (Fraction(1, n),) * n


# ---------------------------------------------------------- optimal mechanism

def d_delta(delta) -> Fraction:
    """Spread constant ((1+delta)/(1-delta))**2 - 1."""
    delta = check_delta(delta)
    return ((1 + delta) / (1 - delta)) ** 2 - 1


def candidate_winner_count(z: Sequence, D) -> tuple[int, Fraction]:
    """Number of candidate winners and the bid threshold for a sorted profile.

    ``z`` must be non-increasing. Returns ``(n_star, threshold)`` where the
    top ``n_star`` bids lie strictly above ``sum(z[:n_star]) / (n_star + D)``
    and the remaining bids do not.
    """
    z = [Fraction(x) for x in z]
    D = Fraction(D)
    if any(z[k] < z[k + 1] for k in range(len(z) - 1)):
        raise ValueError("bid profile must be sorted in non-increasing order")
    if not z or z[0] <= 0:
        raise AllZeroBids("threshold undefined when every bid is zero")
    total = ZERO
    n = len(z)
    for k in range(1, n + 1):
        total += z[k - 1]
        t = total / (k + D)
        if z[k - 1] > t and (k == n or t >= z[k]):
            return k, t
    raise AssertionError("no candidate-winner count satisfies the threshold chain")


def f_delta(z: Sequence, delta) -> tuple[Fraction, ...]:
    """Allocation probabilities of the optimal mechanism at bid profile ``z``.

    Accepts any order of bids and any nonnegative rationals; the all-zero
    profile leaves the good unallocated.
    """
    return _f_delta(tuple(Fraction(x) for x in z), Fraction(delta))


@lru_cache(maxsize=65536)
def _f_delta(z: tuple[Fraction, ...], delta: Fraction) -> tuple[Fraction, ...]:
    n = len(z)
    D = d_delta(delta)
    order = sorted(range(n), key=lambda i: -z[i])
    ranked = [z[i] for i in order]
    if ranked[0] <= 0:
        return (ZERO,) * n
    n_star, _ = candidate_winner_count(ranked, D)
    total = sum(ranked[:n_star], ZERO)
    out = [ZERO] * n
    lead = Fraction(1, n) * (n + D) / (n_star + D)
    for rank in range(n_star):
        zi = ranked[rank]
        out[order[rank]] = lead * (zi * (n_star + D) - total) / (zi * D)
    return tuple(out)


# ----------------------------------------------------------- piecewise profile

@dataclass(frozen=True)
class PiecewiseAllocation:
    """``z -> a + b/z`` on each interval ``[edges[k], edges[k+1]]``."""

    edges: tuple[Fraction, ...]
    pieces: tuple[tuple[Fraction, Fraction], ...]

    @property
    def breakpoints(self) -> tuple[Fraction, ...]:
        return self.edges[1:-1]

    def piece_index(self, z) -> int:
        z = Fraction(z)
        for k in range(len(self.pieces)):
            if z < self.edges[k + 1]:
                return k
        return len(self.pieces) - 1

    def value(self, z) -> Fraction:
        """Value on the piece whose half-open span ``[lo, hi)`` holds ``z``."""
        a, b = self.pieces[self.piece_index(z)]
        z = Fraction(z)
        return a + b / z if b else a

    def limits(self, k: int) -> tuple[Fraction, Fraction]:
        """Left and right boundary values of piece ``k``."""
        a, b = self.pieces[k]
        lo, hi = self.edges[k], self.edges[k + 1]
        left = a + b / lo if b else a
        right = a + b / hi if b else a
        return left, right

    def integral(self, lo, hi) -> PriceExpression:
        """Exact ``int_lo^hi f(z) dz`` for ``lo <= hi`` inside the domain."""
        lo, hi = Fraction(lo), Fraction(hi)
        if hi < lo:
            return -self.integral(hi, lo)
        rat = ZERO
        logs = []
        for k, (a, b) in enumerate(self.pieces):
            x0 = max(lo, self.edges[k])
            x1 = min(hi, self.edges[k + 1])
            if x1 <= x0:
                continue
            rat += a * (x1 - x0)
            if b:
                logs.append((b, x1 / x0))
        return PriceExpression(rat, logs)


def _threshold_pieces(others: Sequence, D: Fraction, n: int, B) -> PiecewiseAllocation:
    others = sorted((Fraction(x) for x in others), reverse=True)
    B = Fraction(B)
    scale = (n + D) / (n * D)
    if not others or others[0] <= 0:
        entry, k = ZERO, 0
    else:
        k, entry = candidate_winner_count(others, D)
    prefix = [ZERO]
    for o in others:
        prefix.append(prefix[-1] + o)

    def coeffs(k):
        # k other candidate winners alongside the player
        a = scale * (k + D) / (k + 1 + D)
        b = -scale * prefix[k] / (k + 1 + D)
        return a, b

    edges = [ZERO]
    pieces = []
    if entry > 0:
        edges.append(min(entry, B))
        pieces.append((ZERO, ZERO))
    z = entry
    while z < B:
        if k == 0:
            nxt = B
        else:
            nxt = min(B, others[k - 1] * (k + 1 + D) - prefix[k])
        pieces.append(coeffs(k))
        edges.append(nxt)
        if nxt >= B:
            break
        z = nxt
        merged = sorted(others + [z], reverse=True)
        n_star, t = candidate_winner_count(merged, D)
        k = sum(1 for o in others if o > t)
    if edges[-1] < B:
        edges.append(B)
        pieces.append(pieces[-1] if pieces else (ZERO, ZERO))
    return PiecewiseAllocation(tuple(edges), tuple(pieces))


def piecewise_profile(i: int, v_others: Sequence, delta, B) -> PiecewiseAllocation:
    """Profile ``z -> f_delta_i(z, v_others)`` over ``[0, B]``.

    Sweeps the own bid upward from the entry threshold, recording each point
    where a competing candidate winner drops below the moving threshold.
    """
    D = d_delta(delta)
    return _threshold_pieces(tuple(v_others), D, len(v_others) + 1, B)


def _insert(v_others: Sequence, i: int, z) -> tuple:
    v = list(v_others)
    v.insert(i, z)
    return tuple(v)


def price_opt(i: int, v: Sequence, delta, conditional: bool = False) -> PriceExpression:
    """Expected (or, when ``conditional``, per-win) payment of player ``i``."""
    v = tuple(Fraction(x) for x in v)
    others = v[:i] + v[i + 1:]
    upper = max(v) if max(v) > 0 else Fraction(1)
    profile = piecewise_profile(i, others, delta, upper)
    win = f_delta(v, delta)[i]
    expected = v[i] * win - profile.integral(0, v[i])
    if conditional:
        if win == 0:
            raise ZeroWinProbability(f"player {i + 1} never wins at bids {v}")
        return expected / win
    return expected


# --------------------------------------------------------------- mechanisms

class Mechanism:
    """Single-good mechanism over integer bids with integrable allocation."""

    name = "mechanism"

    def __init__(self, n: int):
        if n < 1:
            raise DomainError("need at least one player")
        self.n = n

    def alloc(self, v: Sequence) -> tuple[Fraction, ...]:
        raise NotImplementedError

    def prices(self, v: Sequence) -> tuple:
        raise NotImplementedError

    def profile(self, i: int, v_others: Sequence, B) -> PiecewiseAllocation:
        raise NotImplementedError

    def __call__(self, v: Sequence) -> tuple[Fraction, ...]:
        return self.alloc(v)

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"


class SecondPrice(Mechanism):
    def __init__(self, n: int, tie: TieRule = TieRule.LEXICOGRAPHIC):
        super().__init__(n)
        self.tie = TieRule(tie)
        self.name = f"second_price_{self.tie.value}"

    def alloc(self, v):
        res = second_price(v, self.tie)
        if isinstance(res, Outcome):
            return tuple(Fraction(int(j == res.winner)) for j in range(len(v)))
        return res.probs

    def prices(self, v):
        return second_price(v, self.tie).prices

    def profile(self, i, v_others, B):
        B = Fraction(B)
        if not v_others:
            return PiecewiseAllocation((ZERO, B), ((Fraction(1), ZERO),))
        top = Fraction(max(v_others))
        if top <= 0:
            return PiecewiseAllocation((ZERO, B), ((Fraction(1), ZERO),))
        if top >= B:
            return PiecewiseAllocation((ZERO, B), ((ZERO, ZERO),))
        return PiecewiseAllocation((ZERO, top, B), ((ZERO, ZERO), (Fraction(1), ZERO)))

    def __repr__(self):
        return f"SecondPrice(n={self.n}, tie={self.tie.value})"


class RandomAssignment(Mechanism):
    name = "random"

    def alloc(self, v):
        return random_assignment(self.n)

    def prices(self, v):
        return (ZERO,) * self.n

    def profile(self, i, v_others, B):
        return PiecewiseAllocation((ZERO, Fraction(B)), ((Fraction(1, self.n), ZERO),))


class OptimalMechanism(Mechanism):
    def __init__(self, n: int, delta):
        super().__init__(n)
        self.delta = check_delta(delta)
        self.D = d_delta(self.delta)
        self.name = "opt"

    def alloc(self, v):
        return f_delta(v, self.delta)

    def prices(self, v):
        return tuple(price_opt(i, v, self.delta) for i in range(len(v)))

    def profile(self, i, v_others, B):
        return piecewise_profile(i, v_others, self.delta, B)

    def __repr__(self):
        return f"OptimalMechanism(n={self.n}, delta={self.delta})"


def make_mechanism(kind: str, n: int, delta=None, tie: TieRule | str = TieRule.LEXICOGRAPHIC) -> Mechanism:
    kind = kind.lower()
    if kind in ("2p", "second_price", "second-price"):
        return SecondPrice(n, TieRule(tie))
    if kind in ("random", "random_assignment"):
        return RandomAssignment(n)
    if kind in ("opt", "m_opt", "optimal"):
        if delta is None:
            raise DomainError("the optimal mechanism needs delta")
        return OptimalMechanism(n, delta)
    raise DomainError(f"unknown mechanism {kind!r}")


# ------------------------------------------------------------------ checkers

AllocFn = Callable[[Sequence], Sequence[Fraction]]


def _partitioned(items: Iterator, partition: tuple[int, int]) -> Iterator:
    part, of = partition
    for idx, item in enumerate(items):
        if idx % of == part:
            yield idx, item


def _own_points(f, i, others, B, grid):
    pts = set(grid)
    if isinstance(f, Mechanism):
        prof = f.profile(i, others, B)
        edges = [e for e in prof.edges if 0 <= e <= B]
        pts.update(edges)
        pts.update((a + b) / 2 for a, b in zip(edges, edges[1:]))
    return sorted(pts)


def check_monotone(f: Mechanism | AllocFn, n: int, B: int, grid_step=Fraction(1),
                   partition: tuple[int, int] = (0, 1)):
    """Look for a decrease of ``f_i`` in the own bid.

    Opponent bids range over the grid; own bids over the grid plus, for
    mechanisms with a known profile, every breakpoint and the midpoints
    between consecutive breakpoints. Returns ``None`` or a witness
    ``(i, v_others, z, z_next)`` with ``f_i(z) > f_i(z_next)``.
    """
    step = Fraction(grid_step)
    if (Fraction(B) / step).denominator != 1:
        raise DomainError(f"grid step {step} does not divide B={B}")
    grid = [k * step for k in range(int(Fraction(B) / step) + 1)]
    space = ((i, others) for i in range(n) for others in itertools.product(grid, repeat=n - 1))
    for _, (i, others) in _partitioned(space, partition):
        prev_z, prev_val = None, None
        for z in _own_points(f, i, others, B, grid):
            val = f(_insert(others, i, z))[i]
            if prev_val is not None and val < prev_val:
                return (i, others, prev_z, z)
            prev_z, prev_val = z, val
    return None


def dm_gap(f: Mechanism, i: int, vi: int, vi2: int, others: Sequence, B) -> PriceExpression:
    """``int_vi^vi2 (f_i(z, others) - f_i(vi, others)) dz``."""
    prof = f.profile(i, others, B)
    base = f.alloc(_insert(others, i, vi))[i]
    return prof.integral(vi, vi2) - base * (vi2 - vi)


def check_d_dm(f: Mechanism, d: int, n: int, B: int, partition: tuple[int, int] = (0, 1)):
    """Check monotonicity plus ``d``-distinguishability on the integer grid.

    Returns ``None`` on success. A failure is reported as
    ``("monotone", witness)`` or ``("distinguish", (i, v_i, v_i2))`` where no
    opponent profile separates the two bids.
    """
    if d not in (1, 2):
        raise DomainError("d must be 1 or 2")
    bad = check_monotone(f, n, B, Fraction(1), partition)
    if bad is not None:
        return ("monotone", bad)
    pairs = ((i, a, b) for i in range(n) for a in range(B + 1) for b in range(a + d, B + 1))
    grid = range(B + 1)
    for _, (i, a, b) in _partitioned(pairs, partition):
        first = (a,) * (n - 1)
        candidates = itertools.chain([first], itertools.product(grid, repeat=n - 1))
        if not any(sign_of(dm_gap(f, i, a, b, others, B)) > 0 for others in candidates):
            return ("distinguish", (i, a, b))
    return None


def delta_good_slack(probs: Sequence[Fraction], v: Sequence[int], i: int, D: Fraction) -> Fraction:
    """Left minus right side of the per-player goodness inequality."""
    n = len(v)
    lhs = sum((p * x for p, x in zip(probs, v)), ZERO) + D * probs[i] * v[i]
    return lhs - Fraction(v[i]) * (n + D) / n


def check_delta_good(f: Mechanism | AllocFn, delta, n: int, B: int,
                     partition: tuple[int, int] = (0, 1)):
    """Exhaustive goodness check over ``{0..B}^n``.

    Returns ``None`` or the most violated ``(i, v)`` (earliest player, then
    earliest profile, on ties).
    """
    D = d_delta(delta)
    worst = None
    space = ((i, v) for i in range(n) for v in itertools.product(range(B + 1), repeat=n))
    for _, (i, v) in _partitioned(space, partition):
        slack = delta_good_slack(f(v), v, i, D)
        if slack < 0 and (worst is None or slack < worst[0]):
            worst = (slack, (i, v))
    return None if worst is None else worst[1]


def check_allocation_function(f: Mechanism | AllocFn, n: int, B: int,
                              partition: tuple[int, int] = (0, 1)):
    """Every ``f(v)`` over ``{0..B}^n`` lies in [0,1]^n with sum at most 1.

    Returns ``None`` or the first offending bid profile.
    """
    space = itertools.product(range(B + 1), repeat=n)
    for _, v in _partitioned(space, partition):
        if not check_allocation(f(v)):
            return v
    return None
