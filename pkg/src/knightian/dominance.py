"""Knightian dominance over tabulated finite mechanisms.

A player's utility is affine in the true valuation, so every dominance test
only needs the two endpoints ``min K_i`` and ``max K_i`` of the candidate
set. Mixed-strategy domination is decided by an exact rational LP; when
prices carry logarithms the LP is run on sound interval bounds of the
utility differences and refined until it decides.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .core import BudgetExceeded, CandidateSet, HypothesisViolated, format_rational, parse_rational
from .lp import linprog_exact
from .mechanisms import Mechanism, make_mechanism
from .pricing import PriceExpression, UndecidableAtPrecision, precision_cap, sign_of

ZERO = Fraction(0)
DEFAULT_BUDGET = 250_000

Price = Fraction | PriceExpression


@dataclass
class FiniteMechanism:
    """Expected allocation and price tables over every pure strategy profile."""

    strategy_counts: tuple[int, ...]
    alloc_table: dict[tuple[int, ...], tuple[Fraction, ...]]
    price_table: dict[tuple[int, ...], tuple[Price, ...]]
    name: str = "mechanism"
    labels: tuple[tuple, ...] | None = None
    _rows: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.strategy_counts)

    def profiles(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(c) for c in self.strategy_counts))

    def others(self, i: int) -> list[tuple[int, ...]]:
        ranges = [range(c) for j, c in enumerate(self.strategy_counts) if j != i]
        return list(itertools.product(*ranges))

    def validate(self) -> list[str]:
        problems = []
        for prof in self.profiles():
            if prof not in self.alloc_table or prof not in self.price_table:
                problems.append(f"profile {prof} missing")
                continue
            probs = self.alloc_table[prof]
            if any(p < 0 or p > 1 for p in probs) or sum(probs) > 1:
                problems.append(f"profile {prof} allocation {probs} invalid")
        return problems

    def payoff_rows(self, i: int) -> list[list[tuple[Fraction, Price]]]:
        """``rows[t][k]`` is ``(alloc_i, price_i)`` for own strategy ``t``
        against the ``k``-th opponent subprofile of :meth:`others`."""
        if i not in self._rows:
            opp = self.others(i)
            rows = []
            for t in range(self.strategy_counts[i]):
                row = []
                for o in opp:
                    prof = o[:i] + (t,) + o[i:]
                    row.append((self.alloc_table[prof][i], self.price_table[prof][i]))
                rows.append(row)
            self._rows[i] = rows
        return self._rows[i]

    # serialization ----------------------------------------------------------
    def to_json(self) -> dict:
        profs = list(self.profiles())

        def enc(p):
            if isinstance(p, PriceExpression) and not p.is_rational:
                return p.to_json()
            return format_rational(p.as_fraction() if isinstance(p, PriceExpression) else p)

        doc = {
            "name": self.name,
            "strategy_counts": list(self.strategy_counts),
            "profiles": [list(p) for p in profs],
            "alloc": [[format_rational(x) for x in self.alloc_table[p]] for p in profs],
            "prices": [[enc(x) for x in self.price_table[p]] for p in profs],
        }
        if self.labels is not None:
            doc["labels"] = [[_label_json(x) for x in lab] for lab in self.labels]
        return doc

    @classmethod
    def from_json(cls, doc: dict | str) -> FiniteMechanism:
        if isinstance(doc, str):
            doc = json.loads(doc)

        def dec(x):
            return PriceExpression.from_json(x) if isinstance(x, dict) else parse_rational(x)

        counts = tuple(doc["strategy_counts"])
        profs = [tuple(p) for p in doc.get("profiles") or itertools.product(*(range(c) for c in counts))]
        alloc = {p: tuple(parse_rational(x) for x in row) for p, row in zip(profs, doc["alloc"])}
        prices = {p: tuple(dec(x) for x in row) for p, row in zip(profs, doc["prices"])}
        labels = doc.get("labels")
        if labels is not None:
            labels = tuple(tuple(CandidateSet(tuple(x)) if isinstance(x, list) else x for x in lab)
                           for lab in labels)
        return cls(counts, alloc, prices, doc.get("name", "mechanism"), labels)


def _label_json(x):
    if isinstance(x, CandidateSet):
        return list(x.values)
    return x


def tabulate(mech: Mechanism | str, n: int, B: int, delta=None, tie="lex",
             budget: int = DEFAULT_BUDGET) -> FiniteMechanism:
    """Materialize a bid mechanism over ``{0..B}^n``."""
    if isinstance(mech, str):
        mech = make_mechanism(mech, n, delta, tie)
    size = (B + 1) ** n
    if size > budget:
        raise BudgetExceeded(f"{size} profiles exceed budget {budget}")
    alloc, prices = {}, {}
    for prof in itertools.product(range(B + 1), repeat=n):
        alloc[prof] = tuple(mech.alloc(prof))
        prices[prof] = tuple(mech.prices(prof))
    labels = tuple(tuple(range(B + 1)) for _ in range(n))
    return FiniteMechanism((B + 1,) * n, alloc, prices, mech.name, labels)


@dataclass(frozen=True)
class MixedStrategy:
    weights: tuple[tuple[int, Fraction], ...]

    def __init__(self, weights):
        items = weights.items() if isinstance(weights, dict) else weights
        clean = tuple(sorted((int(s), Fraction(w)) for s, w in items if Fraction(w) != 0))
        if any(w < 0 for _, w in clean):
            raise ValueError("mixed strategy weights must be nonnegative")
        if sum(w for _, w in clean) != 1:
            raise ValueError("mixed strategy weights must sum to 1")
        object.__setattr__(self, "weights", clean)

    @classmethod
    def pure(cls, s: int) -> MixedStrategy:
        return cls({s: Fraction(1)})

    @classmethod
    def uniform(cls, support: Iterable[int]) -> MixedStrategy:
        support = list(support)
        return cls({s: Fraction(1, len(support)) for s in support})

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.weights)

    def as_dict(self) -> dict[int, Fraction]:
        return dict(self.weights)


def _as_mixed(sigma) -> MixedStrategy:
    return sigma if isinstance(sigma, MixedStrategy) else MixedStrategy.pure(sigma)


def _endpoints(K) -> tuple[int, ...]:
    K = K if isinstance(K, CandidateSet) else CandidateSet(tuple(K))
    return (K.min,) if K.min == K.max else (K.min, K.max)


def _as_expr(x: Price) -> PriceExpression:
    return PriceExpression.coerce(x)


def _simplify(x: Price) -> Price:
    if isinstance(x, PriceExpression) and x.is_rational:
        return x.rational_part
    return x


def expected_utility(M: FiniteMechanism, i: int, theta_i, sigma_i, t_others: Sequence[int]) -> Price:
    """``E u_i`` when ``i`` plays ``sigma_i`` against the pure subprofile ``t_others``."""
    sigma = _as_mixed(sigma_i)
    theta = Fraction(theta_i)
    total = PriceExpression(0)
    for s, w in sigma.weights:
        prof = tuple(t_others[:i]) + (s,) + tuple(t_others[i:])
        a = M.alloc_table[prof][i]
        p = M.price_table[prof][i]
        total = total + (a * theta - _as_expr(p)) * w
    return _simplify(total)


@dataclass(frozen=True)
class DominanceVerdict:
    holds: bool
    witness: tuple | None = None  # (theta_i, t_others) of a violated or strict pair
    precision_bits: int | None = None

    def __bool__(self):
        return self.holds


def _diff_rows(M: FiniteMechanism, i: int, K, sigma: MixedStrategy, s: int, thetas=None):
    rows = M.payoff_rows(i)
    opp = M.others(i)
    thetas = _endpoints(K) if thetas is None else thetas
    for theta in thetas:
        for k, o in enumerate(opp):
            a_s, p_s = rows[s][k]
            diff = p_s - a_s * theta
            for t, w in sigma.weights:
                a_t, p_t = rows[t][k]
                diff = diff + (a_t * theta - p_t) * w
            yield theta, o, _simplify(diff)


def _logs_used(M: FiniteMechanism) -> bool:
    return any(isinstance(p, PriceExpression) and not p.is_rational
               for row in M.price_table.values() for p in row)


def very_weakly_dominates(M: FiniteMechanism, i: int, K_i, sigma_i, s_i: int,
                          endpoints_only: bool = True, cap: int | None = None) -> DominanceVerdict:
    """``sigma_i`` is at least as good as ``s_i`` for every ``theta in K_i`` and opponent profile."""
    K = K_i if isinstance(K_i, CandidateSet) else CandidateSet(tuple(K_i))
    thetas = None if endpoints_only else K.values
    bits = (cap or precision_cap()) if _logs_used(M) else None
    for theta, o, diff in _diff_rows(M, i, K, _as_mixed(sigma_i), s_i, thetas):
        if sign_of(diff, cap) < 0:
            return DominanceVerdict(False, (theta, o), bits)
    return DominanceVerdict(True, None, bits)


def weakly_dominates(M: FiniteMechanism, i: int, K_i, sigma_i, s_i: int,
                     endpoints_only: bool = True, cap: int | None = None) -> DominanceVerdict:
    """Very-weak dominance plus a strict improvement at some ``(theta, t_others)``."""
    K = K_i if isinstance(K_i, CandidateSet) else CandidateSet(tuple(K_i))
    thetas = None if endpoints_only else K.values
    bits = (cap or precision_cap()) if _logs_used(M) else None
    strict = None
    for theta, o, diff in _diff_rows(M, i, K, _as_mixed(sigma_i), s_i, thetas):
        sg = sign_of(diff, cap)
        if sg < 0:
            return DominanceVerdict(False, (theta, o), bits)
        if sg > 0 and strict is None:
            strict = (theta, o)
    if strict is None:
        return DominanceVerdict(False, None, bits)
    return DominanceVerdict(True, strict, bits)


# ------------------------------------------------------------------ LP search

def _difference_matrix(M: FiniteMechanism, i: int, K, s: int, alternatives: Sequence[int]):
    """Rows of ``U(t) - U(s)`` per (endpoint theta, opponent subprofile)."""
    rows = M.payoff_rows(i)
    opp_count = len(M.others(i))
    out = []
    for theta in _endpoints(K):
        for k in range(opp_count):
            a_s, p_s = rows[s][k]
            u_s = a_s * theta - p_s
            row = []
            for t in alternatives:
                a_t, p_t = rows[t][k]
                row.append(_simplify(a_t * theta - p_t - u_s))
            out.append(row)
    return out


def _slack_lp(matrix: list[list[Fraction]]):
    """Maximize the total per-row advantage of a mixture over the columns."""
    uniq = []
    seen = set()
    for row in matrix:
        key = tuple(row)
        if key in seen or not any(row):
            continue
        seen.add(key)
        uniq.append(row)
    n_w = len(matrix[0]) if matrix else 0
    n_e = len(uniq)
    c = [ZERO] * n_w + [Fraction(1)] * n_e
    A_ub, b_ub = [], []
    for r, row in enumerate(uniq):
        line = [-x for x in row] + [ZERO] * n_e
        line[n_w + r] = Fraction(1)
        A_ub.append(line)
        b_ub.append(ZERO)
    # every all-zero row still demands a nonnegative advantage, which holds
    A_eq = [[Fraction(1)] * n_w + [ZERO] * n_e]
    b_eq = [Fraction(1)]
    res = linprog_exact(c, A_ub, b_ub, A_eq, b_eq, maximize=True)
    return res, n_w


def _bounded(matrix, bits: int, lower: bool) -> list[list[Fraction]]:
    out = []
    for row in matrix:
        line = []
        for x in row:
            if isinstance(x, PriceExpression):
                lo, hi = x.interval(bits)
                line.append(lo if lower else hi)
            else:
                line.append(x)
        out.append(line)
    return out


def mixed_dominator(M: FiniteMechanism, i: int, K_i, s_i: int,
                    cap: int | None = None) -> MixedStrategy | None:
    """A mixed strategy weakly dominating ``s_i`` relative to ``K_i``, or ``None``.

    Raises :class:`UndecidableAtPrecision` when interval bounds on
    logarithmic prices cannot settle the LP at ``cap`` bits.
    """
    K = K_i if isinstance(K_i, CandidateSet) else CandidateSet(tuple(K_i))
    alternatives = [t for t in range(M.strategy_counts[i]) if t != s_i]
    if not alternatives:
        return None
    matrix = _difference_matrix(M, i, K, s_i, alternatives)

    cap = precision_cap() if cap is None else cap
    # a pure dominator settles the question without an LP
    for col, t in enumerate(alternatives):
        try:
            signs = [sign_of(row[col], cap) for row in matrix]
        except UndecidableAtPrecision:
            continue
        if min(signs) >= 0 and max(signs) > 0:
            return MixedStrategy.pure(t)

    exact = all(not isinstance(x, PriceExpression) for row in matrix for x in row)
    if exact:
        res, n_w = _slack_lp(matrix)
        if not res.ok or res.value <= 0:
            return None
        return _mixture(alternatives, res.x[:n_w])

    bits = min(32, cap)
    while True:
        res, n_w = _slack_lp(_bounded(matrix, bits, lower=True))
        if res.ok and res.value > 0:
            sigma = _mixture(alternatives, res.x[:n_w])
            if weakly_dominates(M, i, K, sigma, s_i, cap=cap):
                return sigma
        res, _ = _slack_lp(_bounded(matrix, bits, lower=False))
        if not res.ok or res.value <= 0:
            return None
        if bits >= cap:
            raise UndecidableAtPrecision(f"domination of strategy {s_i} unresolved at {cap} bits")
        bits = min(cap, bits * 2)


def _mixture(alternatives, weights) -> MixedStrategy:
    return MixedStrategy({t: w for t, w in zip(alternatives, weights) if w})


@dataclass(frozen=True)
class UDedSet:
    """Undominated pure strategies; ``undecided`` ones are kept conservatively."""

    strategies: tuple[int, ...]
    undecided: tuple[int, ...] = ()

    def __iter__(self):
        return iter(self.strategies)

    def __contains__(self, s):
        return s in self.strategies

    def __len__(self):
        return len(self.strategies)

    def __repr__(self):
        extra = f", undecided={list(self.undecided)}" if self.undecided else ""
        return f"UDedSet({list(self.strategies)}{extra})"


def uded(M: FiniteMechanism, i: int, K_i, candidates: Iterable[int] | None = None,
         cap: int | None = None) -> UDedSet:
    """Pure strategies of player ``i`` not weakly dominated by any mixed strategy.

    ``candidates`` restricts which strategies are tested (callers pass a
    superset known to contain the answer); the dominating mixtures always
    range over the full strategy set.
    """
    cands = range(M.strategy_counts[i]) if candidates is None else sorted(set(candidates))
    keep, undecided = [], []
    for s in cands:
        try:
            if mixed_dominator(M, i, K_i, s, cap) is None:
                keep.append(s)
        except UndecidableAtPrecision:
            keep.append(s)
            undecided.append(s)
    return UDedSet(tuple(keep), tuple(undecided))


def dnt(M: FiniteMechanism, i: int, K_i) -> list[int]:
    """Pure strategies very-weakly dominating every other pure strategy."""
    n_s = M.strategy_counts[i]
    out = []
    for s in range(n_s):
        if all(very_weakly_dominates(M, i, K_i, s, t) for t in range(n_s) if t != s):
            out.append(s)
    return out


# ------------------------------------------------------------ intersection probe

@dataclass(frozen=True)
class ProbeResult:
    epsilon: Fraction
    sigma: MixedStrategy
    sigma_other: MixedStrategy
    uded: UDedSet
    uded_other: UDedSet


def intersection_probe(M: FiniteMechanism, i: int, K_i, K_other,
                       cap: int | None = None) -> ProbeResult:
    """Smallest worst-case allocation gap between mixtures over two UDed sets."""
    K1 = K_i if isinstance(K_i, CandidateSet) else CandidateSet(tuple(K_i))
    K2 = K_other if isinstance(K_other, CandidateSet) else CandidateSet(tuple(K_other))
    if len(set(K1.values) & set(K2.values)) < 2:
        raise HypothesisViolated("candidate sets must share at least two values")
    U1 = uded(M, i, K1, cap=cap)
    U2 = uded(M, i, K2, cap=cap)
    rows = M.payoff_rows(i)
    opp_count = len(M.others(i))
    n1, n2 = len(U1), len(U2)
    n_var = n1 + n2 + 1  # weights, weights, epsilon
    c = [ZERO] * (n1 + n2) + [Fraction(1)]
    A_ub, b_ub = [], []
    seen = set()
    for k in range(opp_count):
        coeffs = tuple([rows[u][k][0] for u in U1.strategies] + [-rows[u][k][0] for u in U2.strategies])
        if coeffs in seen:
            continue
        seen.add(coeffs)
        A_ub.append(list(coeffs) + [Fraction(-1)])
        A_ub.append([-x for x in coeffs] + [Fraction(-1)])
        b_ub += [ZERO, ZERO]
    A_eq = [[Fraction(1)] * n1 + [ZERO] * (n2 + 1), [ZERO] * n1 + [Fraction(1)] * n2 + [ZERO]]
    res = linprog_exact(c, A_ub, b_ub, A_eq, [Fraction(1), Fraction(1)], maximize=False)
    assert res.ok and len(res.x) == n_var
    sigma = MixedStrategy({u: w for u, w in zip(U1.strategies, res.x[:n1]) if w})
    sigma2 = MixedStrategy({u: w for u, w in zip(U2.strategies, res.x[n1:n1 + n2]) if w})
    return ProbeResult(res.value, sigma, sigma2, U1, U2)
