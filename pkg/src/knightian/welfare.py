"""Welfare guarantees: bound curves, exhaustive worst-case ratios, adversarial
contexts and the dominant-strategy audit of direct mechanisms."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .core import (BudgetExceeded, CandidateSet, Context, DomainError, HypothesisViolated,
                   KnightianError, check_delta, delta_interval, format_rational)
from .dominance import FiniteMechanism, UDedSet, tabulate, uded, very_weakly_dominates
from .mechanisms import Mechanism, TieRule, make_mechanism

DEFAULT_BUDGET = 5 * 10 ** 9
INT64_SAFE = 2 ** 62


# ------------------------------------------------------------------ curves

@dataclass(frozen=True)
class BoundCurves:
    random: Fraction
    second_price: Fraction
    opt: Fraction


def bound_curves(n: int, delta) -> BoundCurves:
    if n < 1:
        raise DomainError("n must be >= 1")
    d = check_delta(delta)
    return BoundCurves(
        random=Fraction(1, n),
        second_price=((1 - d) / (1 + d)) ** 2,
        opt=((1 - d) ** 2 + 4 * d / n) / (1 + d) ** 2,
    )


def crossover_delta(n: int, bits: int = 40) -> tuple[Fraction, Fraction] | None:
    """Enclosure of the delta where the second-price curve meets ``1/n``.

    Solves ``((1-d)/(1+d))**2 = 1/n``, i.e. ``d = (sqrt(n)-1)/(sqrt(n)+1)``;
    returns ``(lo, hi)`` with ``hi - lo <= 2**-bits`` (a point when exact),
    or ``None`` for ``n = 1``.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if n == 1:
        return None
    scale = 1 << bits
    r = math.isqrt(n * scale * scale)

    def at(s: Fraction) -> Fraction:
        return (s - 1) / (s + 1)

    if r * r == n * scale * scale:
        x = at(Fraction(r, scale))
        return x, x
    return at(Fraction(r, scale)), at(Fraction(r + 1, scale))


def sweep_rows(n_list: Sequence[int], deltas: Sequence[Fraction]) -> list[dict]:
    if not deltas:
        raise DomainError("empty delta grid")
    rows = []
    for n in n_list:
        for d in deltas:
            c = bound_curves(n, d)
            rows.append({"n": n, "delta": Fraction(d), "bound_random": c.random,
                         "bound_2p": c.second_price, "bound_opt": c.opt})
    return rows


SWEEP_COLUMNS = ("n", "delta", "bound_random", "bound_2p", "bound_opt")


def decimal6(x: Fraction) -> str:
    with localcontext() as ctx:
        ctx.prec = 6
        return str(Decimal(x.numerator) / Decimal(x.denominator))


def write_sweep_csv(path, rows: list[dict]) -> None:
    import csv
    exact = [c + "_exact" for c in SWEEP_COLUMNS[1:]]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(SWEEP_COLUMNS) + exact)
        for row in rows:
            w.writerow([row["n"]] + [decimal6(row[c]) for c in SWEEP_COLUMNS[1:]]
                       + [format_rational(row[c]) for c in SWEEP_COLUMNS[1:]])


def write_sweep_svg(path, rows: list[dict]) -> None:
    """One panel per n with the three curves over delta."""
    ns = sorted({r["n"] for r in rows})
    w, h, pad = 320, 240, 40
    colors = {"bound_random": "#d62728", "bound_2p": "#1f77b4", "bound_opt": "#2ca02c"}
    names = {"bound_random": "random", "bound_2p": "second price", "bound_opt": "optimal"}
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * len(ns)}" height="{h}" '
             f'font-family="sans-serif" font-size="10">']
    for k, n in enumerate(ns):
        ox = k * w
        pts = sorted((r for r in rows if r["n"] == n), key=lambda r: r["delta"])

        def xy(d, y):
            return (ox + pad + float(d) * (w - 2 * pad), h - pad - float(y) * (h - 2 * pad))

        x0, y0 = xy(0, 0)
        x1, y1 = xy(1, 1)
        parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
        parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
        parts.append(f'<text x="{(x0 + x1) / 2}" y="{h - 8}" text-anchor="middle">delta</text>')
        parts.append(f'<text x="{(x0 + x1) / 2}" y="14" text-anchor="middle">n = {n}</text>')
        for t in (0, 0.5, 1):
            tx, ty = xy(t, 0)
            parts.append(f'<text x="{tx}" y="{ty + 12}" text-anchor="middle">{t}</text>')
            lx, ly = xy(0, t)
            parts.append(f'<text x="{lx - 4}" y="{ly + 3}" text-anchor="end">{t}</text>')
        for j, col in enumerate(("bound_random", "bound_2p", "bound_opt")):
            poly = " ".join("%.2f,%.2f" % xy(r["delta"], r[col]) for r in pts)
            parts.append(f'<polyline points="{poly}" fill="none" stroke="{colors[col]}" stroke-width="1.5"/>')
            lx, ly = xy(0.62, 0.95 - 0.08 * j)
            parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 14}" y2="{ly}" stroke="{colors[col]}"/>')
            parts.append(f'<text x="{lx + 18}" y="{ly + 3}">{names[col]}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def key_range_check(v_i, theta_i, delta) -> bool:
    d = check_delta(delta)
    v, t = Fraction(v_i), Fraction(theta_i)
    return (1 - d) / (1 + d) * v <= t <= (1 + d) / (1 - d) * v


# --------------------------------------------------------------- contexts

def interval_sets(B: int, delta) -> list[CandidateSet]:
    """Every integer interval in ``[0, B]`` with inaccuracy at most ``delta``."""
    d = check_delta(delta)
    return [CandidateSet.interval(lo, hi) for lo in range(B + 1) for hi in range(lo, B + 1)
            if hi - lo <= d * (hi + lo)]


def enumerate_contexts(n: int, B: int, delta, budget: int = 10 ** 7) -> Iterator[tuple]:
    """Yield ``(K, theta)`` for every interval profile and every ``theta`` in it."""
    sets = interval_sets(B, delta)
    total = sum(len(k) for k in sets) ** n
    if total > budget:
        raise BudgetExceeded(f"{total} contexts exceed budget {budget}")
    for K in itertools.product(sets, repeat=n):
        for theta in itertools.product(*(k.values for k in K)):
            yield K, theta


# ----------------------------------------------------------- ratio reports

@dataclass
class RatioReport:
    ratio: Fraction | None
    witness_context: Context | None
    witness_profile: tuple[int, ...] | None
    mechanism_id: str
    checked: int = 0
    conservative: bool = False  # some UDed members were kept only because undecided

    def to_json(self) -> dict:
        return {
            "mechanism": self.mechanism_id,
            "ratio": None if self.ratio is None else format_rational(self.ratio),
            "ratio_float": None if self.ratio is None else float(self.ratio),
            "witness_context": None if self.witness_context is None else self.witness_context.to_json(),
            "witness_profile": None if self.witness_profile is None else list(self.witness_profile),
            "checked": self.checked,
            "conservative": self.conservative,
        }


@dataclass
class BoundCheck:
    passed: bool
    checked: int
    counterexample: dict | None = None
    worst: RatioReport | None = None
    bound: str = ""

    def to_json(self) -> dict:
        return {"passed": self.passed, "checked": self.checked, "bound": self.bound,
                "counterexample": self.counterexample,
                "worst": None if self.worst is None else self.worst.to_json()}


def _mechanism(mech, n, delta, tie) -> Mechanism | FiniteMechanism:
    if isinstance(mech, str):
        return make_mechanism(mech, n, delta, tie)
    return mech


def _alloc_arrays(mech, n: int, B: int):
    """Per-profile integer numerators and denominators of the allocation."""
    P = (B + 1) ** n
    num = np.zeros((P, n), dtype=np.int64)
    den = np.ones(P, dtype=np.int64)
    for idx, prof in enumerate(itertools.product(range(B + 1), repeat=n)):
        probs = mech.alloc_table[prof] if isinstance(mech, FiniteMechanism) else mech.alloc(prof)
        d = math.lcm(*(Fraction(p).denominator for p in probs))
        if d >= INT64_SAFE:
            raise OverflowError("allocation denominators too large for the integer kernel")
        den[idx] = d
        for j, p in enumerate(probs):
            num[idx, j] = Fraction(p).numerator * (d // Fraction(p).denominator)
    strides = np.array([(B + 1) ** (n - 1 - j) for j in range(n)], dtype=np.int64)
    return num, den, strides


def _check_overflow(den, n, B, alpha, beta, gamma):
    dmax = int(den.max())
    worst = max(alpha * n * B * dmax, (beta * B + abs(gamma)) * dmax, n * B * dmax * dmax * B)
    if worst >= INT64_SAFE:
        raise OverflowError("exact kernel would overflow int64 at this size")


def _scan(mech, n, B, sets, kprof, strategy_sets, alpha, beta, gamma, backend, chunks):
    num, den, strides = _alloc_arrays(mech, n, B)
    _check_overflow(den, n, B, alpha, beta, gamma)
    m = len(sets)
    width = max(len(s) for per in strategy_sets for s in per)
    allowed = np.zeros((n, m, width), dtype=np.int64)
    count = np.zeros((n, m), dtype=np.int64)
    for j in range(n):
        for k in range(m):
            vals = sorted(strategy_sets[j][k])
            if not vals:
                raise KnightianError(f"player {j + 1} has no strategies for {sets[k]}")
            allowed[j, k, :len(vals)] = vals
            count[j, k] = len(vals)
    lo = np.array([s.min for s in sets], dtype=np.int64)
    hi = np.array([s.max for s in sets], dtype=np.int64)
    inp = _kernels.ScanInput(num, den, strides, lo, hi, allowed, count,
                             np.ascontiguousarray(kprof, dtype=np.int64), alpha, beta, gamma)
    R = len(kprof)
    chunks = max(1, min(chunks, R))
    bounds = [(R * c // chunks, R * (c + 1) // chunks) for c in range(chunks)]
    results = [_kernels.run_scan(inp, backend, b) for b in bounds]
    return _kernels.merge(results), inp


def _record_to_context(rec, kprof, sets, n, B, delta):
    if rec[0] < 0:
        return None, None
    K = tuple(sets[k] for k in kprof[int(rec[0])])
    theta = tuple(int(t) for t in rec[1:1 + n])
    bids = tuple(int(b) for b in rec[1 + n:])
    return Context(n, B, Fraction(delta), K, theta), bids


def _full_kprof(m: int, n: int) -> np.ndarray:
    return np.array(list(itertools.product(range(m), repeat=n)), dtype=np.int64).reshape(-1, n)


def _budget(sets, strategy_sets, n, budget):
    per_player = [sum(len(s) * len(strategy_sets[j][k]) for k, s in enumerate(sets)) for j in range(n)]
    total = math.prod(per_player)
    if total > budget:
        raise BudgetExceeded(f"{total} combinations exceed budget {budget}")


def box(K: CandidateSet, widen: int, B: int) -> range:
    return range(max(0, K.min - widen), min(B, K.max + widen) + 1)


def dm_widening(mech) -> int | None:
    """Box widening implied by distinguishable monotonicity, when known."""
    from .mechanisms import OptimalMechanism, RandomAssignment, SecondPrice
    if isinstance(mech, OptimalMechanism):
        return 0
    if isinstance(mech, SecondPrice):
        # a tied bid wins with probability 1/2 under random ties, which
        # already separates bids one apart
        return 0 if mech.tie is TieRule.UNIFORM_RANDOM else 1
    if isinstance(mech, RandomAssignment):
        return None
    return None


def uded_table(mech, n: int, B: int, delta, sets: Sequence[CandidateSet],
               tie="lex", table: FiniteMechanism | None = None) -> tuple[list[list[UDedSet]], FiniteMechanism]:
    """UDed sets for every player and candidate interval.

    When the mechanism is known to be d-DM only bids in the DM box are
    tested; every other bid is outside UDed by the DM inclusion.
    """
    mech = _mechanism(mech, n, delta, tie)
    if table is None:
        table = mech if isinstance(mech, FiniteMechanism) else tabulate(mech, n, B)
    widen = None if isinstance(mech, FiniteMechanism) else dm_widening(mech)
    out = []
    for i in range(n):
        row = []
        for K in sets:
            cands = None if widen is None else box(K, widen, B)
            row.append(uded(table, i, K, candidates=cands))
        out.append(row)
    return out, table


def worst_case_ratio(mech, n: int, B: int, delta, tie="lex", strategies: str = "uded",
                     kprofiles: Sequence[Sequence[CandidateSet]] | None = None,
                     budget: int = DEFAULT_BUDGET, backend: str | None = None,
                     chunks: int = 1) -> RatioReport:
    """Minimum ``E[SW]/MSW`` over interval contexts and UDed strategy profiles.

    ``strategies`` is ``"uded"`` (exact UDed sets, computed by LP) or a box
    widening ``"box0"``/``"box1"``. ``kprofiles`` restricts the scan to given
    candidate-set profiles instead of every interval profile.
    """
    delta = check_delta(delta)
    m_obj = _mechanism(mech, n, delta, tie)
    if kprofiles is None:
        sets = interval_sets(B, delta)
        kprof = _full_kprof(len(sets), n)
    else:
        sets = sorted({K for prof in kprofiles for K in prof})
        index = {K: k for k, K in enumerate(sets)}
        kprof = np.array([[index[K] for K in prof] for prof in kprofiles], dtype=np.int64)
    conservative = False
    if strategies == "uded":
        table_sets, _ = uded_table(m_obj, n, B, delta, sets, tie)
        strategy_sets = [[list(u.strategies) for u in row] for row in table_sets]
        conservative = any(u.undecided for row in table_sets for u in row)
    elif strategies.startswith("box"):
        w = int(strategies[3:])
        strategy_sets = [[list(box(K, w, B)) for K in sets] for _ in range(n)]
    else:
        raise DomainError(f"unknown strategy mode {strategies!r}")
    _budget(sets, strategy_sets, n, budget)
    res, _ = _scan(m_obj, n, B, sets, kprof, strategy_sets, 1, 0, 0, backend, chunks)
    ctx, bids = _record_to_context(res.best, kprof, sets, n, B, delta)
    name = getattr(m_obj, "name", "mechanism")
    return RatioReport(res.ratio, ctx, bids, name, res.checked, conservative)


def evaluate_ratio(mech, context: Context, bids: Sequence[int], tie="lex") -> Fraction:
    """``E[SW]/MSW`` of a pure bid profile in a context (re-evaluation of witnesses)."""
    m_obj = _mechanism(mech, context.n, context.delta, tie)
    probs = m_obj.alloc_table[tuple(bids)] if isinstance(m_obj, FiniteMechanism) else m_obj.alloc(bids)
    sw = sum((Fraction(p) * t for p, t in zip(probs, context.theta)), Fraction(0))
    return sw / max(context.theta)


def positive_bound(mech, n: int, delta) -> tuple[int, int, int, str]:
    """Integer form ``alpha * SW >= beta * MSW - gamma`` of the guarantee."""
    d = check_delta(delta)
    c = (1 - d) / (1 + d)
    p, q = c.numerator, c.denominator
    from .mechanisms import OptimalMechanism, SecondPrice
    if isinstance(mech, OptimalMechanism):
        rho = bound_curves(n, d).opt
        return rho.denominator, rho.numerator, 0, f"E[SW] >= {format_rational(rho)} * MSW"
    if isinstance(mech, SecondPrice) and mech.tie is TieRule.UNIFORM_RANDOM:
        return q * q, p * p, 0, f"E[SW] >= {format_rational(c * c)} * MSW"
    if isinstance(mech, SecondPrice):
        return (q * q, p * p, 2 * p * q,
                f"SW >= {format_rational(c * c)} * MSW - {format_rational(2 * c)}")
    raise DomainError("positive guarantees exist for second price and the optimal mechanism only")


def verify_positive_theorem(mech, n: int, B: int, delta, tie="lex", budget: int = DEFAULT_BUDGET,
                            backend: str | None = None, chunks: int = 1) -> BoundCheck:
    """Check the welfare guarantee exhaustively on the DM box of every interval context."""
    delta = check_delta(delta)
    m_obj = _mechanism(mech, n, delta, tie)
    alpha, beta, gamma, text = positive_bound(m_obj, n, delta)
    widen = dm_widening(m_obj)
    sets = interval_sets(B, delta)
    kprof = _full_kprof(len(sets), n)
    strategy_sets = [[list(box(K, widen, B)) for K in sets] for _ in range(n)]
    _budget(sets, strategy_sets, n, budget)
    res, _ = _scan(m_obj, n, B, sets, kprof, strategy_sets, alpha, beta, gamma, backend, chunks)
    worst_ctx, worst_bids = _record_to_context(res.best, kprof, sets, n, B, delta)
    worst = RatioReport(res.ratio, worst_ctx, worst_bids, m_obj.name, res.checked)
    cex = None
    if res.violations:
        ctx, bids = _record_to_context(res.first_violation, kprof, sets, n, B, delta)
        cex = {"context": ctx.to_json(), "bids": list(bids),
               "ratio": format_rational(evaluate_ratio(m_obj, ctx, bids)),
               "violations": res.violations}
    return BoundCheck(res.violations == 0, res.checked, cex, worst, text)


# ---------------------------------------------------------- constructions

def theorem35_construction(n: int, B: int, delta, y_rounding: str = "ceil", lead: int = 0) -> Context:
    """Adversarial context ``K = (d[x], d[y], ..., d[y])`` with ``x = B/(1+delta)``.

    ``y`` is rounded up by default so that ``d[x]`` and ``d[y]`` share two
    integers; ``y_rounding="floor"`` reproduces the literal rounding, whose
    overlap can be a single integer. ``lead`` is the player holding ``d[x]``.
    """
    d = check_delta(delta)
    if n < 2:
        raise DomainError("the construction needs at least two players")
    if B < 5 / d:
        raise HypothesisViolated(f"B={B} is below 5/delta={format_rational(5 / d)}")
    x = Fraction(B) / (1 + d)
    t = ((1 - d) * x + 2) / (1 + d)
    if y_rounding == "ceil":
        y = math.ceil(t)
    elif y_rounding == "floor":
        y = math.floor(t)
    else:
        raise DomainError(f"unknown rounding {y_rounding!r}")
    Kx, Ky = delta_interval(x, d, B), delta_interval(y, d, B)
    hi_theta = math.floor((1 + d) * x)
    lo_theta = math.ceil((1 - d) * y)
    K = [Ky] * n
    theta = [lo_theta] * n
    K[lead], theta[lead] = Kx, hi_theta
    return Context(n, B, d, tuple(K), tuple(theta))


def construction_ratio(mech, n: int, B: int, delta, tie="lex", y_rounding: str = "ceil") -> RatioReport:
    """Worst ratio over UDed profiles and all ``theta`` on the adversarial contexts."""
    profiles = [theorem35_construction(n, B, delta, y_rounding, lead).K for lead in range(n)]
    return worst_case_ratio(mech, n, B, delta, tie, kprofiles=profiles)


def theorem1_threshold(delta) -> int:
    d = check_delta(delta)
    return math.floor((3 - d) / (2 * d)) + 1


def theorem1_bound(n: int, B: int, delta) -> Fraction:
    return Fraction(1, n) + Fraction(theorem1_threshold(delta), B)


def theorem1_construction(n: int, B: int, delta, lead: int = 0):
    """``(K_hat, K, theta)`` with ``K_hat = (d[c],...)`` and ``K = (d[B], d[c], ...)``."""
    d = check_delta(delta)
    if B <= (3 - d) / (2 * d):
        raise HypothesisViolated(f"B={B} must exceed (3-delta)/(2 delta)={format_rational((3 - d) / (2 * d))}")
    c = theorem1_threshold(d)
    Kc = delta_interval(c, d, B)
    K_hat = (Kc,) * n
    K = [Kc] * n
    theta = [c] * n
    K[lead] = delta_interval(B, d, B)
    theta[lead] = B
    return K_hat, tuple(K), tuple(theta)


# ------------------------------------------------------- direct mechanisms

class NotTruthful(KnightianError):
    def __init__(self, message, witness):
        super().__init__(message)
        self.witness = witness


def direct_mechanism(rule, n: int, B: int, delta, name: str = "direct") -> FiniteMechanism:
    """Tabulate a direct mechanism whose reports are the delta-admissible intervals.

    ``rule(K_profile)`` returns ``(probs, prices)``.
    """
    sets = interval_sets(B, delta)
    alloc, prices = {}, {}
    for prof in itertools.product(range(len(sets)), repeat=n):
        probs, pay = rule(tuple(sets[k] for k in prof))
        alloc[prof] = tuple(Fraction(p) for p in probs)
        prices[prof] = tuple(Fraction(p) for p in pay)
    return FiniteMechanism((len(sets),) * n, alloc, prices, name, tuple(tuple(sets) for _ in range(n)))


def uniform_direct(n: int, B: int, delta) -> FiniteMechanism:
    return direct_mechanism(lambda K: ((Fraction(1, n),) * n, (0,) * n), n, B, delta, "uniform_direct")


def midpoint_second_price_direct(n: int, B: int, delta) -> FiniteMechanism:
    """Second price (lexicographic ties) run on the midpoints of the reports."""
    from .mechanisms import second_price

    def rule(K):
        mids = [Fraction(k.min + k.max, 2) for k in K]
        out = second_price(mids)
        probs = [Fraction(int(j == out.winner)) for j in range(n)]
        return probs, out.prices
    return direct_mechanism(rule, n, B, delta, "midpoint_second_price")


@dataclass
class Theorem1Report:
    truthful: bool
    claim1_holds: bool
    claim1_witness: tuple | None
    ratio: Fraction
    bound: Fraction
    context: Context
    lead: int

    @property
    def passed(self) -> bool:
        return self.truthful and self.ratio <= self.bound

    def to_json(self) -> dict:
        return {"truthful": self.truthful, "claim1_holds": self.claim1_holds,
                "claim1_witness": None if self.claim1_witness is None else [
                    str(x) for x in self.claim1_witness],
                "ratio": format_rational(self.ratio), "bound": format_rational(self.bound),
                "context": self.context.to_json(), "lead_player": self.lead + 1,
                "passed": self.passed}


def check_truthful(M: FiniteMechanism) -> tuple | None:
    """``None`` when reporting one's own set very-weakly dominates every other report."""
    for i in range(M.n):
        labels = M.labels[i]
        for s, K in enumerate(labels):
            for t in range(len(labels)):
                if t == s:
                    continue
                v = very_weakly_dominates(M, i, K, s, t)
                if not v.holds:
                    theta, others = v.witness
                    return (i, K, labels[t], theta, tuple(M.labels[j][o] for j, o in
                                                          zip([j for j in range(M.n) if j != i], others)))
    return None


def check_claim1(M: FiniteMechanism, B: int, delta) -> tuple | None:
    """Allocation invariance between adjacent delta-intervals ``d[x]`` and ``d[x+1]``."""
    d = check_delta(delta)
    c = theorem1_threshold(d)
    for i in range(M.n):
        index = {K: k for k, K in enumerate(M.labels[i])}
        rows = M.payoff_rows(i)
        opp = M.others(i)
        for x in range(c, B):
            a, b = delta_interval(x, d, B), delta_interval(x + 1, d, B)
            if a not in index or b not in index:
                continue
            ra, rb = rows[index[a]], rows[index[b]]
            for k, o in enumerate(opp):
                if ra[k][0] != rb[k][0]:
                    return (i, x, o)
    return None


def theorem1_audit(M: FiniteMechanism, n: int, B: int, delta) -> Theorem1Report:
    """Verify truthfulness, Claim-1 invariance and the welfare cap on the construction."""
    d = check_delta(delta)
    if M.labels is None:
        raise DomainError("direct mechanism needs interval labels for its strategies")
    bad = check_truthful(M)
    if bad is not None:
        i, K, report, theta, others = bad
        raise NotTruthful(f"player {i + 1} with K={K} prefers reporting {report} "
                          f"at theta={theta}", bad)
    claim = check_claim1(M, B, d)
    K_hat, _, _ = theorem1_construction(n, B, d)
    index = [{K: k for k, K in enumerate(M.labels[i])} for i in range(n)]
    probs_hat = M.alloc_table[tuple(index[i][K_hat[i]] for i in range(n))]
    lead = min(range(n), key=lambda j: (probs_hat[j], j))
    _, K, theta = theorem1_construction(n, B, d, lead)
    probs = M.alloc_table[tuple(index[i][K[i]] for i in range(n))]
    ratio = sum((p * t for p, t in zip(probs, theta)), Fraction(0)) / max(theta)
    return Theorem1Report(True, claim is None, claim, ratio, theorem1_bound(n, B, d),
                          Context(n, B, d, K, theta), lead)
