import csv
import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from knightian.core import BudgetExceeded, CandidateSet as C, HypothesisViolated, validate_context
from knightian.dominance import uded, very_weakly_dominates
from knightian.mechanisms import make_mechanism
from knightian import welfare as W

deltas = st.fractions(F(1, 1000), F(999, 1000), max_denominator=1000)


def test_bound_curve_examples():
    c = W.bound_curves(2, F(1, 2))
    assert (c.random, c.second_price, c.opt) == (F(1, 2), F(1, 9), F(5, 9))
    assert c.opt / c.second_price == 5
    c4 = W.bound_curves(4, F(1, 2))
    assert c4.opt / c4.second_price == 3
    tiny = W.bound_curves(3, F(1, 10 ** 6))
    assert 1 - tiny.second_price < F(1, 10 ** 5) and 1 - tiny.opt < F(1, 10 ** 5)


@given(st.integers(1, 50), deltas)
def test_bound_curve_ordering(n, d):
    c = W.bound_curves(n, d)
    assert c.opt - c.second_price == (4 * d / n) / (1 + d) ** 2
    assert c.opt >= c.second_price and c.opt >= c.random


def test_crossover_examples():
    lo, hi = W.crossover_delta(2)
    assert F(171, 1000) < lo <= hi < F(172, 1000) and hi - lo <= F(1, 1000)
    assert W.crossover_delta(4) == (F(1, 3), F(1, 3))
    assert W.crossover_delta(1) is None


@given(st.integers(2, 400))
def test_crossover_brackets_root(n):
    lo, hi = W.crossover_delta(n)
    assert hi - lo <= F(1, 2 ** 39)
    assert W.bound_curves(n, lo).second_price >= F(1, n) >= W.bound_curves(n, hi).second_price


def test_interval_sets():
    sets = W.interval_sets(2, F(1, 3))
    assert C((1, 2)) in sets and C((0, 1)) not in sets
    assert all(C((x,)) in sets for x in range(3))
    wide = W.interval_sets(20, F(99, 100))
    expected = {C.interval(lo, hi) for lo in range(1, 21) for hi in range(lo, 21)} | {C((0,))}
    assert set(wide) == expected


def test_enumerate_contexts_counts_and_budget():
    ctx = list(W.enumerate_contexts(1, 2, F(1, 3)))
    assert (( C((1, 2)),), (2,)) in ctx and len(ctx) == 5
    with pytest.raises(BudgetExceeded):
        list(W.enumerate_contexts(3, 12, F(1, 2), budget=1000))


def test_key_range_check():
    assert W.key_range_check(6, 6, F(1, 3))
    assert W.key_range_check(6, 2, F(1, 2)) and W.key_range_check(6, 18, F(1, 2))
    assert not W.key_range_check(6, 1, F(1, 2)) and not W.key_range_check(6, 19, F(1, 2))


# --------------------------------------------------------------- ratio scans

def brute_force(mech, n, B, delta, widen, rho=None):
    """Plain enumeration of min E[SW]/MSW over box profiles, plus bound violations."""
    best, bad = None, 0
    for K, theta in W.enumerate_contexts(n, B, delta):
        m = max(theta)
        if m == 0:
            continue
        boxes = [W.box(k, widen, B) for k in K]
        for v in itertools.product(*boxes):
            probs = mech.alloc(v)
            r = sum(p * t for p, t in zip(probs, theta)) / m
            if best is None or r < best:
                best = r
            if rho is not None and r < rho:
                bad += 1
    return best, bad


@pytest.mark.parametrize("backend", ["numba", "numpy", "python"])
@pytest.mark.parametrize("kind,tie,widen,n,B", [
    ("opt", "lex", 0, 2, 6), ("2p", "lex", 1, 2, 6), ("2p", "random", 0, 2, 6),
    ("opt", "lex", 0, 3, 3), ("random", "lex", 1, 3, 3)])
def test_kernel_matches_brute_force(backend, kind, tie, widen, n, B):
    d = F(1, 2)
    mech = make_mechanism(kind, n, d, tie)
    rep = W.worst_case_ratio(mech, n, B, d, strategies=f"box{widen}", backend=backend)
    best, _ = brute_force(mech, n, B, d, widen)
    assert rep.ratio == best
    assert W.evaluate_ratio(mech, rep.witness_context, rep.witness_profile) == rep.ratio


@pytest.mark.parametrize("backend", ["numba", "numpy"])
def test_violation_counts_match_brute_force(backend):
    d = F(1, 3)
    mech = make_mechanism("2p", 2, d, "lex")
    rho = F(1, 2)
    sets = W.interval_sets(5, d)
    res, _ = W._scan(mech, 2, 5, sets, W._full_kprof(len(sets), 2),
                     [[list(W.box(K, 1, 5)) for K in sets]] * 2, 2, 1, 0, backend, 1)
    _, bad = brute_force(mech, 2, 5, d, 1, rho)
    assert res.violations == bad > 0


def test_chunked_scan_is_schedule_independent():
    d = F(1, 2)
    a = W.worst_case_ratio("opt", 2, 8, d, strategies="box0", chunks=1)
    b = W.worst_case_ratio("opt", 2, 8, d, strategies="box0", chunks=7)
    assert (a.ratio, a.witness_context, a.witness_profile) == (b.ratio, b.witness_context, b.witness_profile)


def test_random_assignment_ratio_is_one_over_n():
    for n, B in ((2, 5), (3, 3)):
        rep = W.worst_case_ratio("random", n, B, F(1, 2))
        assert rep.ratio == F(1, n)


def test_uded_ratio_witness_is_undominated():
    d = F(1, 2)
    rep = W.worst_case_ratio("2p", 2, 8, d)
    M = W.tabulate(make_mechanism("2p", 2), 2, 8)
    for i, (K, b) in enumerate(zip(rep.witness_context.K, rep.witness_profile)):
        assert b in uded(M, i, K)
    assert W.evaluate_ratio("2p", rep.witness_context, rep.witness_profile) == rep.ratio


def test_verify_positive_small():
    for kind, tie in (("opt", "lex"), ("2p", "lex"), ("2p", "random")):
        for d in (F(1, 3), F(1, 2)):
            assert W.verify_positive_theorem(kind, 2, 8, d, tie=tie).passed
    with pytest.raises(Exception):
        W.verify_positive_theorem("random", 2, 8, F(1, 2))


def test_random_tie_bound_needs_exact_box():
    # on the +-1 box the multiplicative bound fails: a player known to value 0 bids 1
    d = F(1, 3)
    mech = make_mechanism("2p", 2, d, "random")
    sets = W.interval_sets(6, d)
    alpha, beta, gamma, _ = W.positive_bound(mech, 2, d)
    res, _ = W._scan(mech, 2, 6, sets, W._full_kprof(len(sets), 2),
                     [[list(W.box(K, 1, 6)) for K in sets]] * 2, alpha, beta, gamma, None, 1)
    assert res.violations > 0


# ------------------------------------------------------------ constructions

def test_theorem35_construction_example():
    ctx = W.theorem35_construction(2, 10, F(1, 2))
    assert ctx.K == (C.interval(4, 10), C.interval(2, 6)) and ctx.theta == (10, 2)
    assert validate_context(ctx) == []
    assert len(set(ctx.K[0]) & set(ctx.K[1])) >= 2
    lit = W.theorem35_construction(2, 10, F(1, 2), y_rounding="floor")
    assert lit.K[1] == C((2, 3, 4)) and set(lit.K[0]) & set(lit.K[1]) == {4}
    with pytest.raises(HypothesisViolated):
        W.theorem35_construction(2, 9, F(1, 2))


@settings(max_examples=80)
@given(st.integers(2, 4), st.integers(5, 200), st.fractions(F(1, 20), F(19, 20), max_denominator=20))
def test_theorem35_construction_always_valid(n, B, d):
    if B < 5 / d:
        return
    ctx = W.theorem35_construction(n, B, d)
    assert validate_context(ctx) == []
    assert ctx.theta[0] == B
    x = F(B) / (1 + d)
    shared = set(ctx.K[0]) & set(ctx.K[1])
    assert {-(-(1 - d) * x // 1), -(-(1 - d) * x // 1) + 1} <= shared


def test_theorem1_construction_example():
    K_hat, K, theta = W.theorem1_construction(2, 10, F(1, 2))
    assert K_hat == (C((2, 3, 4)),) * 2 and K == (C.interval(5, 10), C((2, 3, 4)))
    assert theta == (10, 3)
    assert W.theorem1_bound(2, 10, F(1, 2)) == F(4, 5)
    with pytest.raises(HypothesisViolated):
        W.theorem1_construction(2, 2, F(1, 2))


def test_theorem1_audit_uniform_and_midpoint():
    rep = W.theorem1_audit(W.uniform_direct(2, 10, F(1, 2)), 2, 10, F(1, 2))
    assert rep.truthful and rep.claim1_holds and rep.ratio == F(13, 20) <= F(4, 5)
    M = W.midpoint_second_price_direct(2, 6, F(1, 2))
    with pytest.raises(W.NotTruthful) as info:
        W.theorem1_audit(M, 2, 6, F(1, 2))
    i, K, report, theta, others = info.value.witness
    s = M.labels[i].index(K)
    t = M.labels[i].index(report)
    assert not very_weakly_dominates(M, i, K, s, t).holds


# --------------------------------------------------------------------- sweep

def test_sweep_csv_and_svg(tmp_path):
    grid = [F(k, 20) for k in range(1, 20)]
    rows = W.sweep_rows([2], grid)
    assert len(rows) == 19
    path = tmp_path / "s.csv"
    W.write_sweep_csv(path, rows + W.sweep_rows([4], [F(1, 3)]))
    with open(path) as fh:
        data = list(csv.DictReader(fh))
    half = next(r for r in data if r["n"] == "2" and r["delta_exact"] == "1/2")
    assert half["bound_opt"] == "0.555556"
    cross = next(r for r in data if r["n"] == "4")
    assert cross["bound_2p_exact"] == cross["bound_random_exact"] == "1/4"
    for r in data:
        c = W.bound_curves(int(r["n"]), F(r["delta_exact"]))
        assert (F(r["bound_random_exact"]), F(r["bound_2p_exact"]), F(r["bound_opt_exact"])) == \
            (c.random, c.second_price, c.opt)
    svg = tmp_path / "s.svg"
    W.write_sweep_svg(svg, W.sweep_rows([2, 4], grid))
    assert svg.read_text().count("<polyline") == 6
    with pytest.raises(Exception):
        W.sweep_rows([2], [])
