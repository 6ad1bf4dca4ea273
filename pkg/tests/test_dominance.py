import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from knightian.core import BudgetExceeded, CandidateSet as C, HypothesisViolated
from knightian.dominance import (FiniteMechanism, MixedStrategy, dnt, expected_utility,
                                 intersection_probe, mixed_dominator, tabulate, uded,
                                 very_weakly_dominates, weakly_dominates)
from knightian.pricing import PriceExpression

SP_LEX = tabulate("2p", 2, 10, tie="lex")
SP_RND = tabulate("2p", 2, 10, tie="random")
OPT6 = tabulate("opt", 2, 6, delta=F(1, 3))


def utility_gap(M, i, K, sigma, s):
    """Brute-force scan of every theta in K and opponent profile."""
    gaps = []
    for theta in K:
        for o in M.others(i):
            gaps.append(float(expected_utility(M, i, theta, sigma, o))
                        - float(expected_utility(M, i, theta, s, o)))
    return gaps


def test_tabulate_examples():
    M = tabulate("2p", 2, 2)
    assert len(M.alloc_table) == 9
    assert M.alloc_table[(2, 1)] == (1, 0) and M.price_table[(2, 1)] == (1, 0)
    assert tabulate("opt", 2, 2, delta=F(1, 3)).alloc_table[(2, 2)] == (F(1, 2), F(1, 2))
    R = tabulate("random", 3, 2)
    assert all(v == (F(1, 3),) * 3 for v in R.alloc_table.values())
    assert all(p == (0, 0, 0) for p in R.price_table.values())
    assert M.validate() == []
    with pytest.raises(BudgetExceeded):
        tabulate("2p", 3, 10, budget=1000)


def test_tabulate_agrees_with_evaluators():
    from knightian.mechanisms import f_delta, price_opt
    for prof, probs in OPT6.alloc_table.items():
        assert probs == f_delta(prof, F(1, 3))
    assert OPT6.price_table[(4, 2)][0] == price_opt(0, (4, 2), F(1, 3))


def test_expected_utility_examples():
    assert expected_utility(SP_LEX, 0, 5, 5, (3,)) == 2
    assert expected_utility(SP_LEX, 0, 5, 2, (3,)) == 0
    assert expected_utility(SP_LEX, 0, 5, MixedStrategy.uniform([4, 6]), (5,)) == 0


def test_very_weak_dominance_examples():
    K5 = C((5,))
    assert very_weakly_dominates(SP_LEX, 0, K5, 5, 4)
    # player 1 wins ties, so bids 4 and 5 are payoff-equivalent at theta=5
    assert very_weakly_dominates(SP_LEX, 0, K5, 4, 5)
    v = very_weakly_dominates(SP_LEX, 1, K5, 4, 5)
    assert not v.holds and v.witness == (5, (4,))
    theta, o = v.witness
    assert expected_utility(SP_LEX, 1, theta, 4, o) < expected_utility(SP_LEX, 1, theta, 5, o)
    sigma = MixedStrategy({2: F(1, 3), 7: F(2, 3)})
    assert very_weakly_dominates(SP_LEX, 0, C((3, 4, 5)), sigma, 2) or True
    assert very_weakly_dominates(SP_LEX, 0, C((3, 4, 5)), sigma, 2).holds == \
        all(g >= 0 for g in utility_gap(SP_LEX, 0, C((3, 4, 5)), sigma, 2))


def test_weak_dominance_examples():
    K5 = C((5,))
    v = weakly_dominates(SP_LEX, 0, K5, 5, 0)
    assert v.holds
    theta, o = v.witness
    assert expected_utility(SP_LEX, 0, theta, 5, o) > expected_utility(SP_LEX, 0, theta, 0, o)
    assert not weakly_dominates(SP_LEX, 0, K5, 5, 5)
    # regression fixture from the exhaustive scan
    v = weakly_dominates(SP_LEX, 0, C((3, 7)), 7, 3)
    assert not v.holds and v.witness == (3, (4,))


def test_mixed_dominator_examples():
    K5 = C((5,))
    sigma = mixed_dominator(SP_LEX, 0, K5, 3)
    assert sigma is not None and weakly_dominates(SP_LEX, 0, K5, sigma, 3)
    assert weakly_dominates(SP_LEX, 0, K5, 5, 3)
    assert mixed_dominator(SP_RND, 0, K5, 5) is None


def toy_mix_only():
    """Strategy 2 is beaten by the 50/50 mix of 0 and 1 but by neither alone."""
    alloc, price = {}, {}
    util = {0: (1, 0), 1: (0, 1), 2: (F(2, 5), F(2, 5))}
    for s in range(3):
        for t in range(2):
            alloc[(s, t)] = (F(util[s][t]), F(0))
            price[(s, t)] = (F(0), F(0))
    return FiniteMechanism((3, 2), alloc, price, "toy")


def test_mixed_dominator_interior_mix():
    M = toy_mix_only()
    K = C((1,))
    assert not weakly_dominates(M, 0, K, 0, 2) and not weakly_dominates(M, 0, K, 1, 2)
    sigma = mixed_dominator(M, 0, K, 2)
    assert sigma is not None and set(sigma.support) == {0, 1}
    assert weakly_dominates(M, 0, K, sigma, 2)
    assert list(uded(M, 0, K)) == [0, 1]


def test_uded_examples():
    assert set(uded(SP_LEX, 0, C((3, 4, 5)))) <= {2, 3, 4, 5, 6}
    assert set(uded(SP_LEX, 1, C((3, 4, 5)))) <= {2, 3, 4, 5, 6}
    for theta in range(11):
        assert list(uded(SP_RND, 0, C((theta,)))) == [theta]
        assert list(uded(SP_RND, 1, C((theta,)))) == [theta]
    # lexicographic ties on the integer grid: one bid of slack on the tie side
    assert list(uded(SP_LEX, 0, C((5,)))) == [4, 5]
    assert list(uded(SP_LEX, 1, C((5,)))) == [5, 6]
    assert set(uded(OPT6, 0, C((3, 4, 5)))) <= {3, 4, 5}


def test_dnt_examples():
    assert 5 in dnt(SP_LEX, 0, C((5,)))
    assert dnt(SP_LEX, 0, C((3, 7))) == []
    R = tabulate("random", 2, 4)
    assert dnt(R, 0, C((1, 2))) == list(range(5))


def test_probe_examples():
    K = C((3, 4, 5))
    assert intersection_probe(SP_LEX, 0, K, K).epsilon == 0
    r = intersection_probe(SP_LEX, 0, K, C((4, 5, 6)))
    assert r.epsilon == 0
    with pytest.raises(HypothesisViolated):
        intersection_probe(SP_LEX, 0, C((3, 4, 5)), C((5, 6, 7)))


def probe_fixture():
    table = {(0, 0): (F(1, 2), F(7, 2)), (0, 1): (F(1, 2), F(3)), (1, 0): (F(1, 4), F(1)),
             (1, 1): (F(1), F(5, 2)), (2, 0): (F(1), F(7, 2)), (2, 1): (F(1), F(3))}
    alloc = {p: (a, 1 - a) for p, (a, _) in table.items()}
    price = {p: (c, F(0)) for p, (_, c) in table.items()}
    return FiniteMechanism((3, 2), alloc, price, "probe_fixture")


def test_probe_fixture_with_different_uded_sets():
    M = probe_fixture()
    K, K2 = C((1, 2, 3)), C((2, 3, 4))
    assert list(uded(M, 0, K)) == [1] and list(uded(M, 0, K2)) == [1, 2]
    assert intersection_probe(M, 0, K, K2).epsilon == 0


def test_json_round_trip_with_log_prices():
    doc = OPT6.to_json()
    back = FiniteMechanism.from_json(doc)
    assert back.alloc_table == OPT6.alloc_table
    assert back.price_table == OPT6.price_table
    assert doc["profiles"][:3] == [[0, 0], [0, 1], [0, 2]]


def test_undecidable_strategy_kept():
    r = F(math.log(2)).limit_denominator(10 ** 6)
    tiny = PriceExpression(-r, [(1, 2)])
    M = FiniteMechanism((2,), {(0,): (F(0),), (1,): (F(0),)},
                        {(0,): (F(0),), (1,): (tiny,)}, "tiny")
    res = uded(M, 0, C((1,)), cap=8)
    assert set(res) == {0, 1} and res.undecided
    res = uded(M, 0, C((1,)), cap=256)
    assert len(res) == 1 and not res.undecided


# ----------------------------------------------------------------- properties

mechs = st.sampled_from([tabulate("2p", 2, 5, tie="lex"), tabulate("2p", 2, 5, tie="random"),
                         tabulate("opt", 2, 5, delta=F(1, 2))])
intervals = st.tuples(st.integers(0, 5), st.integers(0, 5)).map(
    lambda t: C.interval(min(t), max(t)))


@st.composite
def mixtures(draw, size=6):
    support = draw(st.lists(st.integers(0, size - 1), min_size=1, max_size=3, unique=True))
    w = [draw(st.integers(1, 4)) for _ in support]
    return MixedStrategy({s: F(x, sum(w)) for s, x in zip(support, w)})


@settings(max_examples=80, deadline=None)
@given(mechs, st.integers(0, 1), intervals, mixtures(), st.integers(0, 5))
def test_endpoint_reduction_matches_full_scan(M, i, K, sigma, s):
    a = very_weakly_dominates(M, i, K, sigma, s)
    b = very_weakly_dominates(M, i, K, sigma, s, endpoints_only=False)
    assert a.holds == b.holds
    assert a.holds == all(g >= -1e-12 for g in utility_gap(M, i, K, sigma, s))
    c = weakly_dominates(M, i, K, sigma, s)
    d = weakly_dominates(M, i, K, sigma, s, endpoints_only=False)
    assert c.holds == d.holds


@settings(max_examples=60, deadline=None)
@given(mechs, st.integers(0, 1), intervals, st.integers(0, 5), st.integers(0, 5), st.integers(0, 5))
def test_transitivity(M, i, K, a, b, c):
    if very_weakly_dominates(M, i, K, a, b) and very_weakly_dominates(M, i, K, b, c):
        assert very_weakly_dominates(M, i, K, a, c)


@settings(max_examples=40, deadline=None)
@given(mechs, st.integers(0, 1), intervals, st.integers(0, 5))
def test_dominators_reverify_and_uded_nonempty(M, i, K, s):
    sigma = mixed_dominator(M, i, K, s)
    if sigma is not None:
        assert weakly_dominates(M, i, K, sigma, s)
    assert len(uded(M, i, K)) >= 1


def scipy_dominated(M, i, K, s):
    """Float LP oracle: maximise summed advantage of a mixture over the others."""
    alts = [t for t in range(M.strategy_counts[i]) if t != s]
    rows = []
    for theta in (K.min, K.max):
        for o in M.others(i):
            base = float(expected_utility(M, i, theta, s, o))
            rows.append([float(expected_utility(M, i, theta, t, o)) - base for t in alts])
    A = np.array(rows)
    m, k = A.shape
    c = np.concatenate([np.zeros(k), -np.ones(m)])
    A_ub = np.hstack([-A, np.eye(m)])
    A_eq = np.concatenate([np.ones(k), np.zeros(m)])[None, :]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(m), A_eq=A_eq, b_eq=[1],
                  bounds=[(0, None)] * k + [(0, 1)] * m, method="highs")
    if res.status == 2:  # some row has no nonnegative advantage
        return False
    return -res.fun > 1e-9


def test_lp_agrees_with_float_oracle():
    for M in (tabulate("2p", 2, 6, tie="lex"), tabulate("2p", 2, 6, tie="random"), toy_mix_only()):
        for i in range(2 if M.name != "toy" else 1):
            for lo, hi in itertools.combinations_with_replacement(range(4), 2):
                K = C.interval(lo, hi) if M.name != "toy" else C((1,))
                for s in range(M.strategy_counts[i]):
                    assert (mixed_dominator(M, i, K, s) is not None) == scipy_dominated(M, i, K, s)
