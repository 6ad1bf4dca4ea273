import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from knightian.pricing import PriceExpression, UndecidableAtPrecision, sign_of


def test_canonical_form_merges_prime_logs():
    a = PriceExpression(0, [(1, 4)])
    b = PriceExpression(0, [(2, 2)])
    assert a == b
    assert PriceExpression(1, [(1, 6), (-1, 2), (-1, 3)]) == 1
    assert PriceExpression(0, [(1, F(3, 2))]).log_terms == ((F(-1), F(2)), (F(1), F(3)))


def test_exact_zero_and_signs():
    z = PriceExpression(0, [(1, 8)]) - 3 * PriceExpression(0, [(1, 2)])
    assert z.is_rational and z.sign() == 0
    assert PriceExpression(0, [(1, 2)]).sign() == 1
    assert PriceExpression(-1, [(1, 3)]).sign() == 1   # ln 3 > 1
    assert PriceExpression(-F(7, 10), [(1, 2)]).sign() == -1


def test_interval_encloses_float_value():
    e = PriceExpression(F(1, 3), [(F(32, 15), 2), (F(-1, 7), F(5, 3))])
    lo, hi = e.interval(80)
    exact = 1 / 3 + 32 / 15 * math.log(2) - math.log(5 / 3) / 7
    assert lo <= F(exact) + F(1, 10 ** 12) and F(exact) - F(1, 10 ** 12) <= hi
    assert hi - lo <= F(1, 2 ** 80)


def test_undecidable_at_tiny_cap():
    # |e| is about 1e-12, far below a 16-bit enclosure
    r = F(math.log(2)).limit_denominator(10 ** 6)
    e = PriceExpression(-r, [(1, 2)])
    with pytest.raises(UndecidableAtPrecision):
        e.sign(cap=16)
    assert e.sign(cap=256) in (-1, 1)


def test_product_of_logs_rejected():
    e = PriceExpression(0, [(1, 2)])
    with pytest.raises(TypeError):
        e * e


def test_json_round_trip():
    e = PriceExpression(F(2, 3), [(F(5, 4), 6)])
    assert PriceExpression.from_json(e.to_json()) == e


@settings(max_examples=60)
@given(st.fractions(-5, 5, max_denominator=20),
       st.lists(st.tuples(st.fractions(-3, 3, max_denominator=9),
                          st.integers(1, 40), st.integers(1, 40)), max_size=3))
def test_sign_matches_float(r, terms):
    e = PriceExpression(r, [(c, F(a, b)) for c, a, b in terms])
    val = float(r) + sum(float(c) * math.log(a / b) for c, a, b in terms)
    if abs(val) > 1e-9:
        assert sign_of(e) == (1 if val > 0 else -1)
    lo, hi = e.interval(64)
    assert float(lo) - 1e-9 <= val <= float(hi) + 1e-9
