from fractions import Fraction as F

import numpy as np
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from knightian.lp import linprog_exact


def test_small_optimum():
    # max 3x + 2y s.t. x + y <= 4, x + 3y <= 6, x <= 3
    res = linprog_exact([3, 2], [[1, 1], [1, 3], [1, 0]], [4, 6, 3])
    assert res.ok and res.value == 11 and res.x == [3, 1]


def test_infeasible_and_unbounded():
    assert linprog_exact([1], [[1]], [-1]).status == "infeasible"
    assert linprog_exact([1, 0], [[-1, 1]], [1]).status == "unbounded"


def test_equality_and_negative_rhs():
    # min x + y s.t. x + y = 2, -x <= -1/2
    res = linprog_exact([1, 1], [[-1, 0]], [F(-1, 2)], [[1, 1]], [2], maximize=False)
    assert res.ok and res.value == 2 and res.x[0] >= F(1, 2)


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook largest-coefficient rule
    c = [F(3, 4), -150, F(1, 50), -6]
    A = [[F(1, 4), -60, F(-1, 25), 9], [F(1, 2), -90, F(-1, 50), 3], [0, 0, 1, 0]]
    res = linprog_exact(c, A, [0, 0, 1])
    assert res.ok and res.value == F(1, 20)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_matches_scipy(n, m, data):
    ints = st.integers(-5, 5)
    c = [data.draw(ints) for _ in range(n)]
    A = [[data.draw(ints) for _ in range(n)] for _ in range(m)]
    b = [data.draw(st.integers(-3, 8)) for _ in range(m)]
    A_eq = [[1] * n]
    b_eq = [data.draw(st.integers(1, 4))]
    ours = linprog_exact(c, A, b, A_eq, b_eq, maximize=True)
    ref = linprog(-np.array(c, float), A_ub=np.array(A, float), b_ub=np.array(b, float),
                  A_eq=np.array(A_eq, float), b_eq=np.array(b_eq, float), method="highs")
    if ref.status == 2:
        assert ours.status == "infeasible"
    else:
        assert ref.status == 0 and ours.ok
        assert abs(float(ours.value) + ref.fun) < 1e-7
        x = ours.x
        assert all(v >= 0 for v in x)
        assert all(sum(a * v for a, v in zip(row, x)) <= bb for row, bb in zip(A, b))
        assert sum(x) == b_eq[0]
