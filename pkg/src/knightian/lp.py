"""Exact rational linear programming by the two-phase simplex method.

Pivoting follows Bland's rule (lowest-index entering and leaving variables),
which rules out cycling on degenerate problems.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: list[Fraction] = field(default_factory=list)
    value: Fraction | None = None

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


class _Tableau:
    def __init__(self, rows: list[list[Fraction]], basis: list[int]):
        self.rows = rows  # each row: coefficients ..., rhs
        self.basis = basis

    def pivot(self, r: int, col: int) -> None:
        row = self.rows[r]
        piv = row[col]
        if piv != ONE:
            inv = ONE / piv
            row = [v * inv if v else v for v in row]
            self.rows[r] = row
        nz = [j for j, v in enumerate(row) if v]
        for k, other in enumerate(self.rows):
            if k == r:
                continue
            f = other[col]
            if f:
                for j in nz:
                    other[j] -= f * row[j]
        self.basis[r] = col

    def reduced_costs(self, cost: Sequence[Fraction], ncols: int) -> list[Fraction]:
        # d_j = c_j - c_B B^-1 A_j ; positive entries improve a maximization
        d = [cost[j] if j < len(cost) else ZERO for j in range(ncols)]
        d.append(ZERO)
        for r, b in enumerate(self.basis):
            cb = cost[b] if b < len(cost) else ZERO
            if cb:
                for j, v in enumerate(self.rows[r]):
                    if v:
                        d[j] -= cb * v
        return d

    def run(self, cost: Sequence[Fraction], allowed: int) -> str:
        """Maximize ``cost`` over columns < ``allowed``; returns a status."""
        while True:
            d = self.reduced_costs(cost, allowed)
            entering = next((j for j in range(allowed) if d[j] > 0), None)
            if entering is None:
                return "optimal"
            best = None
            for r, row in enumerate(self.rows):
                a = row[entering]
                if a > 0:
                    ratio = row[-1] / a
                    key = (ratio, self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                return "unbounded"
            self.pivot(best[1], entering)


def linprog_exact(c: Sequence, A_ub: Sequence[Sequence] = (), b_ub: Sequence = (),
                  A_eq: Sequence[Sequence] = (), b_eq: Sequence = (),
                  maximize: bool = True) -> LPResult:
    """Optimize ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x == b_eq``, ``x >= 0``."""
    n = len(c)
    cost = [Fraction(v) for v in c]
    if not maximize:
        cost = [-v for v in cost]
    m_ub, m_eq = len(A_ub), len(A_eq)
    n_slack = m_ub
    # artificial columns are appended after structural and slack columns
    rows: list[list[Fraction]] = []
    basis: list[int] = []
    needs_art: list[int] = []
    for k in range(m_ub):
        row = [Fraction(v) for v in A_ub[k]] + [ZERO] * n_slack
        row[n + k] = ONE
        rhs = Fraction(b_ub[k])
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
            needs_art.append(k)
            basis.append(-1)
        else:
            basis.append(n + k)
        rows.append(row + [rhs])
    for k in range(m_eq):
        row = [Fraction(v) for v in A_eq[k]] + [ZERO] * n_slack
        rhs = Fraction(b_eq[k])
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
        needs_art.append(m_ub + k)
        basis.append(-1)
        rows.append(row + [rhs])

    n_struct = n + n_slack
    n_art = len(needs_art)
    for row in rows:
        rhs = row.pop()
        row.extend([ZERO] * n_art)
        row.append(rhs)
    for a, r in enumerate(needs_art):
        rows[r][n_struct + a] = ONE
        basis[r] = n_struct + a
    tab = _Tableau(rows, basis)

    if n_art:
        phase1 = [ZERO] * n_struct + [-ONE] * n_art
        tab.run(phase1, n_struct + n_art)
        infeas = sum((tab.rows[r][-1] for r, b in enumerate(tab.basis) if b >= n_struct), ZERO)
        if infeas > 0:
            return LPResult("infeasible")
        # drive zero-valued artificials out of the basis, dropping redundant rows
        r = 0
        while r < len(tab.rows):
            if tab.basis[r] >= n_struct:
                col = next((j for j in range(n_struct) if tab.rows[r][j] != 0), None)
                if col is None:
                    del tab.rows[r]
                    del tab.basis[r]
                    continue
                tab.pivot(r, col)
            r += 1
        for row in tab.rows:
            rhs = row[-1]
            del row[n_struct:]
            row.append(rhs)

    status = tab.run(cost + [ZERO] * n_slack, n_struct)
    if status == "unbounded":
        return LPResult("unbounded")
    x = [ZERO] * n_struct
    for r, b in enumerate(tab.basis):
        x[b] = tab.rows[r][-1]
    value = sum((Fraction(c[j]) * x[j] for j in range(n)), ZERO)
    return LPResult("optimal", x[:n], value)
