"""Exhaustive welfare scan over (K profile, theta, strategy profile) triples.

All arithmetic is on int64: allocations are stored as per-profile numerators
over a per-profile denominator, so both the bound check and the running
minimum ratio are exact. The numba kernel is used unless
``KNIGHTIAN_DISABLE_NUMBA`` is set (or numba is missing), in which case a
vectorized numpy version computes the same result.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

DISABLE_ENV = "KNIGHTIAN_DISABLE_NUMBA"


def default_backend() -> str:
    if not HAVE_NUMBA or os.environ.get(DISABLE_ENV, "") not in ("", "0"):
        return "numpy"
    return "numba"


@dataclass
class ScanInput:
    num: np.ndarray      # (P, n) allocation numerators, row-major over bids
    den: np.ndarray      # (P,) positive denominators
    strides: np.ndarray  # (n,) row-major strides of the bid profile index
    lo: np.ndarray       # (m,) interval lower ends
    hi: np.ndarray       # (m,) interval upper ends
    allowed: np.ndarray  # (n, m, S) allowed bids per player and interval, padded
    count: np.ndarray    # (n, m) number of allowed bids
    kprof: np.ndarray    # (R, n) interval index per player for each K profile
    alpha: int
    beta: int
    gamma: int


@dataclass
class ScanResult:
    violations: int
    checked: int
    best_num: int        # minimum ratio is best_num / best_den (best_num < 0: nothing scanned)
    best_den: int
    best: np.ndarray     # (1 + 2n,) K-profile row, theta, bids
    first_violation: np.ndarray  # same layout, row -1 when none

    @property
    def ratio(self) -> Fraction | None:
        return None if self.best_num < 0 else Fraction(self.best_num, self.best_den)


def _scan_py(num, den, strides, lo, hi, allowed, count, kprof, alpha, beta, gamma, r0, r1):
    n = num.shape[1]
    best = np.full(1 + 2 * n, -1, dtype=np.int64)
    first = np.full(1 + 2 * n, -1, dtype=np.int64)
    th = np.zeros(n, dtype=np.int64)
    vi = np.zeros(n, dtype=np.int64)
    best_num = -1
    best_den = 1
    viol = 0
    checked = 0
    for r in range(r0, r1):
        for j in range(n):
            th[j] = lo[kprof[r, j]]
        while True:
            m = 0
            for j in range(n):
                if th[j] > m:
                    m = th[j]
            if m > 0:
                for j in range(n):
                    vi[j] = 0
                while True:
                    p = 0
                    for j in range(n):
                        p += allowed[j, kprof[r, j], vi[j]] * strides[j]
                    s = 0
                    for j in range(n):
                        s += th[j] * num[p, j]
                    d = den[p]
                    checked += 1
                    if alpha * s < (beta * m - gamma) * d:
                        viol += 1
                        if first[0] < 0:
                            first[0] = r
                            for j in range(n):
                                first[1 + j] = th[j]
                                first[1 + n + j] = allowed[j, kprof[r, j], vi[j]]
                    if best_num < 0 or s * best_den < best_num * (d * m):
                        best_num = s
                        best_den = d * m
                        best[0] = r
                        for j in range(n):
                            best[1 + j] = th[j]
                            best[1 + n + j] = allowed[j, kprof[r, j], vi[j]]
                    j = n - 1
                    while j >= 0:
                        vi[j] += 1
                        if vi[j] < count[j, kprof[r, j]]:
                            break
                        vi[j] = 0
                        j -= 1
                    if j < 0:
                        break
            j = n - 1
            while j >= 0:
                th[j] += 1
                if th[j] <= hi[kprof[r, j]]:
                    break
                th[j] = lo[kprof[r, j]]
                j -= 1
            if j < 0:
                break
    return viol, checked, best_num, best_den, best, first


_scan_numba = njit(cache=True)(_scan_py) if HAVE_NUMBA else None


def _scan_numpy(num, den, strides, lo, hi, allowed, count, kprof, alpha, beta, gamma, r0, r1):
    n = num.shape[1]
    best = np.full(1 + 2 * n, -1, dtype=np.int64)
    first = np.full(1 + 2 * n, -1, dtype=np.int64)
    best_frac = None
    viol = 0
    checked = 0
    for r in range(r0, r1):
        ks = kprof[r]
        thetas = np.stack(np.meshgrid(*[np.arange(lo[k], hi[k] + 1) for k in ks],
                                      indexing="ij"), -1).reshape(-1, n)
        bids = np.stack(np.meshgrid(*[allowed[j, k, :count[j, k]] for j, k in enumerate(ks)],
                                    indexing="ij"), -1).reshape(-1, n)
        m = thetas.max(axis=1)
        keep = m > 0
        thetas, m = thetas[keep], m[keep]
        if not len(thetas):
            continue
        p = bids @ strides
        s = thetas @ num[p].T               # (theta, bid profile)
        d = den[p][None, :]
        ok = alpha * s >= (beta * m[:, None] - gamma) * d
        checked += s.size
        bad = np.flatnonzero(~ok)
        if len(bad):
            viol += len(bad)
            if first[0] < 0:
                a, b = divmod(bad[0], s.shape[1])
                first[0] = r
                first[1:1 + n] = thetas[a]
                first[1 + n:] = bids[b]
        ratio = s / (d * m[:, None])
        lowest = ratio.min()
        near = np.flatnonzero(ratio.ravel() <= lowest * (1 + 1e-9) + 1e-300)
        for flat in near:  # exact tie-breaking in enumeration order
            a, b = divmod(flat, s.shape[1])
            frac = Fraction(int(s[a, b]), int(d[0, b] * m[a]))
            if best_frac is None or frac < best_frac:
                best_frac = frac
                best[0] = r
                best[1:1 + n] = thetas[a]
                best[1 + n:] = bids[b]
    if best_frac is None:
        return viol, checked, -1, 1, best, first
    bn, bd = _ratio_parts(best, num, den, strides, n)
    return viol, checked, bn, bd, best, first


def _ratio_parts(rec, num, den, strides, n):
    th = rec[1:1 + n]
    p = int(rec[1 + n:] @ strides)
    return int(th @ num[p]), int(den[p] * th.max())


def run_scan(inp: ScanInput, backend: str | None = None, rows: tuple[int, int] | None = None) -> ScanResult:
    """Scan K-profile rows ``rows = (start, stop)`` (default all) with ``backend``."""
    backend = backend or default_backend()
    r0, r1 = rows if rows is not None else (0, len(inp.kprof))
    args = (inp.num, inp.den, inp.strides, inp.lo, inp.hi, inp.allowed, inp.count, inp.kprof,
            np.int64(inp.alpha), np.int64(inp.beta), np.int64(inp.gamma), r0, r1)
    if backend == "numba":
        if _scan_numba is None:
            raise RuntimeError("numba is not installed")
        out = _scan_numba(*args)
    elif backend == "numpy":
        out = _scan_numpy(*args)
    elif backend == "python":
        out = _scan_py(*args)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    viol, checked, bn, bd, best, first = out
    return ScanResult(int(viol), int(checked), int(bn), int(bd), best, first)


def merge(results: list[ScanResult]) -> ScanResult:
    """Combine chunk results given in row order; ties keep the earlier witness."""
    viol = sum(r.violations for r in results)
    checked = sum(r.checked for r in results)
    best = None
    first = None
    for r in results:
        if first is None and r.first_violation[0] >= 0:
            first = r
        if r.best_num >= 0 and (best is None or
                                r.best_num * best.best_den < best.best_num * r.best_den):
            best = r
    base = results[0]
    return ScanResult(
        viol, checked,
        best.best_num if best else -1, best.best_den if best else 1,
        best.best if best else base.best,
        first.first_violation if first else base.first_violation,
    )
