"""Exact linear programming over the rationals.

Two-phase tableau simplex with Bland's anti-cycling rule on ``Fraction``
entries. Problems here are tiny (tens of rows), so clarity wins over speed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

Number = int | Fraction


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: list[Fraction] | None = None
    objective: Fraction | None = None

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"


def _pivot(rows: list[list[Fraction]], obj: list[Fraction], r: int, c: int) -> None:
    prow = rows[r]
    piv = prow[c]
    if piv != 1:
        rows[r] = prow = [v / piv for v in prow]
    nz = [(j, v) for j, v in enumerate(prow) if v]
    for k, row in enumerate(rows):
        if k != r:
            f = row[c]
            if f:
                for j, v in nz:
                    row[j] -= f * v
    f = obj[c]
    if f:
        for j, v in nz:
            obj[j] -= f * v


def _run(rows, obj, basis, allowed: int) -> str:
    """Minimise the objective row in place; columns >= ``allowed`` never enter."""
    while True:
        enter = next((j for j in range(allowed) if obj[j] < 0), None)
        if enter is None:
            return "optimal"
        best = None
        for r, row in enumerate(rows):
            a = row[enter]
            if a > 0:
                key = (row[-1] / a, basis[r])
                if best is None or key < best[0]:
                    best = (key, r)
        if best is None:
            return "unbounded"
        r = best[1]
        _pivot(rows, obj, r, enter)
        basis[r] = enter


def simplex(
    c: Sequence[Number], A: Sequence[Sequence[Number]], b: Sequence[Number]
) -> LPResult:
    """Minimise ``c @ x`` subject to ``A @ x == b`` and ``x >= 0``."""
    m, n = len(A), len(c)
    rows: list[list[Fraction]] = []
    for i in range(m):
        row = [Fraction(v) for v in A[i]] + [Fraction(b[i])]
        if row[-1] < 0:
            row = [-v for v in row]
        rows.append(row)
    # phase 1: artificial column per row, placed after the structural columns
    zero = Fraction(0)
    rows = [row[:n] + [Fraction(int(k == i)) for k in range(m)] + [row[n]] for i, row in enumerate(rows)]
    basis = [n + i for i in range(m)]
    obj = [zero] * n + [Fraction(1)] * m + [zero]
    for row in rows:
        obj = [o - v for o, v in zip(obj, row)]
    _run(rows, obj, basis, n + m)
    if -obj[-1] != 0:
        return LPResult("infeasible")
    # drive artificials out of the basis; drop redundant rows
    keep = []
    for r in range(len(rows)):
        if basis[r] >= n:
            col = next((j for j in range(n) if rows[r][j] != 0), None)
            if col is None:
                continue
            _pivot(rows, obj, r, col)
            basis[r] = col
        keep.append(r)
    rows = [rows[r][:n] + [rows[r][-1]] for r in keep]
    basis = [basis[r] for r in keep]
    # phase 2
    obj = [Fraction(v) for v in c] + [zero]
    for r, j in enumerate(basis):
        f = obj[j]
        if f:
            obj = [o - f * v for o, v in zip(obj, rows[r])]
    status = _run(rows, obj, basis, n)
    if status == "unbounded":
        return LPResult("unbounded")
    x = [zero] * n
    for r, j in enumerate(basis):
        x[j] = rows[r][-1]
    return LPResult("optimal", x, sum((Fraction(ci) * xi for ci, xi in zip(c, x)), zero))


class LinearProgram:
    """Small modelling layer: free or nonnegative variables, =, <=, >= rows."""

    def __init__(self) -> None:
        self._free: list[bool] = []
        self._rows: list[tuple[dict[int, Fraction], str, Fraction]] = []

    def var(self, free: bool = False) -> int:
        self._free.append(free)
        return len(self._free) - 1

    def vars(self, count: int, free: bool = False) -> list[int]:
        return [self.var(free) for _ in range(count)]

    def add(self, coeffs: Mapping[int, Number], sense: str, rhs: Number) -> None:
        if sense not in ("==", "<=", ">="):
            raise ValueError(sense)
        self._rows.append(({k: Fraction(v) for k, v in coeffs.items() if v}, sense, Fraction(rhs)))

    def solve(self, objective: Mapping[int, Number] | None = None) -> LPResult:
        """Minimise ``objective`` (feasibility only when None)."""
        cols: list[tuple[int, int]] = []  # (variable, sign)
        where: dict[int, list[int]] = {}
        for v, free in enumerate(self._free):
            where[v] = [len(cols)]
            cols.append((v, 1))
            if free:
                where[v].append(len(cols))
                cols.append((v, -1))
        n_struct = len(cols)
        n_slack = sum(1 for _, s, _ in self._rows if s != "==")
        A, b = [], []
        slack = n_struct
        for coeffs, sense, rhs in self._rows:
            row = [Fraction(0)] * (n_struct + n_slack)
            for v, a in coeffs.items():
                for col in where[v]:
                    row[col] = a * cols[col][1]
            if sense == "<=":
                row[slack] = Fraction(1)
                slack += 1
            elif sense == ">=":
                row[slack] = Fraction(-1)
                slack += 1
            A.append(row)
            b.append(rhs)
        c = [Fraction(0)] * (n_struct + n_slack)
        for v, a in (objective or {}).items():
            for col in where[v]:
                c[col] = Fraction(a) * cols[col][1]
        res = simplex(c, A, b)
        if res.x is None:
            return res
        values = [Fraction(0)] * len(self._free)
        for col, (v, sign) in enumerate(cols):
            values[v] += sign * res.x[col]
        return LPResult(res.status, values, res.objective)
