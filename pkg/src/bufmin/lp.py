"""Exact-rational linear programming via two-phase simplex.

Bland's anti-cycling rule throughout, so termination is guaranteed even on
degenerate instances. Every answer carries a certificate which is re-checked
post hoc in exact arithmetic:

  optimal    -> primal solution x plus dual vector y with A^T y <= c and
                c.x == b.y (strong duality; implies complementary slackness)
  infeasible -> Farkas vector y with y.A <= 0 and y.b > 0
  unbounded  -> ray d with A d == 0, d >= 0, c.d < 0

The solver works on the equality form  min c.x  s.t.  A x == b, x >= 0.
The LinearProgram builder below converts <=, >= and maximize problems.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .rational import Q, ZERO

Row = List[Q]


class LPError(Exception):
    pass


@dataclass
class LPResult:
    status: str                      # optimal | infeasible | unbounded
    x: Optional[List[Q]] = None
    objective: Optional[Q] = None
    dual: Optional[List[Q]] = None   # optimality certificate
    farkas: Optional[List[Q]] = None
    ray: Optional[List[Q]] = None


def _pivot(tab: List[Row], basis: List[int], row: int, col: int) -> None:
    inv = Q(1) / tab[row][col]
    tab[row] = [v * inv for v in tab[row]]
    prow = tab[row]
    for r in range(len(tab)):
        if r != row and tab[r][col] != 0:
            f = tab[r][col]
            tab[r] = [a - f * b for a, b in zip(tab[r], prow)]
    basis[row] = col


_STALL_LIMIT = 24  # degenerate pivots under Dantzig before falling back


def _run(tab: List[Row], basis: List[int], enter_limit: int, rhs: int):
    """Iterate to optimality; the cost row is tab[-1].

    Pivoting uses Dantzig's most-negative rule for speed but switches to
    Bland's rule after a run of degenerate pivots and stays there until the
    objective strictly improves, which rules out cycling: Bland never
    cycles, and the objective can only take finitely many values.
    """
    m = len(tab) - 1
    stalled = 0
    bland = False
    while True:
        cost = tab[m]
        enter = -1
        if bland or stalled >= _STALL_LIMIT:
            bland = True
            for j in range(enter_limit):
                if cost[j] < 0:
                    enter = j
                    break
        else:
            best_c = ZERO
            for j in range(enter_limit):
                if cost[j] < best_c:
                    best_c = cost[j]
                    enter = j
        if enter < 0:
            return "optimal", -1
        leave, best = -1, None
        for r in range(m):
            a = tab[r][enter]
            if a > 0:
                ratio = tab[r][rhs] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    best, leave = ratio, r
        if leave < 0:
            return "unbounded", enter
        if best == 0:
            stalled += 1
        else:
            stalled = 0
            bland = False
        _pivot(tab, basis, leave, enter)


def lp_solve_exact(A: Sequence[Sequence[Q]], b: Sequence[Q], c: Sequence[Q],
                   check: bool = True) -> LPResult:
    """Solve min c.x s.t. A x == b, x >= 0 exactly.

    Rows whose (sign-normalized) system contains a ready identity column --
    slack columns, typically -- use it as their starting basis; artificial
    variables are created only for the remaining rows, which keeps the
    tableau narrow. Duals are read off each row's probe column (its crash
    column or its artificial).
    """
    m, n = len(A), len(c)
    A0 = [list(map(Q, row)) for row in A]
    b0 = list(map(Q, b))
    c0 = list(map(Q, c))
    for row in A0:
        if len(row) != n:
            raise LPError("ragged constraint matrix")
    # flip rows to get rhs >= 0 so the starting basis is feasible
    flip = [Q(1) if b0[i] >= 0 else Q(-1) for i in range(m)]

    # crash basis: singleton +1 columns (one per row at most)
    col_count = [0] * n
    col_row = [-1] * n
    for i in range(m):
        for j in range(n):
            if A0[i][j] != 0:
                col_count[j] += 1
                col_row[j] = i
    init_col: List[Optional[int]] = [None] * m
    for j in range(n):
        if col_count[j] == 1:
            i = col_row[j]
            if init_col[i] is None and flip[i] * A0[i][j] == 1:
                init_col[i] = j
    art_of: Dict[int, int] = {}
    for i in range(m):
        if init_col[i] is None:
            art_of[i] = n + len(art_of)
    ncols = n + len(art_of)
    rhs = ncols

    tab: List[Row] = []
    for i in range(m):
        row = [flip[i] * v for v in A0[i]] + [ZERO] * len(art_of) \
            + [flip[i] * b0[i]]
        if i in art_of:
            row[art_of[i]] = Q(1)
        tab.append(row)
    basis = [init_col[i] if init_col[i] is not None else art_of[i]
             for i in range(m)]
    probe = [init_col[i] if init_col[i] is not None else art_of[i]
             for i in range(m)]

    if art_of:
        # phase 1: minimize the artificial sum, starting from its basis
        art_rows = sorted(art_of)
        cost1 = [ZERO] * (ncols + 1)
        for j in range(n, ncols):
            cost1[j] = Q(1)
        for r in art_rows:
            cost1 = [a - v for a, v in zip(cost1, tab[r])]
        tab.append(cost1)
        status, _ = _run(tab, basis, n, rhs)
        assert status == "optimal"
        if tab[m][rhs] < 0:  # -objective < 0: artificials cannot vanish
            y = []
            for i in range(m):
                p = probe[i]
                cp = Q(1) if p >= n else ZERO
                y.append(flip[i] * (cp - tab[m][p]))
            res = LPResult(status="infeasible", farkas=y)
            if check:
                _check_farkas(A0, b0, y)
            return res
        del tab[m]

    # pivot leftover artificials out; drop rows that became redundant
    drop = []
    for r in range(m):
        if basis[r] >= n:
            col = next((j for j in range(n) if tab[r][j] != 0), None)
            if col is None:
                drop.append(r)
            else:
                _pivot(tab, basis, r, col)
    for r in sorted(drop, reverse=True):
        del tab[r]
        del basis[r]
    mm = len(tab)

    # phase 2 cost row for the current basis
    cost2 = list(c0) + [ZERO] * len(art_of) + [ZERO]
    for r in range(mm):
        cb = cost2[basis[r]]
        if cb != 0:
            tab_r = tab[r]
            cost2 = [a - cb * v for a, v in zip(cost2, tab_r)]
    tab.append(cost2)
    status, enter = _run(tab, basis, n, rhs)  # artificials never re-enter
    if status == "unbounded":
        d = [ZERO] * n
        d[enter] = Q(1)
        for r in range(mm):
            if basis[r] < n:
                d[basis[r]] = -tab[r][enter]
        res = LPResult(status="unbounded", ray=d)
        if check:
            _check_ray(A0, c0, d)
        return res

    x = [ZERO] * n
    for r in range(mm):
        if basis[r] < n:
            x[basis[r]] = tab[r][rhs]
    obj = sum((c0[j] * x[j] for j in range(n) if x[j] != 0), ZERO)
    drop_set = set(drop)
    y = []
    for i in range(m):
        if i in drop_set:
            y.append(ZERO)  # redundant row: any multiplier works; pick 0
        else:
            p = probe[i]
            cp = c0[p] if p < n else ZERO
            y.append(flip[i] * (cp - tab[mm][p]))
    res = LPResult(status="optimal", x=x, objective=obj, dual=y)
    if check:
        _check_optimal(A0, b0, c0, x, y, obj)
    return res


def _dot(u: Sequence[Q], v: Sequence[Q]) -> Q:
    return sum((a * b for a, b in zip(u, v)), ZERO)


def _check_optimal(A, b, c, x, y, obj) -> None:
    if any(v < 0 for v in x):
        raise LPError("certificate check failed: x has negative entry")
    for i, row in enumerate(A):
        if _dot(row, x) != b[i]:
            raise LPError("certificate check failed: Ax != b")
    for j in range(len(c)):
        if sum(A[i][j] * y[i] for i in range(len(A))) > c[j]:
            raise LPError("certificate check failed: dual infeasible")
    if _dot(b, y) != obj:
        raise LPError("certificate check failed: duality gap")


def _check_farkas(A, b, y) -> None:
    n = len(A[0]) if A else 0
    for j in range(n):
        if sum(A[i][j] * y[i] for i in range(len(A))) > 0:
            raise LPError("Farkas check failed: y.A has positive entry")
    if _dot(b, y) <= 0:
        raise LPError("Farkas check failed: y.b <= 0")


def _check_ray(A, c, d) -> None:
    if any(v < 0 for v in d):
        raise LPError("ray check failed: negative entry")
    for row in A:
        if _dot(row, d) != 0:
            raise LPError("ray check failed: A d != 0")
    if _dot(c, d) >= 0:
        raise LPError("ray check failed: c.d >= 0")


# -- builder -------------------------------------------------------------

LE, GE, EQ = "<=", ">=", "=="


@dataclass
class LinearProgram:
    """Convenience layer: named nonnegative variables, mixed-sense rows."""

    _names: List[str] = field(default_factory=list)
    _index: Dict[str, int] = field(default_factory=dict)
    _rows: List[Tuple[Dict[int, Q], str, Q]] = field(default_factory=list)
    _objective: Dict[int, Q] = field(default_factory=dict)
    _sense: str = "min"

    def var(self, name: str) -> str:
        if name in self._index:
            raise LPError(f"duplicate variable {name}")
        self._index[name] = len(self._names)
        self._names.append(name)
        return name

    def add(self, coeffs: Dict[str, Q], sense: str, rhs) -> None:
        row = {self._index[k]: Q(v) for k, v in coeffs.items() if Q(v) != 0}
        self._rows.append((row, sense, Q(rhs)))

    def objective(self, coeffs: Dict[str, Q], sense: str = "min") -> None:
        self._objective = {self._index[k]: Q(v) for k, v in coeffs.items()}
        self._sense = sense

    def solve(self) -> LPResult:
        n = len(self._names)
        nslack = sum(1 for _, s, _ in self._rows if s != EQ)
        total = n + nslack
        A, b = [], []
        si = n
        for row, sense, rhs in self._rows:
            arow = [ZERO] * total
            for j, v in row.items():
                arow[j] = v
            if sense != EQ:
                arow[si] = Q(1) if sense == LE else Q(-1)
                si += 1
            A.append(arow)
            b.append(rhs)
        c = [ZERO] * total
        sign = Q(1) if self._sense == "min" else Q(-1)
        for j, v in self._objective.items():
            c[j] = sign * v
        res = lp_solve_exact(A, b, c)
        if res.status == "optimal":
            res.x = res.x[:n]
            if self._sense == "max":
                res.objective = -res.objective
        return res

    def value(self, res: LPResult, name: str) -> Q:
        return res.x[self._index[name]]
