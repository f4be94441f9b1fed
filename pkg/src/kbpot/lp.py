"""Bounded-variable primal simplex.

Problems have the form

    minimize    c @ v
    subject to  A[i] @ v  (>= | <=)  b[i]
                lower <= v <= upper          (infinite bounds allowed)

Each row gets a slack column (``A[i] @ v + s_i = b[i]``, with ``s_i >= 0``
for <= rows and ``s_i <= 0`` for >= rows). Rows whose slack cannot absorb
the starting residual receive an artificial variable, removed by a Phase I
that minimizes the sum of artificials.

Nonbasic variables start at 0 when 0 lies within their bounds (otherwise at
the nearer finite bound) and may sit strictly between bounds; such a
variable can enter moving in either direction. Variables that never enter
therefore stay at 0, which keeps trained parameter vectors sparse.

The basis inverse is kept explicitly as a dense matrix, updated by
elementary row operations and refactorized periodically.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import MalformedInstance

GE = ">="
LE = "<="

_PIVOT_TOL = 1e-9
_DEGENERATE_STEP = 1e-12
_REFACTOR_EVERY = 64


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"


@dataclass(frozen=True, eq=False)
class LpInstance:
    """An LP in row form. ``matrix`` is (n_constraints, n_vars) CSR."""

    n_vars: int
    objective: np.ndarray
    matrix: sp.csr_matrix
    relations: tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        n = int(self.n_vars)
        c = np.asarray(self.objective, dtype=np.float64)
        A = sp.csr_matrix(self.matrix, dtype=np.float64)
        if A.shape[0] == 0:
            A = sp.csr_matrix((0, n))
        b = np.asarray(self.rhs, dtype=np.float64).reshape(-1)
        lo = np.broadcast_to(np.asarray(self.lower, dtype=np.float64), (n,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=np.float64), (n,)).copy()
        rel = tuple(self.relations)
        if c.shape != (n,):
            raise MalformedInstance(f"objective has shape {c.shape}, expected ({n},)")
        if A.shape[1] != n:
            raise MalformedInstance(f"constraint rows reference {A.shape[1]} variables, expected {n}")
        if not (A.shape[0] == b.size == len(rel)):
            raise MalformedInstance("constraint count, rhs and relations disagree")
        if any(r not in (GE, LE) for r in rel):
            raise MalformedInstance(f"relations must be {GE!r} or {LE!r}")
        if np.isnan(c).any() or np.isnan(b).any() or np.isnan(A.data).any():
            raise MalformedInstance("NaN in objective, rhs or coefficients")
        if not (np.isfinite(c).all() and np.isfinite(b).all() and np.isfinite(A.data).all()):
            raise MalformedInstance("infinite objective, rhs or coefficient")
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise MalformedInstance("NaN bound")
        if np.any(lo > hi) or np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise MalformedInstance("contradictory variable bounds")
        for arr in (c, b, lo, hi):
            arr.setflags(write=False)
        object.__setattr__(self, "n_vars", n)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "relations", rel)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n_constraints(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_rows(
        cls,
        n_vars: int,
        objective,
        rows: Iterable[tuple[Sequence[int], Sequence[float], str, float]],
        lower,
        upper,
    ) -> "LpInstance":
        """Build from ``(indices, coefficients, relation, rhs)`` tuples."""
        indptr, indices, data, rel, rhs = [0], [], [], [], []
        for idx, vals, r, b in rows:
            idx = np.asarray(idx, dtype=np.int64)
            if idx.size and (idx.min() < 0 or idx.max() >= n_vars):
                raise MalformedInstance("constraint references a variable outside 0..n_vars-1")
            indices.extend(idx.tolist())
            data.extend(np.asarray(vals, dtype=np.float64).tolist())
            indptr.append(len(indices))
            rel.append(r)
            rhs.append(b)
        A = sp.csr_matrix((data, indices, indptr), shape=(len(rel), n_vars))
        A.sum_duplicates()
        return cls(n_vars, objective, A, tuple(rel), np.array(rhs, dtype=np.float64), lower, upper)

    @classmethod
    def from_dense(cls, objective, A_ge=None, b_ge=None, A_le=None, b_le=None, lower=0.0, upper=np.inf):
        c = np.asarray(objective, dtype=np.float64)
        n = c.size
        blocks, rel, rhs = [], [], []
        for A, b, r in ((A_ge, b_ge, GE), (A_le, b_le, LE)):
            if A is None:
                continue
            A = np.atleast_2d(np.asarray(A, dtype=np.float64))
            blocks.append(A)
            rel.extend([r] * A.shape[0])
            rhs.extend(np.asarray(b, dtype=np.float64).ravel().tolist())
        A = sp.csr_matrix(np.vstack(blocks)) if blocks else sp.csr_matrix((0, n))
        return cls(n, c, A, tuple(rel), np.array(rhs), lower, upper)

    def row_activity(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=np.float64)

    def max_violation(self, v: np.ndarray) -> float:
        """Largest constraint or bound violation of point ``v`` (0 if feasible)."""
        v = np.asarray(v, dtype=np.float64)
        act = self.row_activity(v)
        ge = np.array([r == GE for r in self.relations], dtype=bool)
        viol = np.where(ge, self.rhs - act, act - self.rhs)
        worst = float(viol.max()) if viol.size else 0.0
        worst = max(worst, float(np.max(self.lower - v, initial=0.0)), float(np.max(v - self.upper, initial=0.0)))
        return max(worst, 0.0)


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: Status
    values: np.ndarray
    objective_value: float
    iterations: int
    phase1_iterations: int = 0
    pivots: tuple[tuple[int, int], ...] = field(default=(), repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass(frozen=True)
class SolveOptions:
    feas_tol: float = 1e-7
    opt_tol: float = 1e-9
    max_iters: int | None = None  # default 50 * (n_vars + n_constraints)
    phase1: str = "artificial"  # or "composite"


class _Simplex:
    def __init__(self, lp: LpInstance, options: SolveOptions):
        self.opt = options
        n, m = lp.n_vars, lp.n_constraints
        self.n, self.m = n, m
        self.b = lp.rhs.copy()

        lo_s = np.array([0.0 if r == LE else -np.inf for r in lp.relations])
        hi_s = np.array([np.inf if r == LE else 0.0 for r in lp.relations])
        self.lower = np.concatenate([lp.lower, lo_s])
        self.upper = np.concatenate([lp.upper, hi_s])

        x = np.clip(0.0, self.lower, self.upper)
        structural = sp.csc_matrix(lp.matrix)
        resid = self.b - structural @ x[:n]
        x[n:] = resid

        if options.phase1 == "composite":
            # all slacks basic, possibly out of bounds
            art_rows = np.zeros(0, dtype=np.int64)
        else:
            # artificial in every row whose slack cannot absorb the residual
            art_rows = np.flatnonzero((resid < lo_s) | (resid > hi_s))
            x[n + art_rows] = 0.0
        k = art_rows.size
        self.n_art = k
        basis_by_row = n + np.arange(m, dtype=np.int64)
        basis_by_row[art_rows] = n + m + np.arange(k)

        art_sign = np.where(resid[art_rows] > 0, 1.0, -1.0)
        art = sp.csc_matrix((art_sign, (art_rows, np.arange(k))), shape=(m, k))
        self.A = sp.hstack([structural, sp.identity(m, format="csc"), art], format="csc")
        self.At = self.A.T.tocsr()
        self.lower = np.concatenate([self.lower, np.zeros(k)])
        self.upper = np.concatenate([self.upper, np.full(k, np.inf)])
        x = np.concatenate([x, np.abs(resid[art_rows])])
        self.x = x
        self.basis = basis_by_row
        self.is_basic = np.zeros(n + m + k, dtype=bool)
        self.is_basic[basis_by_row] = True
        self.iterations = 0
        self.pivots: list[tuple[int, int]] = []
        self.degenerate_run = 0
        self.bland_after = 3 * (n + m)
        self.refactor()

    def refactor(self):
        m = self.m
        if m == 0:
            self.Binv = np.zeros((0, 0))
            return
        B = self.A[:, self.basis].toarray()
        self.Binv = np.linalg.inv(B)
        xn = np.where(self.is_basic, 0.0, self.x)
        self.x[self.basis] = self.Binv @ (self.b - self.A @ xn)
        self.since_refactor = 0

    def column(self, q: int) -> np.ndarray:
        start, stop = self.A.indptr[q], self.A.indptr[q + 1]
        rows = self.A.indices[start:stop]
        return self.Binv[:, rows] @ self.A.data[start:stop]

    def infeasibility(self) -> float:
        xb = self.x[self.basis]
        lb, ub = self.lower[self.basis], self.upper[self.basis]
        return float(np.sum(np.maximum(lb - xb, 0.0)) + np.sum(np.maximum(xb - ub, 0.0)))

    def run(self, cost: np.ndarray | None, max_iters: int) -> Status:
        """Iterate to optimality of ``cost``.

        ``cost=None`` minimizes the sum of basic bound violations instead
        (composite Phase I): basics that start out of bounds may cross into
        their range, and the step continues while the total still decreases.
        """
        opt_tol = self.opt.opt_tol
        feas_tol = self.opt.feas_tol
        lower, upper = self.lower, self.upper
        movable = lower < upper
        composite = cost is None
        while True:
            if self.iterations >= max_iters:
                return Status.ITERATION_LIMIT
            if composite:
                xb = self.x[self.basis]
                below = xb < lower[self.basis] - feas_tol
                above = xb > upper[self.basis] + feas_tol
                if not (below.any() or above.any()):
                    return Status.OPTIMAL
                cost = np.zeros(self.x.size)
                cost[self.basis[below]] = -1.0
                cost[self.basis[above]] = 1.0
            y = cost[self.basis] @ self.Binv if self.m else np.zeros(0)
            d = cost - self.At @ y
            x = self.x
            can_inc = movable & ~self.is_basic & (x < upper - _DEGENERATE_STEP)
            can_dec = movable & ~self.is_basic & (x > lower + _DEGENERATE_STEP)
            score = np.where(can_inc & (d < -opt_tol), -d, 0.0)
            score = np.where(can_dec & (d > opt_tol), np.maximum(score, d), score)
            candidates = np.flatnonzero(score > 0.0)
            if candidates.size == 0:
                return Status.OPTIMAL

            bland = self.degenerate_run >= self.bland_after
            if bland:
                q = int(candidates[0])
            else:
                best = score[candidates].max()
                q = int(candidates[np.argmax(score[candidates] >= best - opt_tol)])
            direction = 1.0 if d[q] < 0 else -1.0

            alpha = self.column(q) if self.m else np.zeros(0)
            own = (upper[q] - x[q]) if direction > 0 else (x[q] - lower[q])
            rate = -direction * alpha  # d x_B / d t
            xb = x[self.basis]
            lb, ub = lower[self.basis], upper[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                t_dec = np.where((rate < -_PIVOT_TOL) & np.isfinite(lb), (xb - lb) / -rate, np.inf)
                t_inc = np.where((rate > _PIVOT_TOL) & np.isfinite(ub), (ub - xb) / rate, np.inf)
                if composite:
                    # an infeasible basic moving toward its range: the near
                    # bound is a breakpoint, the far bound a hard limit
                    t_dec = np.where(below, np.inf, t_dec)
                    t_inc = np.where(above, np.inf, t_inc)
            ratios = np.maximum(np.minimum(t_dec, t_inc), 0.0)
            t_basic = ratios.min() if ratios.size else np.inf
            if composite:
                step_bp, row_bp = self._breakpoint(rate, xb, lb, ub, below, above, score[q], min(own, t_basic))
                if row_bp >= 0:
                    t_basic, ratios = step_bp, np.full_like(ratios, np.inf)
                    ratios[row_bp] = step_bp

            if own <= t_basic:
                if not np.isfinite(own):
                    return Status.UNBOUNDED
                step, leave_row = own, -1
            else:
                step = t_basic
                tied = np.flatnonzero(ratios <= t_basic + _DEGENERATE_STEP)
                if bland:
                    leave_row = int(tied[np.argmin(self.basis[tied])])
                else:
                    # largest pivot magnitude, then lowest variable index
                    mags = np.abs(alpha[tied])
                    leave_row = int(tied[np.lexsort((self.basis[tied], -mags))[0]])

            self.iterations += 1
            self.degenerate_run = self.degenerate_run + 1 if step <= _DEGENERATE_STEP else 0

            x[q] += direction * step
            if self.m:
                x[self.basis] = xb + rate * step
            if leave_row < 0:
                x[q] = upper[q] if direction > 0 else lower[q]
                self.pivots.append((q, -1))
                continue

            leaving = int(self.basis[leave_row])
            if composite and (below[leave_row] or above[leave_row]):
                v = x[leaving]
                x[leaving] = lb[leave_row] if abs(v - lb[leave_row]) <= abs(v - ub[leave_row]) else ub[leave_row]
            else:
                x[leaving] = lb[leave_row] if rate[leave_row] < 0 else ub[leave_row]
            self.pivots.append((q, leaving))
            self.basis[leave_row] = q
            self.is_basic[leaving] = False
            self.is_basic[q] = True

            pivot = alpha[leave_row]
            row = self.Binv[leave_row] / pivot
            self.Binv -= np.outer(alpha, row)
            self.Binv[leave_row] = row
            self.since_refactor += 1
            if self.since_refactor >= _REFACTOR_EVERY:
                self.refactor()


    @staticmethod
    def _breakpoint(rate, xb, lb, ub, below, above, slope0, limit):
        """First breakpoint before ``limit`` at which the Phase I slope turns >= 0.

        Returns (step, row) or (limit, -1) when the slope stays negative.
        """
        with np.errstate(divide="ignore", invalid="ignore"):
            t_below = np.where(below & (rate > _PIVOT_TOL), (lb - xb) / rate, np.inf)
            t_above = np.where(above & (rate < -_PIVOT_TOL), (xb - ub) / -rate, np.inf)
        t = np.maximum(np.minimum(t_below, t_above), 0.0)
        rows = np.flatnonzero(t < limit)
        if rows.size == 0:
            return limit, -1
        rows = rows[np.lexsort((rows, t[rows]))]
        slope = -slope0 + np.cumsum(np.abs(rate[rows]))
        stop = np.flatnonzero(slope >= 0.0)
        if stop.size == 0:
            return limit, -1
        r = int(rows[stop[0]])
        return float(t[r]), r


def solve(
    instance: LpInstance,
    feas_tol: float = 1e-7,
    opt_tol: float = 1e-9,
    max_iters: int | None = None,
    phase1: str = "artificial",
) -> LpSolution:
    """Minimize ``instance`` with the bounded-variable simplex method.

    ``phase1`` selects how a first feasible basis is found: ``"artificial"``
    adds one artificial variable per violated row and minimizes their sum;
    ``"composite"`` starts from the all-slack basis and minimizes the sum of
    bound violations directly, with a long-step ratio test.

    Returns an :class:`LpSolution`; infeasibility and unboundedness are
    reported through ``status`` rather than raised.
    """
    if phase1 not in ("artificial", "composite"):
        raise ValueError(f"phase1 must be 'artificial' or 'composite', not {phase1!r}")
    options = SolveOptions(feas_tol, opt_tol, max_iters, phase1)
    n, m = instance.n_vars, instance.n_constraints
    limit = max_iters if max_iters is not None else 50 * (n + m)
    simplex = _Simplex(instance, options)
    n_struct_slack = n + m
    phase1_iters = 0

    def finish(status: Status) -> LpSolution:
        v = np.clip(simplex.x[:n], instance.lower, instance.upper)
        return LpSolution(status, v, float(instance.objective @ v), simplex.iterations,
                          phase1_iters, tuple(simplex.pivots))

    if phase1 == "composite":
        status = simplex.run(None, limit)
        phase1_iters = simplex.iterations
        if status is Status.ITERATION_LIMIT:
            return finish(status)
        simplex.refactor()
        if simplex.infeasibility() > feas_tol:
            return finish(Status.INFEASIBLE)
    elif simplex.n_art:
        cost = np.zeros(n_struct_slack + simplex.n_art)
        cost[n_struct_slack:] = 1.0
        status = simplex.run(cost, limit)
        phase1_iters = simplex.iterations
        if status is Status.ITERATION_LIMIT:
            return finish(status)
        simplex.refactor()
        infeasibility = float(simplex.x[n_struct_slack:].sum())
        if infeasibility > feas_tol:
            return finish(Status.INFEASIBLE)
        # artificials are pinned at zero from here on
        simplex.x[n_struct_slack:][~simplex.is_basic[n_struct_slack:]] = 0.0
        simplex.upper[n_struct_slack:] = 0.0

    cost = np.zeros(n_struct_slack + simplex.n_art)
    cost[:n] = instance.objective
    status = simplex.run(cost, limit)
    if status is Status.OPTIMAL:
        simplex.refactor()
        v = np.clip(simplex.x[:n], instance.lower, instance.upper)
        if instance.max_violation(v) > feas_tol:
            # drift; one more pass from a fresh factorization
            status = simplex.run(cost, limit)
    return finish(status)


# --- fixed MPS dump ----------------------------------------------------------------


def _mps_number(v: float) -> str:
    """Shortest representation fitting the 12-character MPS value field."""
    v = float(v)
    s = repr(v)
    if s.endswith(".0"):
        s = s[:-2]
    if len(s) <= 12:
        return s
    for digits in range(12, 0, -1):
        s = f"{v:.{digits}g}"
        if len(s) <= 12:
            return s
    raise ValueError(f"cannot format {v} for fixed MPS")


def _mps_line(kind: str, name1: str, name2: str = "", value: float | None = None) -> str:
    line = f" {kind:<2} {name1:<8}  {name2:<8}"
    if value is not None:
        line += f"  {_mps_number(value):>12}"
    return line.rstrip()


def format_mps(instance: LpInstance, name: str = "KBPOT") -> str:
    """Fixed-format MPS text.

    Columns are named ``C0000001``.. in variable order and rows ``R0000001``..
    in constraint order; the objective row is ``COST``. Entries are written
    one per line, column by column in increasing row order.
    """
    n, m = instance.n_vars, instance.n_constraints
    if n > 9_999_999 or m > 9_999_999:
        raise ValueError("too many rows/columns for 8-character MPS names")
    col = [f"C{j + 1:07d}" for j in range(n)]
    row = [f"R{i + 1:07d}" for i in range(m)]
    out = [f"NAME          {name[:8]}", "ROWS", " N  COST"]
    for i, r in enumerate(instance.relations):
        out.append(f" {'G' if r == GE else 'L'}  {row[i]}")
    out.append("COLUMNS")
    A = sp.csc_matrix(instance.matrix)
    A.sort_indices()
    c = instance.objective
    for j in range(n):
        if c[j] != 0.0:
            out.append(_mps_line("", col[j], "COST", c[j]))
        for k in range(A.indptr[j], A.indptr[j + 1]):
            if A.data[k] != 0.0:
                out.append(_mps_line("", col[j], row[A.indices[k]], A.data[k]))
        if c[j] == 0.0 and A.indptr[j] == A.indptr[j + 1]:
            out.append(_mps_line("", col[j], "COST", 0.0))
    out.append("RHS")
    for i in range(m):
        if instance.rhs[i] != 0.0:
            out.append(_mps_line("", "RHS", row[i], instance.rhs[i]))
    out.append("BOUNDS")
    for j in range(n):
        lo, hi = instance.lower[j], instance.upper[j]
        if lo == -np.inf and hi == np.inf:
            out.append(_mps_line("FR", "BND", col[j]))
            continue
        if lo == -np.inf:
            out.append(_mps_line("MI", "BND", col[j]))
        elif lo == hi:
            out.append(_mps_line("FX", "BND", col[j], lo))
            continue
        elif lo != 0.0:
            out.append(_mps_line("LO", "BND", col[j], lo))
        if hi != np.inf:
            out.append(_mps_line("UP", "BND", col[j], hi))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def write_mps(instance: LpInstance, path: str | os.PathLike, name: str = "KBPOT") -> None:
    Path(path).write_text(format_mps(instance, name))
