"""Dense two-phase simplex returning primal and dual optimal solutions.

The solver is deterministic: identical inputs produce identical pivot
sequences. Duals are read from the final basis and mapped back to the
original rows, both raw (signed, for duality checks) and normalized per row
sense (nonnegative multipliers for inequality rows).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-8
GAP_TOL = 1e-7
REFACTOR_EVERY = 50

LE, EQ, GE = "<=", "=", ">="


@dataclass
class LpProblem:
    sense: str                  # "max" | "min"
    c: np.ndarray
    A: np.ndarray
    row_senses: list[str]
    b: np.ndarray
    lower: np.ndarray           # per-variable lower bound, 0.0 or -inf
    row_labels: list[str]
    col_labels: list[str]

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        if self.sense not in ("max", "min"):
            raise ValueError(f"unknown objective sense {self.sense!r}")
        m, n = self.A.shape if self.A.ndim == 2 else (len(self.b), self.c.size)
        if self.A.shape != (m, n) or self.c.shape != (n,) or self.b.shape != (m,):
            raise ValueError(
                f"dimension mismatch: A {self.A.shape}, c {self.c.shape}, b {self.b.shape}"
            )
        if len(self.row_senses) != m or len(self.row_labels) != m:
            raise ValueError("row senses/labels must match the number of rows")
        if len(self.col_labels) != n or self.lower.shape != (n,):
            raise ValueError("column labels/lower bounds must match the number of columns")
        for s in self.row_senses:
            if s not in (LE, EQ, GE):
                raise ValueError(f"unknown row sense {s!r}")
        if len(set(self.row_labels)) != m or len(set(self.col_labels)) != n:
            raise ValueError("row and column labels must be unique")

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def num_cols(self) -> int:
        return self.A.shape[1]


@dataclass
class LpSolution:
    status: str                       # optimal | infeasible | unbounded
    x: np.ndarray | None = None
    y: np.ndarray | None = None       # normalized per row sense (ineq rows >= 0)
    y_raw: np.ndarray | None = None   # signed duals; b . y_raw = dual objective
    objective: float | None = None
    dual_objective: float | None = None
    primal_residual: float = 0.0
    dual_residual: float = 0.0
    slackness_residual: float = 0.0
    ray: np.ndarray | None = None         # unbounded direction, original variables
    certificate: np.ndarray | None = None  # phase-1 dual weights per original row
    iterations: int = 0


@dataclass
class StandardForm:
    """min c.x, A x = b with b >= 0, x >= 0, plus the exact inverse mapping."""

    problem: LpProblem
    obj_sign: float
    pos_col: np.ndarray
    neg_col: np.ndarray      # -1 where the variable was not split
    slack_col: np.ndarray    # -1 for equality rows
    slack_sign: np.ndarray   # +1 slack, -1 surplus, 0 none
    row_flip: np.ndarray

    def map_primal(self, x_std: np.ndarray) -> np.ndarray:
        x = x_std[self.pos_col].copy()
        split = self.neg_col >= 0
        x[split] -= x_std[self.neg_col[split]]
        return x

    def embed_primal(self, x: np.ndarray, orig: LpProblem) -> np.ndarray:
        out = np.zeros(self.problem.num_cols)
        out[self.pos_col] = np.maximum(x, 0.0)
        split = self.neg_col >= 0
        out[self.pos_col[split]] = np.maximum(x[split], 0.0)
        out[self.neg_col[split]] = np.maximum(-x[split], 0.0)
        resid = orig.b - orig.A @ x
        for i in range(orig.num_rows):
            if self.slack_col[i] >= 0:
                out[self.slack_col[i]] = self.slack_sign[i] * resid[i]
        return out

    def map_duals(self, y_std: np.ndarray, orig: LpProblem) -> tuple[np.ndarray, np.ndarray]:
        y_raw = self.obj_sign * self.row_flip * y_std
        norm = np.ones(orig.num_rows)
        for i, rs in enumerate(orig.row_senses):
            if rs == EQ:
                continue
            natural_le = orig.sense == "max"
            norm[i] = 1.0 if (rs == LE) == natural_le else -1.0
        return y_raw, norm * y_raw


def to_standard_form(p: LpProblem) -> tuple[LpProblem, StandardForm]:
    """Slack/surplus per inequality, split free variables, flip rows so b >= 0."""
    m, n = p.num_rows, p.num_cols
    obj_sign = 1.0 if p.sense == "min" else -1.0
    cols: list[np.ndarray] = []
    costs: list[float] = []
    labels: list[str] = []
    pos_col = np.zeros(n, dtype=int)
    neg_col = np.full(n, -1, dtype=int)
    for j in range(n):
        pos_col[j] = len(cols)
        cols.append(p.A[:, j].copy())
        costs.append(obj_sign * p.c[j])
        labels.append(p.col_labels[j])
        if np.isneginf(p.lower[j]):
            neg_col[j] = len(cols)
            cols.append(-p.A[:, j])
            costs.append(-obj_sign * p.c[j])
            labels.append(p.col_labels[j] + "__neg")
    slack_col = np.full(m, -1, dtype=int)
    slack_sign = np.zeros(m)
    for i, rs in enumerate(p.row_senses):
        if rs == EQ:
            continue
        slack_sign[i] = 1.0 if rs == LE else -1.0
        col = np.zeros(m)
        col[i] = slack_sign[i]
        slack_col[i] = len(cols)
        cols.append(col)
        costs.append(0.0)
        labels.append(f"__slack[{i}]")
    A = np.column_stack(cols) if cols else np.zeros((m, 0))
    b = p.b.copy()
    row_flip = np.ones(m)
    flip = b < 0
    row_flip[flip] = -1.0
    A[flip] *= -1.0
    b[flip] *= -1.0
    std = LpProblem(
        sense="min",
        c=np.array(costs),
        A=A,
        row_senses=[EQ] * m,
        b=b,
        lower=np.zeros(len(cols)),
        row_labels=list(p.row_labels),
        col_labels=labels,
    )
    return std, StandardForm(
        problem=std,
        obj_sign=obj_sign,
        pos_col=pos_col,
        neg_col=neg_col,
        slack_col=slack_col,
        slack_sign=slack_sign,
        row_flip=row_flip,
    )


class _Simplex:
    """Revised simplex with an explicit basis inverse and eta updates."""

    def __init__(self, A: np.ndarray, b: np.ndarray, feas_tol: float):
        self.A = A
        self.b = b
        self.m, self.n = A.shape
        self.feas_tol = feas_tol
        self.basis: np.ndarray = np.empty(0, dtype=int)
        self.B_inv: np.ndarray = np.empty((0, 0))
        self.bland = False
        self.degenerate_pivots = 0
        self.pivots = 0
        self.iterations = 0

    def set_basis(self, basis: np.ndarray) -> None:
        self.basis = basis.astype(int)
        self.refactorize()

    def refactorize(self) -> None:
        self.B_inv = np.linalg.inv(self.A[:, self.basis])

    def _pivot(self, leave_row: int, enter: int, d: np.ndarray) -> None:
        self.basis[leave_row] = enter
        piv = d[leave_row]
        row = self.B_inv[leave_row] / piv
        self.B_inv -= np.outer(d, row)
        self.B_inv[leave_row] = row
        self.pivots += 1
        if self.pivots % REFACTOR_EVERY == 0:
            self.refactorize()

    def run(self, c: np.ndarray, max_iter: int) -> tuple[str, int, np.ndarray | None]:
        """Minimize c.x from the current basis.

        Returns (status, entering_col, direction): status "optimal" or
        "unbounded"; for unbounded the entering column and basic direction
        describe the improving ray.
        """
        bland_after = 5 * (self.m + self.n)
        dual_tol = PIVOT_TOL * (1.0 + np.abs(c).max(initial=0.0))
        for _ in range(max_iter):
            self.iterations += 1
            x_B = self.B_inv @ self.b
            y = self.B_inv.T @ c[self.basis]
            rc = c - self.A.T @ y
            rc[self.basis] = 0.0
            if self.bland:
                candidates = np.where(rc < -dual_tol)[0]
                if candidates.size == 0:
                    return "optimal", -1, None
                enter = int(candidates[0])
            else:
                enter = int(np.argmin(rc))
                if rc[enter] >= -dual_tol:
                    return "optimal", -1, None
            d = self.B_inv @ self.A[:, enter]
            pos = np.where(d > PIVOT_TOL)[0]
            if pos.size == 0:
                return "unbounded", enter, d
            ratios = x_B[pos] / d[pos]
            theta = ratios.min()
            ties = pos[ratios <= theta + 1e-12 * (1.0 + abs(theta))]
            leave_row = int(ties[np.argmin(self.basis[ties])])
            if x_B[leave_row] <= self.feas_tol:
                self.degenerate_pivots += 1
                if self.degenerate_pivots > bland_after:
                    self.bland = True
            self._pivot(leave_row, enter, d)
        raise RuntimeError(f"simplex exceeded {max_iter} iterations")


def _solve_standard(std: LpProblem, feas_tol: float):
    """Two-phase simplex on a standard-form problem.

    Returns (status, x, y_std_full, cert, ray_std, kept_rows, iterations).
    y_std_full has one entry per original standard row; rows found redundant
    in phase 1 carry dual 0.
    """
    A, b, c = std.A, std.b, std.c
    m, n = A.shape
    max_iter = 5000 + 200 * (m + n)
    basis = np.full(m, -1, dtype=int)
    for j in range(n):
        col = A[:, j]
        nz = np.nonzero(col)[0]
        if nz.size == 1 and col[nz[0]] == 1.0 and basis[nz[0]] == -1 and c[j] == 0.0:
            basis[nz[0]] = j
    need_art = np.where(basis == -1)[0]
    n_work = n + need_art.size
    if need_art.size:
        A_work = np.hstack([A, np.zeros((m, need_art.size))])
        for k, i in enumerate(need_art):
            A_work[i, n + k] = 1.0
            basis[i] = n + k
    else:
        A_work = A
    sx = _Simplex(A_work, b, feas_tol)
    sx.set_basis(basis)

    kept = np.arange(m)
    if need_art.size:
        c1 = np.zeros(n_work)
        c1[n:] = 1.0
        status, _, _ = sx.run(c1, max_iter)
        if status != "optimal":  # pragma: no cover - phase 1 is always bounded
            raise RuntimeError("phase 1 reported unbounded")
        x_B = sx.B_inv @ b
        obj1 = c1[sx.basis] @ x_B
        if obj1 > feas_tol * (1.0 + np.abs(b).max(initial=0.0)):
            cert = sx.B_inv.T @ c1[sx.basis]
            return "infeasible", None, None, cert, None, kept, sx.iterations
        # Drive artificials out of the basis; rows that resist are redundant.
        redundant = []
        for row in range(m):
            if sx.basis[row] < n:
                continue
            tableau_row = sx.B_inv[row] @ A
            tableau_row[sx.basis[sx.basis < n]] = 0.0
            cands = np.where(np.abs(tableau_row) > PIVOT_TOL)[0]
            if cands.size:
                enter = int(cands[0])
                d = sx.B_inv @ A_work[:, enter]
                sx._pivot(row, enter, d)
            else:
                redundant.append(row)
        # Rebuild without artificial columns (and without redundant rows) for
        # phase 2.
        if redundant:
            kept = np.array([i for i in range(m) if i not in set(redundant)], dtype=int)
            A = A[kept]
            b = b[kept]
        sx2 = _Simplex(A, b, feas_tol)
        sx2.iterations = sx.iterations
        sx2.degenerate_pivots = sx.degenerate_pivots
        sx2.bland = sx.bland
        sx2.set_basis(sx.basis[kept])
        sx = sx2

    status, enter, d = sx.run(c, max_iter)
    if status == "unbounded":
        ray = np.zeros(n)
        ray[enter] = 1.0
        ray[sx.basis] = -d
        return "unbounded", None, None, None, ray, kept, sx.iterations
    x = np.zeros(n)
    x[sx.basis] = sx.B_inv @ sx.b
    np.maximum(x, 0.0, out=x)
    y_kept = sx.B_inv.T @ c[sx.basis]
    y_full = np.zeros(m)
    y_full[kept] = y_kept
    return "optimal", x, y_full, None, None, kept, sx.iterations


def _residuals(p: LpProblem, x: np.ndarray, y_raw: np.ndarray):
    Ax = p.A @ x
    prim = 0.0
    slack = 0.0
    for i, rs in enumerate(p.row_senses):
        gap = Ax[i] - p.b[i]
        if rs == LE:
            prim = max(prim, gap)
        elif rs == GE:
            prim = max(prim, -gap)
        else:
            prim = max(prim, abs(gap))
        slack = max(slack, abs(y_raw[i] * gap))
    nonneg = ~np.isneginf(p.lower)
    if nonneg.any():
        prim = max(prim, float(np.maximum(-x[nonneg], 0.0).max(initial=0.0)))
    rc = p.c - p.A.T @ y_raw
    dual = 0.0
    for j in range(p.num_cols):
        if np.isneginf(p.lower[j]):
            dual = max(dual, abs(rc[j]))
        else:
            viol = rc[j] if p.sense == "max" else -rc[j]
            dual = max(dual, viol)
            slack = max(slack, abs(x[j] * rc[j]))
    return float(prim), float(dual), float(slack)


def solve_lp(p: LpProblem, feas_tol: float = FEAS_TOL) -> LpSolution:
    """Solve to optimality, infeasibility (with certificate) or unboundedness."""
    std, rec = to_standard_form(p)
    status, x_std, y_std, cert, ray_std, kept, iters = _solve_standard(std, feas_tol)
    if status == "infeasible":
        cert_orig = rec.row_flip * cert
        return LpSolution(status="infeasible", certificate=cert_orig, iterations=iters)
    if status == "unbounded":
        ray = rec.map_primal(ray_std)
        return LpSolution(status="unbounded", ray=ray, iterations=iters)
    x = rec.map_primal(x_std)
    y_raw, y = rec.map_duals(y_std, p)
    objective = float(p.c @ x)
    dual_objective = float(p.b @ y_raw)
    prim, dual, slack = _residuals(p, x, y_raw)
    gap = abs(objective - dual_objective)
    if gap > GAP_TOL * (1.0 + abs(objective)):
        raise ArithmeticError(
            f"duality gap {gap:.3e} exceeds tolerance at objective {objective!r}"
        )
    return LpSolution(
        status="optimal",
        x=x,
        y=y,
        y_raw=y_raw,
        objective=objective,
        dual_objective=dual_objective,
        primal_residual=prim,
        dual_residual=dual,
        slackness_residual=slack,
        iterations=iters,
    )
