"""Dense linear-program representation and a two-phase simplex solver.

This is the single currency of all stability analysis and controller
synthesis in the package: every condition is assembled as rows of a
:class:`LinearProgram` and handed to :func:`solve`.

The solver works on the standard-form conversion (all variables
nonnegative after shifting, mirroring or splitting; slack, surplus and
artificial columns appended), runs phase 1 to minimize the artificial
infeasibility, then phase 2 on the real objective. Pivoting uses Dantzig's
rule with a deterministic tie-break and falls back to Bland's rule after a
run of degenerate pivots, which guarantees termination. Every feasible
answer is replayed against the original rows before it is returned.

Problem sizes here are tens of variables and hundreds of rows, so a dense
tableau is deliberate; there is no sparsity machinery.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

log = logging.getLogger("copos.lp")

RELATIONS = ("<=", ">=", "=")
SENSES = ("minimize", "maximize", "feasibility")

#: Default margin used to turn strict inequalities into closed ones.
DEFAULT_MARGIN = 1e-6

#: Default cap applied to Lyapunov-scale variables (certificates are
#: homogeneous, so capping loses no generality).
DEFAULT_Q_MAX = 1e6

_FEAS_TOL = 1e-9
_PIVOT_TOL = 1e-9
_DEGENERATE_RUN = 100
_MAX_ITER = 200_000


def strictify(relation: str, bound: float, margin: float = DEFAULT_MARGIN) -> tuple[str, float]:
    """Rewrite a strict elementwise inequality as a closed one with margin.

    ``a < b`` becomes ``a <= b - margin`` and ``a > b`` becomes
    ``a >= b + margin``; closed relations are not accepted.
    """
    if margin <= 0.0:
        raise ValueError(f"margin must be positive, got {margin!r}")
    if relation == "<":
        return "<=", bound - margin
    if relation == ">":
        return ">=", bound + margin
    raise ValueError(f"strictify expects '<' or '>', got {relation!r}")


@dataclass
class LpOutcome:
    """Solver verdict. ``status`` is one of optimal / infeasible / unbounded;
    the solution vector is present only when feasible, and ``violated``
    carries labels of rows that kept artificial residue when infeasible."""

    status: str
    x: Optional[np.ndarray] = None
    objective_value: Optional[float] = None
    violated: tuple[str, ...] = ()

    @property
    def is_feasible(self) -> bool:
        return self.status == "optimal"


class LinearProgram:
    """Mutable builder for a dense LP.

    Variables are indexed 0..n_vars-1 with per-variable (lower, upper)
    bounds, +-inf allowed. Constraints are (coefficients, relation, bound)
    rows with an optional label used in infeasibility diagnostics.
    """

    def __init__(self, n_vars: int, sense: str = "feasibility",
                 objective: Optional[Sequence[float]] = None):
        if n_vars <= 0:
            raise ValueError(f"n_vars must be positive, got {n_vars!r}")
        if sense not in SENSES:
            raise ValueError(f"sense must be one of {SENSES}, got {sense!r}")
        self.n_vars = n_vars
        self.sense = sense
        if objective is None:
            self.objective = np.zeros(n_vars)
        else:
            self.objective = np.asarray(objective, dtype=float)
            if self.objective.shape != (n_vars,):
                raise ValueError("objective length must equal n_vars")
            if not np.all(np.isfinite(self.objective)):
                raise ValueError("objective coefficients must be finite")
        self.rows: list[np.ndarray] = []
        self.rels: list[str] = []
        self.rhs: list[float] = []
        self.labels: list[str] = []
        self.lower = np.full(n_vars, -np.inf)
        self.upper = np.full(n_vars, np.inf)

    def add_constraint(self, coeffs: Sequence[float], relation: str, bound: float,
                       label: Optional[str] = None) -> None:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.n_vars,):
            raise ValueError(
                f"constraint has {coeffs.shape} coefficients, expected ({self.n_vars},)")
        if not np.all(np.isfinite(coeffs)) or not np.isfinite(bound):
            raise ValueError("constraint coefficients and bound must be finite")
        if relation not in RELATIONS:
            raise ValueError(
                f"relation must be one of {RELATIONS}, got {relation!r}; "
                "use strictify() for strict inequalities")
        self.rows.append(coeffs)
        self.rels.append(relation)
        self.rhs.append(float(bound))
        self.labels.append(label if label is not None else f"row{len(self.rows) - 1}")

    def set_bounds(self, index: int, lower: float, upper: float) -> None:
        if lower > upper:
            raise ValueError(f"lower bound {lower!r} exceeds upper bound {upper!r}")
        self.lower[index] = lower
        self.upper[index] = upper

    @property
    def n_constraints(self) -> int:
        return len(self.rows)


def lp_to_text(lp: LinearProgram) -> str:
    """Human-readable dump, one constraint per line, for external cross-checks."""
    parts = [f"# {lp.sense}, {lp.n_vars} variables, {lp.n_constraints} constraints"]
    if lp.sense != "feasibility":
        terms = " + ".join(f"{c:.12g}*x{j}" for j, c in enumerate(lp.objective) if c != 0.0)
        parts.append(f"{lp.sense}: {terms or '0'}")
    for j in range(lp.n_vars):
        parts.append(f"bound: {lp.lower[j]:.12g} <= x{j} <= {lp.upper[j]:.12g}")
    for row, rel, b, lab in zip(lp.rows, lp.rels, lp.rhs, lp.labels):
        terms = " + ".join(f"{c:.12g}*x{j}" for j, c in enumerate(row) if c != 0.0)
        parts.append(f"{lab}: {terms or '0'} {rel} {b:.12g}")
    return "\n".join(parts)


class _Tableau:
    """Primal simplex on a dense tableau in minimization form."""

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list[int], n_real: int):
        m, n = A.shape
        self.T = np.zeros((m + 1, n + 1))
        self.T[:m, :n] = A
        self.T[:m, -1] = b
        self.basis = basis
        self.m, self.n = m, n
        self.n_real = n_real  # columns eligible to enter (artificials excluded)

    def set_costs(self, c: np.ndarray) -> None:
        self.T[-1, :] = 0.0
        self.T[-1, :self.n] = c
        for r, j in enumerate(self.basis):
            cj = c[j]
            if cj != 0.0:
                self.T[-1, :] -= cj * self.T[r, :]

    def objective(self) -> float:
        return -float(self.T[-1, -1])

    def _entering(self, bland: bool) -> int:
        costs = self.T[-1, :self.n_real]
        if bland:
            idx = np.nonzero(costs < -_PIVOT_TOL)[0]
            return int(idx[0]) if idx.size else -1
        j = int(np.argmin(costs))
        return j if costs[j] < -_PIVOT_TOL else -1

    def _leaving(self, col: int) -> int:
        a = self.T[:self.m, col]
        b = self.T[:self.m, -1]
        best_ratio, best_row, best_var = None, -1, None
        for r in range(self.m):
            if a[r] > _PIVOT_TOL:
                ratio = b[r] / a[r]
                key = self.basis[r]
                if (best_ratio is None or ratio < best_ratio - 1e-12
                        or (abs(ratio - best_ratio) <= 1e-12 and key < best_var)):
                    best_ratio, best_row, best_var = ratio, r, key
        return best_row

    def _pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row, :] /= T[row, col]
        piv_row = T[row, :]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, piv_row)
        T[:, col] = 0.0
        T[row, col] = 1.0
        self.basis[row] = col

    def run(self) -> str:
        bland = False
        degenerate_run = 0
        last_obj = self.objective()
        for _ in range(_MAX_ITER):
            col = self._entering(bland)
            if col < 0:
                return "optimal"
            row = self._leaving(col)
            if row < 0:
                return "unbounded"
            self._pivot(row, col)
            obj = self.objective()
            if obj < last_obj - 1e-12:
                degenerate_run = 0
                bland = False
            else:
                degenerate_run += 1
                if degenerate_run >= _DEGENERATE_RUN:
                    bland = True  # anti-cycling: Bland's rule terminates finitely
            last_obj = obj
        raise RuntimeError("simplex iteration limit exceeded")


def _standardize(lp: LinearProgram):
    """Shift/mirror/split variables to the nonnegative orthant.

    Returns (col_map, offsets_applied_rows, rels, rhs, labels, cost_vector_fn)
    where col_map[j] describes how to rebuild x_j from standard-form columns.
    """
    col_map = []
    n_cols = 0
    extra_rows = []  # (var_index, upper_minus_lower) for finite two-sided bounds
    for j in range(lp.n_vars):
        lo, hi = lp.lower[j], lp.upper[j]
        if np.isfinite(lo):
            col_map.append(("shift", n_cols, lo))
            n_cols += 1
            if np.isfinite(hi):
                extra_rows.append((j, hi - lo))
        elif np.isfinite(hi):
            col_map.append(("mirror", n_cols, hi))
            n_cols += 1
        else:
            col_map.append(("split", n_cols, n_cols + 1))
            n_cols += 2
    return col_map, n_cols, extra_rows


def _transform_row(row: np.ndarray, col_map, n_cols: int) -> tuple[np.ndarray, float]:
    """Rewrite one original row in standard-form columns; returns (row', shift)
    where shift must be subtracted from the rhs."""
    out = np.zeros(n_cols)
    shift = 0.0
    for j, c in enumerate(row):
        if c == 0.0:
            continue
        kind = col_map[j]
        if kind[0] == "shift":
            out[kind[1]] += c
            shift += c * kind[2]
        elif kind[0] == "mirror":
            out[kind[1]] -= c
            shift += c * kind[2]
        else:
            out[kind[1]] += c
            out[kind[2]] -= c
    return out, shift


def _replay(lp: LinearProgram, x: np.ndarray, tol: float = _FEAS_TOL) -> list[str]:
    """Labels of original rows or bounds violated by x beyond a scaled tolerance."""
    bad = []
    for row, rel, b, lab in zip(lp.rows, lp.rels, lp.rhs, lp.labels):
        val = float(row @ x)
        scale = max(1.0, abs(b), float(np.abs(row * x).max(initial=0.0)))
        slack = val - b
        if rel == "<=" and slack > tol * scale:
            bad.append(lab)
        elif rel == ">=" and slack < -tol * scale:
            bad.append(lab)
        elif rel == "=" and abs(slack) > tol * scale:
            bad.append(lab)
    for j in range(lp.n_vars):
        scale = max(1.0, abs(x[j]))
        if x[j] < lp.lower[j] - tol * scale or x[j] > lp.upper[j] + tol * scale:
            bad.append(f"bound[x{j}]")
    return bad


def solve(lp: LinearProgram) -> LpOutcome:
    """Two-phase simplex solve; deterministic for identical input.

    Feasibility-sense programs stop after phase 1 and return the vertex
    found there. Infeasible and unbounded outcomes are reported as statuses,
    never raised; only malformed input raises.
    """
    col_map, n_cols, extra_rows = _standardize(lp)

    rows, rels, rhs, labels = [], [], [], []
    for row, rel, b, lab in zip(lp.rows, lp.rels, lp.rhs, lp.labels):
        r2, shift = _transform_row(row, col_map, n_cols)
        rows.append(r2)
        rels.append(rel)
        rhs.append(b - shift)
        labels.append(lab)
    for j, width in extra_rows:
        r2 = np.zeros(n_cols)
        r2[col_map[j][1]] = 1.0
        rows.append(r2)
        rels.append("<=")
        rhs.append(width)
        labels.append(f"bound[x{j}]")

    m = len(rows)
    if m == 0:
        # bounds only: any point in the box works; take the shifted origin
        x = np.array([_rebuild(col_map[j], np.zeros(n_cols)) for j in range(lp.n_vars)])
        return _finish(lp, x)

    A = np.vstack(rows)
    b = np.array(rhs)
    # normalize to b >= 0
    for i in range(m):
        if b[i] < 0.0:
            A[i] *= -1.0
            b[i] *= -1.0
            if rels[i] == "<=":
                rels[i] = ">="
            elif rels[i] == ">=":
                rels[i] = "<="

    n_slack = sum(1 for r in rels if r == "<=")
    n_surp = sum(1 for r in rels if r == ">=")
    n_art = sum(1 for r in rels if r in (">=", "="))
    n_total = n_cols + n_slack + n_surp + n_art
    big = np.zeros((m, n_total))
    big[:, :n_cols] = A
    basis = []
    art_rows = {}  # artificial column -> row
    s_i = n_cols
    t_i = n_cols + n_slack
    a_i = n_cols + n_slack + n_surp
    for i in range(m):
        if rels[i] == "<=":
            big[i, s_i] = 1.0
            basis.append(s_i)
            s_i += 1
        elif rels[i] == ">=":
            big[i, t_i] = -1.0
            big[i, a_i] = 1.0
            art_rows[a_i] = i
            basis.append(a_i)
            t_i += 1
            a_i += 1
        else:
            big[i, a_i] = 1.0
            art_rows[a_i] = i
            basis.append(a_i)
            a_i += 1

    art_start = n_cols + n_slack + n_surp
    tab = _Tableau(big, b, basis, n_real=art_start)

    # phase 1
    c1 = np.zeros(n_total)
    c1[art_start:] = 1.0
    tab.set_costs(c1)
    status = tab.run()
    if status != "optimal":  # pragma: no cover - phase 1 is always bounded below
        raise RuntimeError(f"phase 1 ended with status {status!r}")
    feas_scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if tab.objective() > _FEAS_TOL * feas_scale * 10.0 + 1e-12:
        violated = []
        for r, j in enumerate(tab.basis):
            if j >= art_start and tab.T[r, -1] > _FEAS_TOL * feas_scale:
                violated.append(labels[art_rows[j]])
        log.info("LP infeasible; %d rows retain artificial residue", len(violated))
        return LpOutcome(status="infeasible", violated=tuple(violated))

    # drive artificials out of the basis where possible
    for r in range(tab.m):
        j = tab.basis[r]
        if j >= art_start:
            cand = np.nonzero(np.abs(tab.T[r, :art_start]) > _PIVOT_TOL)[0]
            if cand.size:
                tab._pivot(r, int(cand[0]))

    # phase 2
    if lp.sense != "feasibility" and np.any(lp.objective != 0.0):
        sign = 1.0 if lp.sense == "minimize" else -1.0
        c2 = np.zeros(n_total)
        const = 0.0
        for j in range(lp.n_vars):
            cj = sign * lp.objective[j]
            if cj == 0.0:
                continue
            kind = col_map[j]
            if kind[0] == "shift":
                c2[kind[1]] += cj
                const += cj * kind[2]
            elif kind[0] == "mirror":
                c2[kind[1]] -= cj
                const += cj * kind[2]
            else:
                c2[kind[1]] += cj
                c2[kind[2]] -= cj
        tab.set_costs(c2)
        status = tab.run()
        if status == "unbounded":
            return LpOutcome(status="unbounded")

    xs = np.zeros(n_total)
    for r, j in enumerate(tab.basis):
        xs[j] = tab.T[r, -1]
    x = np.array([_rebuild(col_map[j], xs) for j in range(lp.n_vars)])
    return _finish(lp, x)


def _rebuild(kind, xs: np.ndarray) -> float:
    if kind[0] == "shift":
        return float(xs[kind[1]] + kind[2])
    if kind[0] == "mirror":
        return float(kind[2] - xs[kind[1]])
    return float(xs[kind[1]] - xs[kind[2]])


def _finish(lp: LinearProgram, x: np.ndarray) -> LpOutcome:
    bad = _replay(lp, x)
    if bad:  # pragma: no cover - defensive: replay failures demote, never lie
        log.warning("LP solution failed replay on rows: %s", bad)
        return LpOutcome(status="infeasible", violated=tuple(bad))
    value = float(lp.objective @ x) if lp.sense != "feasibility" else 0.0
    return LpOutcome(status="optimal", x=x, objective_value=value)
