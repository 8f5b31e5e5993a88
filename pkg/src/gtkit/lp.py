"""Linear programs with box-bounded variables and their solvers.

Two backends share one contract.  ``"simplex"`` is a dense two-phase tableau
simplex using Bland's smallest-index rule for both the entering and the
leaving variable, so it cannot cycle and its output is a deterministic vertex.
``"highs"`` hands the program to the HiGHS dual simplex through
``scipy.optimize.linprog`` and is used for programs too large for a dense
tableau.  ``"auto"`` picks the dense solver whenever the program is small.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import LPDefectError, ParameterError

TOL_FEAS = 1e-9
TOL_OBJ = 1e-9
TOL_PIVOT = 1e-11
RELATIONS = ("eq", "ge", "le")

# Largest (rows + variables) handled by the dense tableau under method="auto".
AUTO_SIMPLEX_LIMIT = 400
MAX_PIVOTS = 200_000


@dataclass(frozen=True)
class LinearProgram:
    """minimize objective @ x  s.t.  A[r] @ x (relations[r]) rhs[r],  lower <= x <= upper.

    ``A`` is kept as a CSR sparse matrix; every bound must be finite.
    """

    objective: np.ndarray
    A: sp.csr_array
    relations: tuple
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        k = c.shape[0]
        A = sp.csr_array(self.A, dtype=float) if sp.issparse(self.A) else sp.csr_array(np.asarray(self.A, dtype=float).reshape(-1, k))
        if A.shape[1] != k:
            raise ParameterError(f"constraint rows have {A.shape[1]} coefficients, expected {k}")
        m = A.shape[0]
        rels = tuple(self.relations)
        if len(rels) != m or any(r not in RELATIONS for r in rels):
            raise ParameterError("relations must be one of eq/ge/le per constraint row")
        b = np.asarray(self.rhs, dtype=float).reshape(-1)
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (k,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (k,)).copy()
        if b.shape[0] != m:
            raise ParameterError(f"{b.shape[0]} right-hand sides for {m} constraints")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ParameterError("all variable bounds must be finite")
        if np.any(lo > hi):
            raise ParameterError("lower bound exceeds upper bound")
        for name, val in (("objective", c), ("A", A), ("rhs", b), ("lower", lo), ("upper", hi), ("relations", rels)):
            object.__setattr__(self, name, val)

    @classmethod
    def from_rows(cls, objective, constraints, bounds):
        """Build from ``[(row, relation, rhs), ...]`` and ``[(lo, hi), ...]``."""
        objective = np.asarray(objective, dtype=float)
        k = objective.shape[0]
        rows, rels, rhs = [], [], []
        for row, rel, b in constraints:
            row = np.asarray(row, dtype=float)
            if row.shape != (k,):
                raise ParameterError(f"constraint row has {row.size} coefficients, expected {k}")
            rows.append(row)
            rels.append(rel)
            rhs.append(b)
        A = np.vstack(rows) if rows else np.zeros((0, k))
        if len(bounds) != k:
            raise ParameterError(f"{len(bounds)} bounds for {k} variables")
        lo, hi = zip(*bounds) if bounds else ((), ())
        return cls(objective, sp.csr_array(A), tuple(rels), np.asarray(rhs, dtype=float), np.asarray(lo), np.asarray(hi))

    @property
    def num_vars(self):
        return self.objective.shape[0]

    @property
    def num_constraints(self):
        return self.A.shape[0]

    @property
    def constraints(self):
        dense = self.A.toarray()
        return [(dense[r], self.relations[r], float(self.rhs[r])) for r in range(self.num_constraints)]

    def max_violation(self, x):
        """Largest constraint or bound violation at ``x``."""
        x = np.asarray(x, dtype=float)
        diff = self.A @ x - self.rhs
        rel = np.array(self.relations)
        row_viol = np.where(rel == "eq", np.abs(diff), np.where(rel == "ge", -diff, diff))
        viol = max(row_viol.max(initial=0.0), (self.lower - x).max(initial=0.0), (x - self.upper).max(initial=0.0))
        return max(0.0, float(viol))

    def dumps(self):
        """Human-readable dump of the program, one constraint per line."""
        def term_list(row):
            terms = [f"{v:+g} x{j}" for j, v in enumerate(row) if v != 0]
            return " ".join(terms) if terms else "0"

        sym = {"eq": "=", "ge": ">=", "le": "<="}
        lines = [f"minimize {term_list(self.objective)}", "subject to"]
        for row, rel, b in self.constraints:
            lines.append(f"  {term_list(row)} {sym[rel]} {b:g}")
        lines.append("bounds")
        for j, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            lines.append(f"  {lo:g} <= x{j} <= {hi:g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal" or "infeasible"
    values: np.ndarray = None
    objective_value: float = float("nan")

    @property
    def optimal(self):
        return self.status == "optimal"


def solve(lp, method="auto"):
    """Minimize ``lp``; returns an optimal vertex or reports infeasibility."""
    method = resolve_method(lp, method)
    if method == "highs":
        return _solve_highs(lp)
    x = _DenseSimplex(lp).run(phase_one_only=False)
    if x is None:
        return LpSolution("infeasible")
    return LpSolution("optimal", x, float(lp.objective @ x))


def check_feasibility(lp, method="auto"):
    """Any point satisfying the constraints of ``lp``, or ``None``."""
    method = resolve_method(lp, method)
    if method == "highs":
        zero = LinearProgram(np.zeros(lp.num_vars), lp.A, lp.relations, lp.rhs, lp.lower, lp.upper)
        sol = _solve_highs(zero)
        return sol.values if sol.optimal else None
    return _DenseSimplex(lp).run(phase_one_only=True)


def resolve_method(lp, method):
    """Backend name that ``method`` selects for ``lp``."""
    if method == "auto":
        small = lp.num_constraints + lp.num_vars <= AUTO_SIMPLEX_LIMIT
        return "simplex" if small else "highs"
    if method not in ("simplex", "highs"):
        raise ParameterError(f"unknown LP method {method!r}")
    return method


def _solve_highs(lp):
    sense = np.array(lp.relations)
    A = lp.A
    eq, ge, le = (sense == "eq"), (sense == "ge"), (sense == "le")
    A_ub = sp.vstack([A[le], -A[ge]]) if (le.any() or ge.any()) else None
    b_ub = np.concatenate([lp.rhs[le], -lp.rhs[ge]]) if A_ub is not None else None
    res = linprog(
        lp.objective,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A[eq] if eq.any() else None,
        b_eq=lp.rhs[eq] if eq.any() else None,
        bounds=np.column_stack([lp.lower, lp.upper]),
        method="highs-ds",
        options={"primal_feasibility_tolerance": TOL_FEAS, "dual_feasibility_tolerance": TOL_OBJ},
    )
    if res.status == 2:
        return LpSolution("infeasible")
    if res.status != 0:
        raise LPDefectError(f"HiGHS returned status {res.status}: {res.message}")
    x = np.clip(res.x, lp.lower, lp.upper)
    return LpSolution("optimal", x, float(lp.objective @ x))


class _DenseSimplex:
    """Two-phase tableau simplex on the standard form of a bounded LP.

    Variables are shifted to ``z = x - lower`` and every upper bound becomes an
    explicit row ``z_j + s_j = upper_j - lower_j``.  Rows are sign-normalized
    so the right-hand side is non-negative; rows without a usable +1 slack get
    an artificial variable.
    """

    def __init__(self, lp):
        self.lp = lp
        k = lp.num_vars
        A = lp.A.toarray()
        b = lp.rhs - A @ lp.lower
        width = lp.upper - lp.lower
        m = A.shape[0]

        n_slack = sum(r != "eq" for r in lp.relations) + k
        rows = m + k
        std = np.zeros((rows, k + n_slack))
        rhs = np.empty(rows)
        slack_col = np.full(rows, -1)
        s = k
        for r, rel in enumerate(lp.relations):
            std[r, :k] = A[r]
            rhs[r] = b[r]
            if rel != "eq":
                std[r, s] = 1.0 if rel == "le" else -1.0
                slack_col[r] = s
                s += 1
        for j in range(k):
            r = m + j
            std[r, j] = 1.0
            std[r, s] = 1.0
            rhs[r] = width[j]
            slack_col[r] = s
            s += 1

        neg = rhs < 0
        std[neg] *= -1
        rhs[neg] *= -1

        basis = np.full(rows, -1)
        needs_art = []
        for r in range(rows):
            sc = slack_col[r]
            if sc >= 0 and std[r, sc] > 0:
                basis[r] = sc
            else:
                needs_art.append(r)
        n_struct = std.shape[1]
        art = np.zeros((rows, len(needs_art)))
        for a, r in enumerate(needs_art):
            art[r, a] = 1.0
            basis[r] = n_struct + a

        self.k = k
        self.n_struct = n_struct
        self.std = std
        self.rhs_std = rhs
        self.tab = np.hstack([std, art, rhs[:, None]])
        self.basis = basis
        self.art_rows = needs_art
        self.scale = max(1.0, float(np.abs(rhs).max(initial=0.0)))

    def _pivot(self, r, j, cost):
        tab = self.tab
        tab[r] /= tab[r, j]
        col = tab[:, j].copy()
        col[r] = 0.0
        nz = np.nonzero(np.abs(col) > 0)[0]
        if nz.size:
            tab[nz] -= np.outer(col[nz], tab[r])
        cost -= cost[j] * tab[r]
        self.basis[r] = j

    def _iterate(self, cost, ncols):
        """Bland's-rule pivoting until no column in ``[0, ncols)`` improves."""
        for _ in range(MAX_PIVOTS):
            candidates = np.nonzero(cost[:ncols] < -TOL_OBJ)[0]
            if candidates.size == 0:
                return True
            j = candidates[0]
            col = self.tab[:, j]
            pos = np.nonzero(col > TOL_PIVOT)[0]
            if pos.size == 0:
                return False  # unbounded direction
            ratios = self.tab[pos, -1] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + TOL_PIVOT * max(1.0, abs(best))]
            r = ties[np.argmin(self.basis[ties])]
            self._pivot(r, j, cost)
        raise LPDefectError("simplex exceeded the pivot limit")

    def run(self, phase_one_only):
        n_art = len(self.art_rows)
        ncols_all = self.tab.shape[1] - 1
        if n_art:
            cost = np.zeros(ncols_all + 1)
            cost[self.n_struct:ncols_all] = 1.0
            for r in self.art_rows:
                cost -= self.tab[r]
            if not self._iterate(cost, ncols_all):
                raise LPDefectError("phase one reported an unbounded direction")
            if -cost[-1] > TOL_FEAS * self.scale:
                return None
            self._drive_out_artificials()
        if phase_one_only:
            return self._extract()

        # phase two on the structural columns only
        self.tab = np.hstack([self.tab[:, :self.n_struct], self.tab[:, -1:]])
        c_std = np.zeros(self.n_struct + 1)
        c_std[:self.k] = self.lp.objective
        cost = c_std.copy()
        for r, j in enumerate(self.basis):
            if cost[j] != 0:
                cost -= cost[j] * self.tab[r]
        if not self._iterate(cost, self.n_struct):
            raise LPDefectError("bounded program reported unbounded; check the model")
        return self._extract()

    def _drive_out_artificials(self):
        keep = np.ones(self.tab.shape[0], dtype=bool)
        for r in range(self.tab.shape[0]):
            if self.basis[r] < self.n_struct:
                continue
            row = self.tab[r, :self.n_struct]
            cand = np.nonzero(np.abs(row) > 1e-9)[0]
            if cand.size:
                dummy = np.zeros(self.tab.shape[1])
                self._pivot(r, cand[0], dummy)
            else:
                keep[r] = False  # redundant equality
        self.tab = self.tab[keep]
        self.basis = self.basis[keep]
        self.std = self.std[keep]
        self.rhs_std = self.rhs_std[keep]

    def _extract(self):
        basis = self.basis
        z = np.zeros(self.n_struct)
        structural = basis < self.n_struct
        z[basis[structural]] = self.tab[structural, -1]
        # refine basic values against the original standard form
        if structural.all():
            B = self.std[:, basis]
            try:
                zb = np.linalg.solve(B, self.rhs_std)
                if np.all(np.isfinite(zb)):
                    z = np.zeros(self.n_struct)
                    z[basis] = zb
            except np.linalg.LinAlgError:
                pass
        x = self.lp.lower + z[:self.k]
        return np.clip(x, self.lp.lower, self.lp.upper)
