"""LP-relaxation decoders for group testing.

Every program uses the variable order ``(x_1..x_n, eta_1..eta_T)``.  Tests
with a negative observed outcome contribute ``-eta_i + m_i . x = 0`` with
``0 <= eta_i <= dbar``; positive tests contribute ``eta_i + m_i . x >= 1``
with ``0 <= eta_i <= 1``.  The weight constraint ``sum_j x_j = dbar`` and
``0 <= x_j <= 1`` are always present.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import LPDefectError, ParameterError
from .lp import LinearProgram, check_feasibility, resolve_method as _resolve_method, solve
from .model import as_bits

TOL_INT = 1e-6

VARIANTS = ("full", "plus", "minus")


@dataclass(frozen=True)
class LpDecodeOutput:
    """Rounded estimate together with the raw LP solution.

    ``failed`` marks a decode failure (LiPo infeasible, or No-Un-LiPo found
    no acceptable weight); the estimate is then all zeros.
    """

    estimate: np.ndarray
    eta: np.ndarray
    fractional: np.ndarray
    integral: bool
    objective_value: float
    failed: bool = False
    dbar: Optional[int] = None


def round_solution(fractional, tol_int=TOL_INT):
    """Round at 0.5 (ties up); ``integral`` iff every entry is within tol of 0 or 1."""
    f = np.asarray(fractional, dtype=float)
    estimate = (f >= 0.5).astype(np.uint8)
    integral = bool(np.all(np.minimum(np.abs(f), np.abs(f - 1)) <= tol_int))
    return estimate, integral


def build_nolipo_lp(M, y_hat, dbar, variant="full"):
    """Program for a fixed assumed weight ``dbar``.

    ``variant="plus"`` keeps only the positive-test constraints and slacks,
    ``"minus"`` only the negative ones.  Dropped tests keep an ``eta``
    variable pinned to zero so the layout stays ``n + T``.
    """
    if variant not in VARIANTS:
        raise ParameterError(f"unknown variant {variant!r}")
    y_hat = as_bits(y_hat, M.T, name="result vector")
    T, n = M.shape
    if not 0 <= dbar <= n:
        raise ParameterError(f"need 0 <= dbar <= n, got {dbar}")

    pos = y_hat == 1
    keep = np.ones(T, dtype=bool)
    if variant == "plus":
        keep = pos.copy()
    elif variant == "minus":
        keep = ~pos

    rows = np.nonzero(keep)[0]
    pooled = sp.csr_array(M.dense[rows].astype(float))
    eta_coef = np.where(pos[rows], 1.0, -1.0)
    eta_block = sp.csr_array((eta_coef, (np.arange(rows.size), rows)), shape=(rows.size, T))
    weight_row = sp.csr_array(np.concatenate([np.ones(n), np.zeros(T)])[None, :])
    A = sp.vstack([sp.hstack([pooled, eta_block]), weight_row], format="csr")
    relations = tuple("ge" if p else "eq" for p in pos[rows]) + ("eq",)
    rhs = np.concatenate([np.where(pos[rows], 1.0, 0.0), [float(dbar)]])

    objective = np.concatenate([np.zeros(n), keep.astype(float)])
    lower = np.zeros(n + T)
    upper = np.concatenate([np.ones(n), np.where(pos, 1.0, float(dbar))])
    upper[n:][~keep] = 0.0
    return LinearProgram(objective, A, relations, rhs, lower, upper)


def truth_slack(M, y_hat, x):
    """Smallest feasible slack vector for a binary ``x``.

    eta_i = m_i . x on negative tests and max(1 - m_i . x, 0) on positive ones.
    """
    y_hat = as_bits(y_hat, M.T, name="result vector")
    load = M.dense.astype(np.int64) @ np.asarray(x, dtype=np.int64)
    return np.where(y_hat == 1, np.maximum(1 - load, 0), load)


def _reduced_program(M, y_hat, dbar, variant):
    """Equivalent program with the negative-test slacks substituted out.

    On a negative test eta_i = m_i . x exactly, and m_i . x <= sum_j x_j =
    dbar keeps its upper bound slack, so those slacks fold into the objective
    as sum_i m_i.  Only the positive tests keep a slack variable.
    """
    T, n = M.shape
    pos = y_hat == 1
    dense = M.dense
    x_cost = np.zeros(n)
    if variant in ("full", "minus"):
        x_cost = dense[~pos].sum(axis=0, dtype=np.int64).astype(float)
    pos_rows = np.nonzero(pos)[0] if variant in ("full", "plus") else np.zeros(0, dtype=np.int64)
    k = pos_rows.size
    A = sp.vstack([
        sp.hstack([sp.csr_array(dense[pos_rows].astype(float)), sp.eye_array(k, format="csr")]),
        sp.csr_array(np.concatenate([np.ones(n), np.zeros(k)])[None, :]),
    ], format="csr")
    relations = ("ge",) * k + ("eq",)
    rhs = np.concatenate([np.ones(k), [float(dbar)]])
    objective = np.concatenate([x_cost, np.ones(k)])
    return LinearProgram(objective, A, relations, rhs, np.zeros(n + k), np.ones(n + k)), pos_rows


def _decode(M, y_hat, dbar, variant, method):
    y_hat = as_bits(y_hat, M.T, name="result vector")
    T, n = M.shape
    lp = build_nolipo_lp(M, y_hat, dbar, variant)
    if _resolve_method(lp, method) == "highs":
        reduced, pos_rows = _reduced_program(M, y_hat, dbar, variant)
        sol = solve(reduced, "highs")
        if not sol.optimal:
            raise LPDefectError("No-LiPo program is infeasible, which its slack bounds rule out")
        x = sol.values[:n]
        eta = np.zeros(T)
        if variant in ("full", "minus"):
            neg = y_hat == 0
            eta[neg] = M.dense[neg].astype(float) @ x
        eta[pos_rows] = sol.values[n:]
        values = np.concatenate([x, eta])
    else:
        sol = solve(lp, "simplex")
        if not sol.optimal:
            raise LPDefectError("No-LiPo program is infeasible, which its slack bounds rule out")
        values = sol.values
    frac = values[:n]
    estimate, integral = round_solution(frac)
    return LpDecodeOutput(estimate, values[n:], frac, integral, float(lp.objective @ values), dbar=dbar)


def decode_nolipo(M, y_hat, d, method="auto"):
    """Minimize the total slack with the defective count fixed to ``d``."""
    return _decode(M, y_hat, d, "full", method)


def decode_nolipo_plus(M, y_hat, d, method="auto"):
    """Slack minimization over the positive tests only."""
    return _decode(M, y_hat, d, "plus", method)


def decode_nolipo_minus(M, y_hat, d, method="auto"):
    """Slack minimization over the negative tests only."""
    return _decode(M, y_hat, d, "minus", method)


def build_lipo_lp(M, y, d):
    """Noiseless constraint set: slacks removed, x variables only."""
    y = as_bits(y, M.T, name="result vector")
    T, n = M.shape
    if not 0 <= d <= n:
        raise ParameterError(f"need 0 <= d <= n, got {d}")
    A = sp.vstack([sp.csr_array(M.dense.astype(float)), sp.csr_array(np.ones((1, n)))], format="csr")
    relations = tuple("ge" if v else "eq" for v in y) + ("eq",)
    rhs = np.concatenate([y.astype(float), [float(d)]])
    return LinearProgram(np.zeros(n), A, relations, rhs, np.zeros(n), np.ones(n))


def decode_lipo(M, y, d, method="auto"):
    """Return any feasible point of the noiseless program, rounded.

    Infeasibility means the outcomes cannot come from noiseless tests on a
    weight-``d`` set; it is reported as ``failed=True``.
    """
    x = check_feasibility(build_lipo_lp(M, y, d), method)
    if x is None:
        return LpDecodeOutput(np.zeros(M.n, dtype=np.uint8), np.zeros(M.T), np.full(M.n, np.nan),
                              False, float("nan"), failed=True, dbar=d)
    estimate, integral = round_solution(x)
    return LpDecodeOutput(estimate, np.zeros(M.T), x, integral, 0.0, dbar=d)


def decode_nounlipo(M, y_hat, D, q, tau, method="auto"):
    """Scan dbar = 0..D and return the first acceptable solution.

    A solution is acceptable when its x part is binary within ``TOL_INT`` and
    at most ``T q (1 + tau)`` slack entries exceed ``TOL_INT``.
    """
    if not 0 <= q < 0.5:
        raise ParameterError(f"q must lie in [0, 1/2), got {q}")
    if D < 1:
        raise ParameterError("D must be at least 1")
    if q > 0 and not tau > 0:
        raise ParameterError("tau must be positive")
    T, n = M.shape
    budget = T * q * (1 + tau) if q > 0 else 0.0
    last = None
    for dbar in range(0, min(D, n) + 1):
        out = _decode(M, y_hat, dbar, "full", method)
        last = out
        if not out.integral:
            continue
        if np.count_nonzero(out.eta > TOL_INT) <= budget + 1e-12:
            return out
    return LpDecodeOutput(np.zeros(n, dtype=np.uint8), last.eta, last.fractional, last.integral,
                          last.objective_value, failed=True, dbar=None)


# -- perturbation vectors --------------------------------------------------------


def perturbation_vectors(x):
    """All d (n - d) vectors with one -1 inside supp(x) and one +1 outside it."""
    x = np.asarray(x)
    inside = np.nonzero(x == 1)[0]
    outside = np.nonzero(x == 0)[0]
    for a in inside:
        for b in outside:
            phi = np.zeros(x.shape[0], dtype=np.int64)
            phi[a], phi[b] = -1, 1
            yield phi


def slack_change(rows, y_hat, x, phi):
    """eta_i(x + phi) - eta_i(x) for each row of ``rows`` (a 2-D 0/1 array).

    Uses the minimal slacks of the full program: m.x on negative tests and
    (1 - m.x)^+ on positive ones.
    """
    rows = np.asarray(rows, dtype=np.int64)
    y_hat = np.asarray(y_hat)
    before = rows @ np.asarray(x, dtype=np.int64)
    after = rows @ (np.asarray(x, dtype=np.int64) + np.asarray(phi, dtype=np.int64))
    eta_before = np.where(y_hat == 1, np.maximum(1 - before, 0), before)
    eta_after = np.where(y_hat == 1, np.maximum(1 - after, 0), after)
    return eta_after - eta_before
