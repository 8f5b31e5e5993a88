"""Coupon-collector and column-matching decoders."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError, UsageError
from .model import as_bits

# Absolute slack on the No-CoMa threshold; ties count as defective.
THRESHOLD_TOL = 1e-12


@dataclass(frozen=True)
class DecodeOutput:
    """Estimate plus, for column matching, |T_j| and |S_j| per item."""

    estimate: np.ndarray
    tested: Optional[np.ndarray] = None
    matched: Optional[np.ndarray] = None

    def diagnostics_rows(self):
        if self.tested is None:
            raise UsageError("this decoder does not produce per-item diagnostics")
        for j, (t, s, e) in enumerate(zip(self.tested, self.matched, self.estimate)):
            yield j, int(t), int(s), int(e)


def _match_counts(M, y):
    y = as_bits(y, M.T, name="result vector")
    dense = M.dense
    tested = dense.sum(axis=0, dtype=np.int64)
    # float32 matmul is exact for counts below 2^24 and goes through BLAS
    matched = (y.astype(np.float32) @ dense.astype(np.float32)).astype(np.int64)
    return tested, matched


def decode_coco(M, y):
    """Clear every item pooled in a negative test; declare the rest defective.

    Only meaningful for noiseless outcomes: a false-negative test clears the
    defectives it contains.
    """
    y = as_bits(y, M.T, name="result vector")
    negative = y == 0
    cleared = M.dense[negative].any(axis=0)
    return DecodeOutput((~cleared).astype(np.uint8))


def decode_coma(M, y):
    """Declare j defective iff every test pooling j is positive.

    Items in no test are declared defective (vacuous containment).
    """
    tested, matched = _match_counts(M, y)
    estimate = (matched == tested).astype(np.uint8)
    return DecodeOutput(estimate, tested, matched)


def decode_nocoma(M, y_hat, q, tau):
    """Declare j defective iff |S_j| >= |T_j| (1 - q (1 + tau))."""
    if q == 0:
        raise UsageError("q = 0 means noiseless outcomes; use decode_coma")
    if not 0 < q < 0.5:
        raise ParameterError(f"q must lie in (0, 1/2), got {q}")
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    slack = q * (1 + tau)
    if slack >= 1:
        raise ParameterError(f"q (1 + tau) = {slack} >= 1 makes the threshold vacuous")
    tested, matched = _match_counts(M, y_hat)
    threshold = tested * (1 - slack)
    estimate = (matched >= threshold - THRESHOLD_TOL).astype(np.uint8)
    return DecodeOutput(estimate, tested, matched)
