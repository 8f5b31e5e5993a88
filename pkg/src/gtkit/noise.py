"""Measurement noise channels applied to group-test outcomes."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError, UsageError
from .model import as_bits
from .rng import make_rng

KINDS = ("noiseless", "bsc", "asym", "activation")


@dataclass(frozen=True)
class NoiseModel:
    """Tagged channel description.

    ``bsc`` uses ``q``; ``asym`` uses ``q0`` (0 -> 1) and ``q1`` (1 -> 0);
    ``activation`` uses ``u`` (per-item non-activation) and ``q0``.
    """

    kind: str = "noiseless"
    q: float = 0.0
    q0: float = 0.0
    q1: float = 0.0
    u: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown noise kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "bsc" and not 0 <= self.q < 0.5:
            raise ParameterError(f"bsc requires 0 <= q < 1/2, got {self.q}")
        if self.kind == "asym":
            if not (0 <= self.q0 < 1 and 0 <= self.q1 < 1):
                raise ParameterError("asym requires q0, q1 in [0, 1)")
            if self.q0 + self.q1 >= 1:
                raise ParameterError(f"asym requires q0 + q1 < 1, got {self.q0 + self.q1}")
        if self.kind == "activation" and not (0 <= self.u < 1 and 0 <= self.q0 < 1):
            raise ParameterError("activation requires u, q0 in [0, 1)")

    @classmethod
    def noiseless(cls):
        return cls("noiseless")

    @classmethod
    def bsc(cls, q):
        return cls("bsc", q=q)

    @classmethod
    def asymmetric(cls, q0, q1):
        return cls("asym", q0=q0, q1=q1)

    @classmethod
    def activation(cls, u, q0=0.0):
        return cls("activation", q0=q0, u=u)

    @property
    def flip_probabilities(self):
        """(P(0 -> 1), P(1 -> 0)) for the flip channels."""
        if self.kind == "noiseless":
            return 0.0, 0.0
        if self.kind == "bsc":
            return self.q, self.q
        if self.kind == "asym":
            return self.q0, self.q1
        raise UsageError("activation noise is not a per-test flip channel")

    def check_activation(self, d):
        margin = 2 - self.u ** d - 2 * self.q0
        if margin <= 0:
            raise ParameterError(f"activation model needs 2 - u^d - 2 q0 > 0, got {margin}")

    def to_json(self):
        out = {"kind": self.kind}
        if self.kind == "bsc":
            out["q"] = self.q
        elif self.kind == "asym":
            out.update(q0=self.q0, q1=self.q1)
        elif self.kind == "activation":
            out.update(u=self.u, q0=self.q0)
        return out

    @classmethod
    def from_json(cls, obj):
        obj = dict(obj)
        kind = obj.pop("kind", "noiseless")
        unknown = set(obj) - {"q", "q0", "q1", "u"}
        if unknown:
            raise ParameterError(f"unknown noise keys: {sorted(unknown)}")
        return cls(kind, **{k: float(v) for k, v in obj.items()})

    def label(self):
        if self.kind == "bsc":
            return f"bsc({self.q:g})"
        if self.kind == "asym":
            return f"asym({self.q0:g},{self.q1:g})"
        if self.kind == "activation":
            return f"activation({self.u:g},{self.q0:g})"
        return "noiseless"


@dataclass(frozen=True)
class NoiseRealization:
    """``nu`` marks the tests whose observed outcome differs from the noiseless one.

    ``active`` is the T x d activation mask (columns follow the sorted
    defective set) and is only kept when requested.
    """

    nu: np.ndarray
    active: Optional[np.ndarray] = None


def apply_noise(y, model, seed):
    """Pass noiseless outcomes through a flip channel.

    One uniform draw per test is consumed in test order, so ``bsc(q)`` and
    ``asym(q, q)`` produce the same realization from the same seed.
    """
    if model.kind == "activation":
        raise UsageError("activation noise acts on the pooling process; use apply_activation")
    y = as_bits(y, name="y")
    if model.kind == "noiseless":
        return y.copy(), NoiseRealization(np.zeros_like(y))
    p01, p10 = model.flip_probabilities
    draws = make_rng(seed).random(y.shape[0])
    nu = np.where(y == 1, draws < p10, draws < p01).astype(np.uint8)
    return y ^ nu, NoiseRealization(nu)


def apply_activation(M, inst, u, q0, seed, keep_mask=False):
    """Simulate tests under activation noise with false positives.

    Each pooled defective is active independently with probability 1 - u; a
    test is raw-positive iff some active defective is pooled; a raw-negative
    test then reads positive with probability q0.  The T x d activation draws
    are consumed row-major, followed by T false-positive draws.
    """
    NoiseModel.activation(u, q0).check_activation(max(inst.d, 1))
    if M.n != inst.n:
        raise ParameterError(f"matrix has {M.n} columns but instance has n={inst.n}")
    rng = make_rng(seed)
    cols = sorted(inst.defective_set)
    pooled = M.dense[:, cols].astype(bool)
    active = (rng.random(pooled.shape) >= u) & pooled
    raw = active.any(axis=1)
    fp = rng.random(M.T) < q0
    y_hat = (raw | fp).astype(np.uint8)
    y = pooled.any(axis=1).astype(np.uint8)
    return y_hat, NoiseRealization(y ^ y_hat, active if keep_mask else None)
