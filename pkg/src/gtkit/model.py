"""Problem instances, pooling designs and noiseless test outcomes."""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ParameterError
from .rng import make_rng


@dataclass(frozen=True)
class ProblemInstance:
    n: int
    defective_set: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"n must be positive, got {self.n}")
        object.__setattr__(self, "defective_set", frozenset(int(j) for j in self.defective_set))
        bad = [j for j in self.defective_set if not 0 <= j < self.n]
        if bad:
            raise ParameterError(f"defective indices out of range [0, {self.n}): {sorted(bad)}")

    @property
    def d(self):
        return len(self.defective_set)

    @property
    def x(self):
        """0/1 indicator vector of the defective set."""
        v = np.zeros(self.n, dtype=np.uint8)
        v[sorted(self.defective_set)] = 1
        return v

    @classmethod
    def random(cls, n, d, seed):
        """Defective set drawn uniformly among all weight-``d`` subsets."""
        if not 0 <= d <= n:
            raise ParameterError(f"need 0 <= d <= n, got d={d}, n={n}")
        rng = make_rng(seed)
        return cls(n, frozenset(rng.choice(n, size=d, replace=False).tolist()))


@dataclass(frozen=True)
class DesignParams:
    D: int
    delta: float
    seed: int = 0

    def __post_init__(self):
        if self.D < 1:
            raise ParameterError("D must be at least 1")
        if not self.delta > 0:
            raise ParameterError("delta must be positive")

    def epsilon(self, n):
        """Target error probability n^-delta for a universe of size n."""
        return n ** (-self.delta)


@dataclass(frozen=True)
class TestMatrix:
    """A T x n binary pooling matrix stored as bit-packed rows.

    ``packed`` holds ``ceil(n / 8)`` bytes per row in little bit order, so
    bit ``j`` of row ``i`` is ``(packed[i, j >> 3] >> (j & 7)) & 1``.
    ``design`` is a tag such as ``"bernoulli"`` or ``"coco"`` and ``params``
    the exact generation parameters.
    """

    __test__ = False  # keep pytest from collecting this class

    T: int
    n: int
    packed: np.ndarray = field(repr=False)
    design: str = "explicit"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.T < 1 or self.n < 1:
            raise ParameterError(f"matrix dimensions must be positive, got {self.T}x{self.n}")
        packed = np.ascontiguousarray(self.packed, dtype=np.uint8)
        if packed.shape != (self.T, (self.n + 7) // 8):
            raise ParameterError(f"packed array has shape {packed.shape}, expected {(self.T, (self.n + 7) // 8)}")
        # padding bits past column n must be zero so row weights stay honest
        if self.n % 8:
            pad_mask = np.uint8((0xFF << (self.n % 8)) & 0xFF)
            if np.any(packed[:, -1] & pad_mask):
                raise ParameterError("padding bits beyond column n are set")
        packed.setflags(write=False)
        object.__setattr__(self, "packed", packed)

    @classmethod
    def from_dense(cls, bits, design="explicit", params=None):
        bits = np.asarray(bits)
        if bits.ndim != 2:
            raise ParameterError("matrix must be two-dimensional")
        if bits.dtype != bool and not ((bits == 0) | (bits == 1)).all():
            raise ParameterError("matrix entries must be 0 or 1")
        T, n = bits.shape
        packed = np.packbits(bits.astype(np.uint8), axis=1, bitorder="little")
        return cls(T, n, packed, design, dict(params or {}))

    @property
    def shape(self):
        return (self.T, self.n)

    @cached_property
    def dense(self):
        """Read-only T x n uint8 view of the matrix."""
        bits = np.unpackbits(self.packed, axis=1, count=self.n, bitorder="little")
        bits.setflags(write=False)
        return bits

    def row(self, i):
        return np.unpackbits(self.packed[i], count=self.n, bitorder="little")

    def column(self, j):
        if not 0 <= j < self.n:
            raise IndexError(j)
        return (self.packed[:, j >> 3] >> (j & 7)) & 1

    def column_weights(self):
        return self.dense.sum(axis=0, dtype=np.int64)

    def row_weights(self):
        return self.dense.sum(axis=1, dtype=np.int64)

    # -- text serialization -------------------------------------------------

    def header(self):
        params = " ".join(f"{k}={_fmt_param(v)}" for k, v in self.params.items())
        return f"{self.T} {self.n} {self.design} {params}".rstrip()

    def dumps(self):
        lines = [self.header()]
        lines.extend("".join("01"[b] for b in row) for row in self.dense)
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text):
        lines = [ln.strip() for ln in text.strip().splitlines()]
        head = lines[0].split()
        if len(head) < 3:
            raise ParameterError(f"bad matrix header: {lines[0]!r}")
        T, n, design = int(head[0]), int(head[1]), head[2]
        params = {}
        for tok in head[3:]:
            key, _, val = tok.partition("=")
            params[key] = _parse_param(val)
        body = lines[1:]
        if len(body) != T or any(len(r) != n or set(r) - {"0", "1"} for r in body):
            raise ParameterError("matrix body does not match its header")
        bits = np.array([[c == "1" for c in r] for r in body], dtype=np.uint8)
        return cls.from_dense(bits, design, params)

    def __eq__(self, other):
        if not isinstance(other, TestMatrix):
            return NotImplemented
        return (self.shape == other.shape and self.design == other.design
                and self.params == other.params and np.array_equal(self.packed, other.packed))

    __hash__ = None


def _fmt_param(v):
    return repr(v) if isinstance(v, float) else str(v)


def _parse_param(s):
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def gen_bernoulli_matrix(T, n, p, seed):
    """Matrix with i.i.d. Bernoulli(p) entries drawn row by row."""
    if T < 1 or n < 1:
        raise ParameterError(f"T and n must be positive, got T={T}, n={n}")
    if not 0 < p < 1:
        raise ParameterError(f"p must lie in (0, 1), got {p}")
    rng = make_rng(seed)
    bits = rng.random((T, n)) < p
    return TestMatrix.from_dense(bits, "bernoulli", {"p": float(p)})


def gen_coco_matrix(T, n, g, seed):
    """Each row marks the items hit by ``g`` uniform draws with replacement."""
    if T < 1 or n < 1:
        raise ParameterError(f"T and n must be positive, got T={T}, n={n}")
    if g < 1 or int(g) != g:
        raise ParameterError(f"g must be a positive integer, got {g}")
    g = int(g)
    rng = make_rng(seed)
    draws = rng.integers(0, n, size=(T, g))
    bits = np.zeros((T, n), dtype=np.uint8)
    bits[np.repeat(np.arange(T), g), draws.ravel()] = 1
    return TestMatrix.from_dense(bits, "coco", {"g": g})


def bernoulli_probability(D):
    """Pool inclusion probability 1/D, or 1/2 when D == 1."""
    if D < 1:
        raise ParameterError("D must be at least 1")
    return 0.5 if D == 1 else 1.0 / D


def coco_group_size(n, D):
    """Group sampling parameter 1/ln(n/(n-D)) rounded half-up, at least 1."""
    if not 1 <= D < n:
        raise ParameterError(f"need 1 <= D < n, got D={D}, n={n}")
    g = 1.0 / math.log(n / (n - D))
    return max(1, math.floor(g + 0.5))


def noiseless_outcomes(M, inst):
    """y_i = 1 iff test i pools at least one defective item."""
    if M.n != inst.n:
        raise ParameterError(f"matrix has {M.n} columns but instance has n={inst.n}")
    if inst.d == 0:
        return np.zeros(M.T, dtype=np.uint8)
    cols = sorted(inst.defective_set)
    return M.dense[:, cols].any(axis=1).astype(np.uint8)


def as_bits(v, length=None, name="vector"):
    """Validate a 0/1 vector and return it as uint8."""
    a = np.asarray(v)
    if a.ndim != 1:
        raise ParameterError(f"{name} must be one-dimensional")
    if length is not None and a.shape[0] != length:
        raise ParameterError(f"{name} has length {a.shape[0]}, expected {length}")
    if not np.isin(a, (0, 1)).all():
        raise ParameterError(f"{name} entries must be 0 or 1")
    return a.astype(np.uint8)
