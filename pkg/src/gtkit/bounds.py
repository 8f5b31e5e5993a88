"""Closed-form test-count bounds for noisy non-adaptive group testing.

``log2`` is used wherever a bound is stated per ``D log n`` and the natural
log wherever it is stated per ``D ln n``; the two are never mixed.  Each
upper bound is returned as ``T = beta * D * log(n)`` with the log base
recorded in ``internals["log"]``.
"""

import math
from dataclasses import dataclass, field

from .errors import ParameterError
from .noise import NoiseModel

E2 = math.e ** 2
LN2 = math.log(2)
# 16 ln 2 / (1 - e^-2), printed as 12.83 in the literature
NOCOMA_CONSTANT = 16 * LN2 / (1 - math.exp(-2))
GAP_CONSTANT = 12.83

UPPER_TAGS = ("coco", "coma", "nocoma", "nolipo", "nolipo_asym", "nolipo_act", "lipo", "nolipo_pm", "nounlipo")
LOWER_TAGS = ("lower_noiseless", "lower_noisy")
TAGS = LOWER_TAGS + UPPER_TAGS


@dataclass(frozen=True)
class BoundQuery:
    n: int
    D: int
    delta: float
    noise: NoiseModel = field(default_factory=NoiseModel.noiseless)
    algo: str = "coma"
    d: int = None  # activation only: weight at which u^d is evaluated (default D)
    as_stated: bool = False  # coco only: use the theorem statement instead of its proof

    def __post_init__(self):
        if self.algo not in TAGS:
            raise ParameterError(f"unknown algorithm tag {self.algo!r}")
        if not 1 <= self.D < self.n:
            raise ParameterError(f"need 1 <= D < n, got D={self.D}, n={self.n}")
        if not self.delta > 0:
            raise ParameterError("delta must be positive")


@dataclass(frozen=True)
class BoundResult:
    T: float
    beta: float = None
    internals: dict = field(default_factory=dict)


def binary_entropy(q):
    """H(q) in bits, with H(0) = H(1) = 0."""
    if not 0 <= q <= 1:
        raise ParameterError(f"probability out of range: {q}")
    if q in (0, 1):
        return 0.0
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


def gamma_params(n, D, delta):
    """(Gamma, gamma) = (ln D / ln n, (Gamma + delta) / (1 + delta))."""
    if not 1 <= D < n:
        raise ParameterError(f"need 1 <= D < n, got D={D}, n={n}")
    big = math.log(D) / math.log(n)
    return big, (big + delta) / (1 + delta)


def tau_star(q, gamma):
    """No-CoMa threshold slack (1 - 2q) / (4 q (1 + gamma^-1/2))."""
    if q == 0:
        raise ParameterError("tau* is undefined at q = 0; use exact column matching")
    if not 0 < q < 0.5:
        raise ParameterError(f"q must lie in (0, 1/2), got {q}")
    if not 0 < gamma <= 1:
        raise ParameterError(f"gamma must lie in (0, 1], got {gamma}")
    return (1 - 2 * q) / (4 * q * (1 + gamma ** -0.5))


def tau_preamble(q, gamma):
    """The threshold slack without the factor 4 in its denominator.

    Kept for comparison only; it exceeds the validity limit (1 - 2q)/(4q).
    """
    return 4 * tau_star(q, gamma)


def lower_bound(n, D, delta, q=0.0):
    """(1 - n^-delta)(1 - Gamma) D log2 n / (1 - H(q))."""
    if not 0 <= q < 0.5:
        raise ParameterError(f"q must lie in [0, 1/2), got {q}")
    big, gamma = gamma_params(n, D, delta)
    capacity = 1 - binary_entropy(q)
    T = (1 - n ** -delta) * (1 - big) * D * math.log2(n) / capacity
    return BoundResult(T, None, {"Gamma": big, "gamma": gamma, "H": 1 - capacity, "log": "log2"})


def _bsc_q(noise, algo):
    if noise.kind == "noiseless":
        return 0.0
    if noise.kind == "bsc":
        return noise.q
    raise ParameterError(f"{algo} bound is stated for BSC noise, not {noise.kind}")


def _lp_beta(delta, big, D, contrast, factor=1.0, w_scale=2.0):
    """(delta + 1 + Gamma) ln2 e^2 w (w + c/3) / c^2 with w = 1 + w_scale c / D."""
    w = 1 + w_scale * contrast / D
    beta = factor * (delta + 1 + big) * LN2 * E2 * w * (w + contrast / 3) / contrast ** 2
    return beta, w


def nocoma_beta(gamma, delta, q):
    return NOCOMA_CONSTANT * (1 + math.sqrt(gamma)) ** 2 * (1 + delta) / (1 - 2 * q) ** 2


def nocoma_beta_gamma_form(big, gamma, delta, q):
    """Same constant written with (1 + gamma^-1/2)^2 (Gamma + delta)."""
    return 16 * (1 + gamma ** -0.5) ** 2 * (big + delta) * LN2 / ((1 - math.exp(-2)) * (1 - 2 * q) ** 2)


def upper_bound(query):
    """Number of tests sufficient for error probability n^-delta."""
    n, D, delta, noise, algo = query.n, query.D, query.delta, query.noise, query.algo
    if algo in LOWER_TAGS:
        raise ParameterError(f"{algo} is a lower bound; use lower_bound or evaluate")
    big, gamma = gamma_params(n, D, delta)
    internals = {"Gamma": big, "gamma": gamma}
    ln_n, log2_n = math.log(n), math.log2(n)

    if algo == "coma":
        if noise.kind != "noiseless":
            raise ParameterError("coma is a noiseless decoder")
        beta = math.e * (1 + delta)
        return BoundResult(beta * D * ln_n, beta, {**internals, "log": "ln"})

    if algo == "coco":
        if not query.as_stated:
            if noise.kind != "noiseless":
                raise ParameterError("coco is analysed for noiseless outcomes only")
            beta = 2 * math.e * (1 + delta)
            return BoundResult(beta * D * ln_n, beta, {**internals, "log": "ln"})
        q = _bsc_q(noise, algo)
        beta = nocoma_beta(gamma, delta, q)
        return BoundResult(beta * D * log2_n, beta, {**internals, "log": "log2"})

    if algo == "nocoma":
        q = _bsc_q(noise, algo)
        beta = nocoma_beta(gamma, delta, q)
        internals["log"] = "log2"
        if q > 0:
            internals["tau"] = tau_star(q, gamma)
        return BoundResult(beta * D * log2_n, beta, internals)

    if algo == "lipo":
        if noise.kind != "noiseless":
            raise ParameterError("lipo is a noiseless decoder")
        beta, w = _lp_beta(delta, big, D, 1.0)
        return BoundResult(beta * D * log2_n, beta, {**internals, "w": w, "log": "log2"})

    if algo == "nolipo":
        q = _bsc_q(noise, algo)
        beta, w = _lp_beta(delta, big, D, 1 - 2 * q)
        return BoundResult(beta * D * log2_n, beta, {**internals, "w": w, "log": "log2"})

    if algo == "nolipo_pm":
        q = _bsc_q(noise, algo)
        beta, w = _lp_beta(delta, big, D, 1 - 2 * q, factor=2.0, w_scale=1.0)
        return BoundResult(beta * D * log2_n, beta, {**internals, "w": w, "log": "log2"})

    if algo == "nolipo_asym":
        if noise.kind != "asym":
            raise ParameterError("nolipo_asym needs an asymmetric noise model")
        beta, w = _lp_beta(delta, big, D, 1 - noise.q0 - noise.q1)
        return BoundResult(beta * D * log2_n, beta, {**internals, "w": w, "log": "log2"})

    if algo == "nolipo_act":
        if noise.kind != "activation":
            raise ParameterError("nolipo_act needs an activation noise model")
        d = D if query.d is None else query.d
        if not 1 <= d <= D:
            raise ParameterError(f"need 1 <= d <= D, got d={d}")
        u, q0 = noise.u, noise.q0
        contrast = 2 - u ** d - 2 * q0
        if contrast <= 0:
            raise ParameterError(f"2 - u^d - 2 q0 must be positive, got {contrast}")
        w = 1 + contrast / D
        beta = ((delta + 1 + big) * 2 * LN2 * E2 * w * (3 * w * (2 + u - u ** d) - contrast)
                / (3 * contrast ** 2))
        return BoundResult(beta * D * log2_n, beta, {**internals, "w": w, "d": d, "log": "log2"})

    if algo == "nounlipo":
        q = _bsc_q(noise, algo)
        lp_beta, w = _lp_beta(delta, big, D, 1 - 2 * q)
        nc_beta = nocoma_beta(gamma, delta, q)
        beta = max(lp_beta, nc_beta)
        internals.update(w=w, beta_lp=lp_beta, beta_nocoma=nc_beta, log="log2")
        if q > 0:
            internals["tau"] = tau_star(q, gamma)
        return BoundResult(beta * D * log2_n, beta, internals)

    raise ParameterError(f"unknown algorithm tag {algo!r}")


def evaluate(query):
    """Dispatch a query to the lower or upper bound it names."""
    if query.algo == "lower_noiseless":
        if query.noise.kind != "noiseless":
            raise ParameterError("lower_noiseless takes no noise model")
        return lower_bound(query.n, query.D, query.delta, 0.0)
    if query.algo == "lower_noisy":
        return lower_bound(query.n, query.D, query.delta, _bsc_q(query.noise, query.algo))
    return upper_bound(query)


@dataclass(frozen=True)
class GapFactor:
    ratio: float
    closed_form: float
    epsilon_adjusted: float  # closed_form / (1 - n^-delta)


def gap_factor(n, D, delta, q):
    """No-CoMa upper bound over the noisy lower bound, next to 12.83 (1+sqrt g)^2 (1+delta) (1-2q)^-2."""
    if not 0 < q < 0.5:
        raise ParameterError(f"q must lie in (0, 1/2), got {q}")
    noise = NoiseModel.bsc(q)
    upper = upper_bound(BoundQuery(n, D, delta, noise, "nocoma")).T
    lower = lower_bound(n, D, delta, q).T
    _, gamma = gamma_params(n, D, delta)
    closed = GAP_CONSTANT * (1 + math.sqrt(gamma)) ** 2 * (1 + delta) / (1 - 2 * q) ** 2
    return GapFactor(upper / lower, closed, closed / (1 - n ** -delta))


@dataclass(frozen=True)
class PerturbationLaw:
    """Joint probabilities P(Delta'_{s,i} = +-1) for one test, s = observed outcome.

    ``mean_change`` is E[Delta] per test (sum of the signed terms) and
    ``mean_count`` is E[#Delta] per test.
    """

    p1_plus: float
    p1_minus: float
    p0_plus: float
    p0_minus: float

    @property
    def mean_change(self):
        return self.p1_plus - self.p1_minus + self.p0_plus - self.p0_minus

    @property
    def mean_count(self):
        return self.p1_plus + self.p1_minus + self.p0_plus + self.p0_minus


def perturbation_expectations(p, d, noise):
    """Per-test slack-change law when one unit of weight leaves supp(x)."""
    if not 0 < p < 1:
        raise ParameterError(f"p must lie in (0, 1), got {p}")
    if d < 1:
        raise ParameterError("d must be at least 1")
    r = 1 - p
    if noise.kind in ("noiseless", "bsc", "asym"):
        q0, q1 = noise.flip_probabilities
        return PerturbationLaw(
            p1_plus=p * r ** d * (1 - q1),
            p1_minus=p * r ** d * q0,
            p0_plus=p * r * ((1 - q0 - q1) * r ** (d - 1) + q1),
            p0_minus=p * r * q1,
        )
    u, q0 = noise.u, noise.q0
    return PerturbationLaw(
        p1_plus=p * r ** d * (1 - u ** d),
        p1_minus=p * r ** d * q0,
        p0_plus=p * r * ((r + p * u) ** (d - 1) - r ** (d - 1) * q0),
        p0_minus=p * r * (r + p * u) ** (d - 1) * u,
    )
