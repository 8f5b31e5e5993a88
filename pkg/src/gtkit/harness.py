"""Monte Carlo experiments: configuration, trials, aggregation and CSV output."""

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.stats import norm

from . import bounds
from .combinatorial import decode_coco, decode_coma, decode_nocoma
from .errors import ParameterError, UsageError
from .lp_decoders import (decode_lipo, decode_nolipo, decode_nolipo_minus, decode_nolipo_plus,
                          decode_nounlipo)
from .model import (ProblemInstance, bernoulli_probability, coco_group_size, gen_bernoulli_matrix,
                    gen_coco_matrix, noiseless_outcomes)
from .noise import NoiseModel, apply_activation, apply_noise
from .rng import STREAM_DEFECTS, STREAM_MATRIX, STREAM_NOISE, derive_seed, make_rng

ALGOS = ("coco", "coma", "nocoma", "lipo", "nolipo", "nolipo+", "nolipo-", "nounlipo")
LP_ALGOS = ("lipo", "nolipo", "nolipo+", "nolipo-", "nounlipo")

TRIAL_COLUMNS = ["trial", "seed", "T", "algo", "exact", "false_def", "false_nondef", "fail", "integral", "ms"]
SUMMARY_COLUMNS = ["n", "D", "d", "delta", "algo", "noise", "T", "T_theory", "trials", "errors",
                   "err_rate", "wilson_lo", "wilson_hi", "eps_target"]
CONFIG_KEYS = {"n", "D", "d", "delta", "noise", "algo", "T", "trials", "seed", "tau", "defective_set"}


@dataclass(frozen=True)
class ExperimentConfig:
    """One parameter point.

    ``d`` is an int or ``"random"`` (weight drawn uniformly from 1..D per
    trial); ``T`` is an int or ``"auto"`` (ceiling of the matching bound).
    ``defective_set`` pins the same set in every trial for regression runs.
    ``tau`` overrides the default threshold slack tau*.
    """

    n: int
    D: int
    d: Union[int, str]
    delta: float
    noise: NoiseModel
    algo: str
    T: Union[int, str] = "auto"
    trials: int = 2000
    seed: int = 0
    tau: Optional[float] = None
    defective_set: Optional[tuple] = None

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise ParameterError(f"unknown algorithm {self.algo!r}; expected one of {ALGOS}")
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")
        if not 1 <= self.D <= self.n:
            raise ParameterError(f"need 1 <= D <= n, got D={self.D}, n={self.n}")
        if self.d != "random" and not 0 <= int(self.d) <= self.D:
            raise ParameterError(f"need 0 <= d <= D, got d={self.d}")
        if self.T != "auto" and int(self.T) < 1:
            raise ParameterError("T must be positive or 'auto'")
        if not self.delta > 0:
            raise ParameterError("delta must be positive")
        if self.defective_set is not None:
            ds = tuple(sorted(int(j) for j in self.defective_set))
            if self.d != "random" and len(ds) != int(self.d):
                raise ParameterError("defective_set size disagrees with d")
            object.__setattr__(self, "defective_set", ds)

    @classmethod
    def from_json(cls, obj):
        unknown = set(obj) - CONFIG_KEYS
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        obj = dict(obj)
        obj["noise"] = NoiseModel.from_json(obj.get("noise", {"kind": "noiseless"}))
        if "defective_set" in obj and obj["defective_set"] is not None:
            obj["defective_set"] = tuple(obj["defective_set"])
        return cls(**obj)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def to_json(self):
        out = {k: v for k, v in asdict(self).items() if v is not None}
        out["noise"] = self.noise.to_json()
        if self.defective_set is not None:
            out["defective_set"] = list(self.defective_set)
        return out

    @property
    def epsilon(self):
        return self.n ** -self.delta

    def bound_query(self):
        """Bound that sets T for this algorithm and noise model."""
        tag = {
            "coco": "coco", "coma": "coma", "nocoma": "nocoma", "lipo": "lipo",
            "nolipo+": "nolipo_pm", "nolipo-": "nolipo_pm", "nounlipo": "nounlipo",
        }.get(self.algo)
        if self.algo == "nolipo":
            tag = {"asym": "nolipo_asym", "activation": "nolipo_act"}.get(self.noise.kind, "nolipo")
        return bounds.BoundQuery(self.n, self.D, self.delta, self.noise, tag)

    def theoretical_T(self):
        return bounds.upper_bound(self.bound_query()).T

    def resolved_T(self):
        return math.ceil(self.theoretical_T()) if self.T == "auto" else int(self.T)

    def resolved_tau(self):
        if self.tau is not None:
            return self.tau
        _, gamma = bounds.gamma_params(self.n, self.D, self.delta)
        return bounds.tau_star(self.noise.q, gamma)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    T: int
    algo: str
    exact: bool
    false_def: int
    false_nondef: int
    fail: bool
    integral: Optional[bool]
    ms: float

    def csv_row(self):
        return [self.trial, self.seed, self.T, self.algo, int(self.exact), self.false_def, self.false_nondef,
                int(self.fail), "" if self.integral is None else int(self.integral), f"{self.ms:.3f}"]

    @classmethod
    def from_csv_row(cls, row):
        return cls(int(row["trial"]), int(row["seed"]), int(row["T"]), row["algo"], row["exact"] == "1",
                   int(row["false_def"]), int(row["false_nondef"]), row["fail"] == "1",
                   None if row["integral"] == "" else row["integral"] == "1", float(row["ms"]))


@dataclass(frozen=True)
class SweepSummary:
    config: ExperimentConfig
    T: int
    T_theory: float
    trials: int
    errors: int
    records: list = field(repr=False, default_factory=list)

    @property
    def err_rate(self):
        return self.errors / self.trials

    @property
    def wilson(self):
        return wilson_interval(self.errors, self.trials)

    def csv_row(self):
        c = self.config
        lo, hi = self.wilson
        return [c.n, c.D, c.d, c.delta, c.algo, c.noise.label(), self.T, f"{self.T_theory:.6f}", self.trials,
                self.errors, f"{self.err_rate:.6f}", f"{lo:.6f}", f"{hi:.6f}", f"{c.epsilon:.6g}"]


def wilson_interval(errors, trials, confidence=0.95):
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    z = norm.ppf(0.5 + confidence / 2)
    p = errors / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def trial_seed(master, index):
    return derive_seed(master, index)


def _draw_instance(config, seed):
    rng = make_rng(derive_seed(seed, STREAM_DEFECTS))
    if config.defective_set is not None:
        return ProblemInstance(config.n, frozenset(config.defective_set))
    d = int(rng.integers(1, config.D + 1)) if config.d == "random" else int(config.d)
    return ProblemInstance.random(config.n, d, rng)


def _design(config, T, seed):
    s = derive_seed(seed, STREAM_MATRIX)
    if config.algo == "coco":
        return gen_coco_matrix(T, config.n, coco_group_size(config.n, config.D), s)
    return gen_bernoulli_matrix(T, config.n, bernoulli_probability(config.D), s)


def _observe(config, M, inst, seed):
    s = derive_seed(seed, STREAM_NOISE)
    if config.noise.kind == "activation":
        y_hat, _ = apply_activation(M, inst, config.noise.u, config.noise.q0, s)
        return y_hat
    y_hat, _ = apply_noise(noiseless_outcomes(M, inst), config.noise, s)
    return y_hat


def _decode(config, M, y_hat, inst):
    algo, noise = config.algo, config.noise
    if algo == "coco":
        return decode_coco(M, y_hat)
    if algo == "coma":
        return decode_coma(M, y_hat)
    if algo == "nocoma":
        if noise.kind != "bsc" or noise.q == 0:
            raise UsageError("nocoma needs bsc noise with q > 0")
        return decode_nocoma(M, y_hat, noise.q, config.resolved_tau())
    if algo == "lipo":
        return decode_lipo(M, y_hat, inst.d)
    if algo == "nolipo":
        return decode_nolipo(M, y_hat, inst.d)
    if algo == "nolipo+":
        return decode_nolipo_plus(M, y_hat, inst.d)
    if algo == "nolipo-":
        return decode_nolipo_minus(M, y_hat, inst.d)
    q = noise.q if noise.kind == "bsc" else 0.0
    if noise.kind not in ("bsc", "noiseless"):
        raise UsageError("nounlipo is defined for bsc or noiseless outcomes")
    tau = config.resolved_tau() if q > 0 else 0.0
    return decode_nounlipo(M, y_hat, config.D, q, tau)


def run_trial(config, index, T=None):
    """Generate, observe and decode one instance; failures are recorded, not raised."""
    seed = trial_seed(config.seed, index)
    T = config.resolved_T() if T is None else T
    start = time.perf_counter()
    inst = _draw_instance(config, seed)
    M = _design(config, T, seed)
    y_hat = _observe(config, M, inst, seed)
    out = _decode(config, M, y_hat, inst)
    ms = (time.perf_counter() - start) * 1e3

    fail = bool(getattr(out, "failed", False))
    integral = getattr(out, "integral", None) if config.algo in LP_ALGOS else None
    if fail:
        false_def = false_nondef = 0
        exact = False
    else:
        x = inst.x
        est = out.estimate
        false_def = int(np.count_nonzero((est == 1) & (x == 0)))
        false_nondef = int(np.count_nonzero((est == 0) & (x == 1)))
        exact = false_def == 0 and false_nondef == 0
    return TrialRecord(index, seed, T, config.algo, exact, false_def, false_nondef, fail,
                       None if integral is None else bool(integral), ms)


def _run_chunk(args):
    config, indices, T = args
    return [run_trial(config, i, T) for i in indices]


def run_experiment(config, out=None, workers=1):
    """Run every trial, write the CSVs (if ``out`` is given) and aggregate.

    The trial CSV goes to ``out``; the one-row summary goes next to it with a
    ``.summary.csv`` suffix.  Records are folded in trial-index order, so the
    output does not depend on ``workers``.
    """
    T = config.resolved_T()
    T_theory = config.theoretical_T()
    indices = list(range(config.trials))
    if workers > 1:
        chunks = [indices[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_chunk, [(config, c, T) for c in chunks]))
        records = sorted((r for part in parts for r in part), key=lambda r: r.trial)
    else:
        records = []
        writer = None
        if out is not None:
            fh = open(out, "w", newline="")
            writer = csv.writer(fh)
            writer.writerow(TRIAL_COLUMNS)
        try:
            for i in indices:
                rec = run_trial(config, i, T)
                records.append(rec)
                if writer:
                    writer.writerow(rec.csv_row())
        finally:
            if writer:
                fh.close()
    errors = sum(not r.exact for r in records)
    summary = SweepSummary(config, T, T_theory, len(records), errors, records)
    if out is not None:
        if workers > 1:
            write_trials(out, records)
        write_summary(summary_path(out), [summary])
    return summary


def summary_path(out):
    out = Path(out)
    return out.with_name(out.stem + ".summary.csv")


def write_trials(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_COLUMNS)
        for rec in records:
            writer.writerow(rec.csv_row())


def read_trials(path):
    with open(path, newline="") as fh:
        return [TrialRecord.from_csv_row(row) for row in csv.DictReader(fh)]


def write_summary(path, summaries):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            writer.writerow(s.csv_row())


def sweep_T(config, T_values, out_dir=None):
    """One experiment per T value with the same master seed (paired trials)."""
    results = []
    for T in T_values:
        cfg = replace(config, T=int(T))
        out = None if out_dir is None else Path(out_dir) / f"{cfg.algo}_T{T}.csv"
        results.append(run_experiment(cfg, out))
    return results
