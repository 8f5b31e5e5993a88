import csv
import json
import math
from dataclasses import replace

import pytest

from gtkit import bounds
from gtkit.errors import ParameterError
from gtkit.harness import (SUMMARY_COLUMNS, TRIAL_COLUMNS, ExperimentConfig, read_trials, run_experiment, run_trial,
                           summary_path, sweep_T, wilson_interval)
from gtkit.noise import NoiseModel
from oracles import z_score


def cfg(**kw):
    base = dict(n=60, D=3, d=3, delta=1.0, noise=NoiseModel.noiseless(), algo="coma", T=40, trials=50, seed=5)
    base.update(kw)
    return ExperimentConfig(**base)


def _strip_ms(rec):
    return replace(rec, ms=0.0)


def test_config_validation():
    with pytest.raises(ParameterError):
        cfg(trials=0)
    with pytest.raises(ParameterError):
        cfg(d=4)
    with pytest.raises(ParameterError):
        cfg(D=61)
    with pytest.raises(ParameterError):
        cfg(algo="omp")
    with pytest.raises(ParameterError):
        ExperimentConfig.from_json({"n": 5, "D": 1, "d": 1, "delta": 1, "algo": "coma", "extra": 1})


def test_config_json_roundtrip(tmp_path):
    c = cfg(d="random", T="auto", noise=NoiseModel.bsc(0.1), algo="nocoma")
    path = tmp_path / "c.json"
    path.write_text(json.dumps(c.to_json()))
    assert ExperimentConfig.load(path) == c
    assert set(c.to_json()) == {"n", "D", "d", "delta", "noise", "algo", "T", "trials", "seed"}


def test_empty_set_recovery_probability():
    # n = 1, d = 0: exact iff the single column is not all zero, P = 1 - 2^-T
    trials = 4000
    c = ExperimentConfig(n=1, D=1, d=0, delta=1.0, noise=NoiseModel.noiseless(), algo="coma", T=2, trials=trials,
                         seed=3)
    ok = sum(run_trial(c, i).exact for i in range(trials))
    assert z_score(ok, trials, 1 - 2 ** -2) <= 4


def test_trial_determinism():
    c = cfg(algo="nolipo", noise=NoiseModel.bsc(0.1), T=60)
    assert _strip_ms(run_trial(c, 7)) == _strip_ms(run_trial(c, 7))
    assert run_trial(c, 7).seed != run_trial(c, 8).seed


def test_coma_never_false_nondefective():
    s = run_experiment(cfg(T=25, trials=200))
    assert all(r.false_nondef == 0 for r in s.records)
    assert s.errors > 0


def test_exact_flag_consistent():
    s = run_experiment(cfg(algo="nocoma", noise=NoiseModel.bsc(0.1), T=60, trials=100))
    for r in s.records:
        assert r.exact == (r.false_def == 0 and r.false_nondef == 0 and not r.fail)


def test_wilson_examples():
    z = 1.959963984540054
    lo, hi = wilson_interval(0, 1000)
    assert lo == pytest.approx(0, abs=1e-15) and hi == pytest.approx(z * z / (1000 + z * z), rel=1e-12)
    assert hi == pytest.approx(0.0037, abs=2e-4)
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(0.4038, abs=1e-4) and hi == pytest.approx(0.5962, abs=1e-4)


def test_T_sweep_paired_monotone():
    # same seed: each larger Bernoulli matrix extends the smaller one row by row, so CoMa errors can only drop
    results = sweep_T(cfg(trials=150), [10, 20, 40, 80])
    errors = [r.errors for r in results]
    assert errors == sorted(errors, reverse=True)
    for small, big in zip(results, results[1:]):
        for a, b in zip(small.records, big.records):
            assert b.false_def <= a.false_def


def test_theoretical_T_matches_bounds():
    c = cfg(T="auto", trials=3, n=500, D=8, d=8)
    s = run_experiment(c)
    expected = bounds.upper_bound(bounds.BoundQuery(500, 8, 1.0, NoiseModel.noiseless(), "coma")).T
    assert s.T_theory == expected and s.T == math.ceil(expected) == 271


def test_schedule_independence(tmp_path):
    c = cfg(algo="nocoma", noise=NoiseModel.bsc(0.1), T=80, trials=30, d="random")
    serial = run_experiment(c, tmp_path / "a.csv")
    pooled = run_experiment(c, tmp_path / "b.csv", workers=2)
    assert [_strip_ms(r) for r in serial.records] == [_strip_ms(r) for r in pooled.records]
    assert serial.errors == pooled.errors


def test_csv_roundtrip_and_columns(tmp_path):
    out = tmp_path / "t.csv"
    s = run_experiment(cfg(algo="lipo", trials=20, T=30), out)
    with open(out) as fh:
        assert next(csv.reader(fh)) == TRIAL_COLUMNS
    assert read_trials(out) == [replace(r, ms=round(r.ms, 3)) for r in s.records]
    with open(summary_path(out)) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == SUMMARY_COLUMNS and len(rows) == 2
    assert int(rows[1][SUMMARY_COLUMNS.index("errors")]) == s.errors


def test_fixed_set_mode():
    c = cfg(defective_set=(4, 9, 17), trials=5)
    assert all(r.false_nondef == 0 for r in run_experiment(c).records)
    with pytest.raises(ParameterError):
        cfg(defective_set=(1, 2))


@pytest.mark.parametrize("algo,noise", [("coco", NoiseModel.noiseless()), ("nolipo+", NoiseModel.bsc(0.05)),
                                        ("nolipo-", NoiseModel.bsc(0.05)), ("nounlipo", NoiseModel.bsc(0.05)),
                                        ("nolipo", NoiseModel.activation(0.1, 0.02)),
                                        ("nolipo", NoiseModel.asymmetric(0.02, 0.05))])
def test_every_decoder_runs(algo, noise):
    s = run_experiment(cfg(algo=algo, noise=noise, n=30, T=60, trials=4))
    assert s.trials == 4 and 0 <= s.err_rate <= 1
