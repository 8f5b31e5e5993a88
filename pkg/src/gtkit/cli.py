"""Command-line entry point: ``gtkit generate|decode|simulate|bounds``."""

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bounds
from .combinatorial import decode_coco, decode_coma, decode_nocoma
from .errors import ParameterError
from .harness import ALGOS, ExperimentConfig, run_experiment, summary_path
from .lp_decoders import (decode_lipo, decode_nolipo, decode_nolipo_minus, decode_nolipo_plus,
                          decode_nounlipo)
from .model import (ProblemInstance, TestMatrix, bernoulli_probability, coco_group_size, gen_bernoulli_matrix,
                    gen_coco_matrix, noiseless_outcomes)
from .noise import NoiseModel, apply_activation, apply_noise
from .rng import STREAM_DEFECTS, STREAM_MATRIX, STREAM_NOISE, derive_seed


def _add_noise_flags(p):
    p.add_argument("--noise", choices=["noiseless", "bsc", "asym", "activation"], default=None)
    p.add_argument("--q", type=float, default=None, help="BSC flip probability")
    p.add_argument("--q0", type=float, default=None, help="false-positive probability")
    p.add_argument("--q1", type=float, default=None, help="false-negative probability (asym)")
    p.add_argument("--u", type=float, default=None, help="activation failure probability")


def noise_from_args(args, fallback=None):
    """Build a NoiseModel from flags; ``--q`` alone implies BSC."""
    kind = args.noise
    if kind is None:
        if args.q is not None:
            kind = "bsc"
        elif fallback is not None:
            return fallback
        else:
            kind = "noiseless"
    obj = {"kind": kind}
    for key in ("q", "q0", "q1", "u"):
        val = getattr(args, key)
        if val is not None:
            obj[key] = val
    return NoiseModel.from_json(obj)


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _bits_line(v):
    return "".join("01"[int(b)] for b in v) + "\n"


def _read_bits(path):
    text = Path(path).read_text().split()
    if not text:
        raise ParameterError(f"{path} holds no 0/1 vector")
    return np.array([c == "1" for c in text[0]], dtype=np.uint8)


# -- generate ---------------------------------------------------------------------


def cmd_generate(args):
    if args.design == "coco":
        g = args.g if args.g is not None else coco_group_size(args.n, args.D)
        M = gen_coco_matrix(args.T, args.n, g, derive_seed(args.seed, STREAM_MATRIX))
    else:
        p = args.p if args.p is not None else bernoulli_probability(args.D)
        M = gen_bernoulli_matrix(args.T, args.n, p, derive_seed(args.seed, STREAM_MATRIX))
    _write(args.out, M.dumps())
    if args.results:
        d = args.D if args.d is None else args.d
        inst = ProblemInstance.random(args.n, d, derive_seed(args.seed, STREAM_DEFECTS))
        noise = noise_from_args(args)
        if noise.kind == "activation":
            y_hat, _ = apply_activation(M, inst, noise.u, noise.q0, derive_seed(args.seed, STREAM_NOISE))
        else:
            y_hat, _ = apply_noise(noiseless_outcomes(M, inst), noise, derive_seed(args.seed, STREAM_NOISE))
        Path(args.results).write_text(_bits_line(y_hat))
        if args.truth:
            Path(args.truth).write_text(_bits_line(inst.x))
    return 0


# -- decode -----------------------------------------------------------------------


def _need(value, flag, algo):
    if value is None:
        raise ParameterError(f"--algo {algo} requires {flag}")
    return value


def cmd_decode(args):
    M = TestMatrix.loads(Path(args.matrix).read_text())
    y_hat = _read_bits(args.results)
    algo = args.algo
    lines = []
    if algo == "coco":
        out = decode_coco(M, y_hat)
    elif algo == "coma":
        out = decode_coma(M, y_hat)
    elif algo == "nocoma":
        q = _need(args.q, "--q", algo)
        tau = args.tau
        if tau is None:
            D = _need(args.D, "--D (or --tau)", algo)
            _, gamma = bounds.gamma_params(M.n, D, args.delta)
            tau = bounds.tau_star(q, gamma)
        out = decode_nocoma(M, y_hat, q, tau)
    elif algo == "nounlipo":
        D = _need(args.D, "--D", algo)
        q = args.q or 0.0
        tau = args.tau
        if tau is None:
            tau = bounds.tau_star(q, bounds.gamma_params(M.n, D, args.delta)[1]) if q > 0 else 0.0
        out = decode_nounlipo(M, y_hat, D, q, tau, args.method)
    else:
        d = _need(args.d, "--d", algo)
        fn = {"lipo": decode_lipo, "nolipo": decode_nolipo, "nolipo+": decode_nolipo_plus,
              "nolipo-": decode_nolipo_minus}[algo]
        out = fn(M, y_hat, d, args.method)

    lines.append(_bits_line(out.estimate))
    if hasattr(out, "integral"):
        lines.append(f"objective {out.objective_value:.12g}\n")
        lines.append(f"integral {int(out.integral)}\n")
        lines.append(f"failed {int(out.failed)}\n")
        if out.dbar is not None:
            lines.append(f"dbar {out.dbar}\n")
    _write(args.out, "".join(lines))

    if args.diagnostics:
        with open(args.diagnostics, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["item", "Tj", "Sj", "decision"])
            w.writerows(out.diagnostics_rows())
    if args.eta:
        if not hasattr(out, "eta"):
            raise ParameterError("--eta is only available for LP decoders")
        with open(args.eta, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["test", "eta"])
            w.writerows((i, f"{v:.12g}") for i, v in enumerate(out.eta))
    return 0


# -- simulate ---------------------------------------------------------------------


def cmd_simulate(args):
    base = json.loads(Path(args.config).read_text()) if args.config else {}
    for key in ("n", "D", "delta", "algo", "trials", "seed"):
        val = getattr(args, key)
        if val is not None:
            base[key] = val
    if args.d is not None:
        base["d"] = args.d if args.d == "random" else int(args.d)
    if args.T is not None:
        base["T"] = args.T if args.T == "auto" else int(args.T)
    if args.tau is not None:
        base["tau"] = args.tau
    missing = {"n", "D", "d", "delta", "algo"} - set(base)
    if missing:
        raise ParameterError(f"missing experiment parameters: {sorted(missing)}")
    noise = noise_from_args(args, NoiseModel.from_json(base.get("noise", {"kind": "noiseless"})))
    base["noise"] = noise.to_json()
    config = ExperimentConfig.from_json(base)
    summary = run_experiment(config, args.out, workers=args.workers)
    lo, hi = summary.wilson
    print(f"{config.algo} n={config.n} D={config.D} T={summary.T} trials={summary.trials} "
          f"errors={summary.errors} rate={summary.err_rate:.4g} wilson95=[{lo:.4g}, {hi:.4g}] "
          f"eps={config.epsilon:.4g}")
    if args.out:
        print(f"trials -> {args.out}\nsummary -> {summary_path(args.out)}")
    return 0


# -- bounds -----------------------------------------------------------------------


def cmd_bounds(args):
    noise = noise_from_args(args)
    result = bounds.evaluate(bounds.BoundQuery(args.n, args.D, args.delta, noise, args.algo, args.d,
                                               args.as_stated))
    rows = {"T": result.T}
    if result.beta is not None:
        rows["beta"] = result.beta
    rows.update(result.internals)
    if args.json:
        print(json.dumps({"algo": args.algo, "n": args.n, "D": args.D, "delta": args.delta,
                          "noise": noise.to_json(), **rows}))
    else:
        width = max(len(k) for k in rows)
        for k, v in rows.items():
            print(f"{k:<{width}}  {v:.10g}" if isinstance(v, float) else f"{k:<{width}}  {v}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="gtkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a test matrix (and optionally outcomes)")
    g.add_argument("--T", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--D", type=int, required=True)
    g.add_argument("--d", type=int, default=None, help="defective count for --results (default D)")
    g.add_argument("--design", choices=["bernoulli", "coco"], default="bernoulli")
    g.add_argument("--p", type=float, default=None, help="override the Bernoulli probability")
    g.add_argument("--g", type=int, default=None, help="override the CoCo group size")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=None, help="matrix file (default stdout)")
    g.add_argument("--results", default=None, help="also write observed outcomes here")
    g.add_argument("--truth", default=None, help="also write the hidden 0/1 vector here")
    _add_noise_flags(g)
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("decode", help="decode a stored matrix and outcome vector")
    d.add_argument("--matrix", required=True)
    d.add_argument("--results", required=True)
    d.add_argument("--algo", choices=ALGOS, required=True)
    d.add_argument("--q", type=float, default=None)
    d.add_argument("--tau", type=float, default=None)
    d.add_argument("--d", type=int, default=None)
    d.add_argument("--D", type=int, default=None)
    d.add_argument("--delta", type=float, default=1.0, help="sets tau* when --tau is absent")
    d.add_argument("--method", choices=["auto", "simplex", "highs"], default="auto")
    d.add_argument("--out", default=None)
    d.add_argument("--diagnostics", default=None, help="per-item CSV item,Tj,Sj,decision")
    d.add_argument("--eta", default=None, help="per-test slack CSV (LP decoders)")
    d.set_defaults(func=cmd_decode)

    s = sub.add_parser("simulate", help="Monte Carlo error rate for one parameter point")
    s.add_argument("--config", default=None, help="JSON config; flags override its keys")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--D", type=int, default=None)
    s.add_argument("--d", default=None, help="int or 'random'")
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--algo", choices=ALGOS, default=None)
    s.add_argument("--T", default=None, help="int or 'auto'")
    s.add_argument("--tau", type=float, default=None)
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", default=None, help="trial CSV; summary goes to <stem>.summary.csv")
    _add_noise_flags(s)
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bounds", help="evaluate a test-count bound")
    b.add_argument("--algo", choices=bounds.TAGS, required=True)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--D", type=int, required=True)
    b.add_argument("--delta", type=float, required=True)
    b.add_argument("--d", type=int, default=None, help="activation weight (default D)")
    b.add_argument("--as-stated", action="store_true", help="coco: theorem-statement constant")
    b.add_argument("--json", action="store_true")
    _add_noise_flags(b)
    b.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, OSError) as exc:
        print(f"gtkit: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
