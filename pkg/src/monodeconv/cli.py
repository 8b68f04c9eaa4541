"""Command-line interface: ``generate``, ``estimate``, ``evaluate``, ``sweep``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 estimation error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import harness
from .deconv import DEFAULT_GRID_SIZE
from .errors import ConfigError, MonoDeconvError
from .estimator import EstimatorConfig, estimate
from .matrix_io import load_matrix, read_sidecar, save_matrix, write_sidecar
from .model import ObservationSet, parse_model, parse_noise

log = logging.getLogger("monodeconv")


def _cmd_generate(args):
    model = parse_model(args.model)
    noise = parse_noise(args.noise)
    truth, _, obs = harness.simulate(model, noise, args.m, args.n, args.p, args.seed)
    save_matrix(args.out, obs.z, obs.mask)
    save_matrix(args.truth_out, truth)
    write_sidecar(args.out, {"m": args.m, "n": args.n, "p": args.p, "seed": args.seed,
                             "model": model.spec_string(), "noise": noise.spec_string()})
    return 0


def _cmd_estimate(args):
    values, mask = load_matrix(getattr(args, "in"))
    meta = read_sidecar(getattr(args, "in"))
    obs = ObservationSet(values, mask, meta.get("p"))
    noise_text = args.noise or meta.get("noise")
    noise = parse_noise(noise_text) if noise_text else None
    if args.mode == "noiseless":
        noise = None
    elif args.mode == "known" and (noise is None or noise.family != "gaussian"):
        raise ConfigError("--mode known needs --noise gaussian:SIGMA")
    elif args.mode == "unknown" and noise is not None and noise.family == "none":
        noise = None
    cfg = EstimatorConfig(mode=args.mode, noise=noise, beta=args.beta, gamma=args.gamma,
                          d1=args.d1, d2=args.d2, grid_size=args.grid, seed=args.seed)
    est = estimate(obs, cfg)
    save_matrix(args.out, est.values)
    return 0


def _cmd_evaluate(args):
    est, est_mask = load_matrix(args.est)
    truth, truth_mask = load_matrix(args.truth)
    if not (est_mask.all() and truth_mask.all()):
        raise ConfigError("evaluate needs fully populated matrices")
    print(json.dumps({"mse": harness.mse(est, truth)}))
    return 0


def _cmd_sweep(args):
    cfg = harness.SweepConfig.from_json(args.config, output_path=args.out)
    result = harness.run_sweep(cfg)
    failed = sum(1 for r in result.rows if r["error"])
    log.info("%d cells, %d failed; slopes %s", len(result.rows), failed, result.slopes)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="monodeconv", description="Monotone latent-variable matrix estimation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate a ground truth and its observations")
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=float, required=True)
    g.add_argument("--model", default="curved", help="NAME or NAME:P1,P2,... (default curved)")
    g.add_argument("--noise", default="none", help="none or gaussian:SIGMA")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="observed matrix CSV")
    g.add_argument("--truth-out", required=True, help="ground-truth matrix CSV")
    g.set_defaults(func=_cmd_generate)

    e = sub.add_parser("estimate", help="fill in a partially observed matrix")
    e.add_argument("--mode", choices=("noiseless", "known", "unknown"), required=True)
    e.add_argument("--in", required=True, help="observed matrix CSV (empty field = missing)")
    e.add_argument("--d1", type=float, default=None)
    e.add_argument("--d2", type=float, default=None)
    e.add_argument("--noise", default=None, help="gaussian:SIGMA (known mode)")
    e.add_argument("--beta", type=float, default=None)
    e.add_argument("--gamma", type=float, default=None)
    e.add_argument("--grid", type=int, default=DEFAULT_GRID_SIZE)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", required=True)
    e.set_defaults(func=_cmd_estimate)

    v = sub.add_parser("evaluate", help="print the MSE of an estimate as JSON")
    v.add_argument("--est", required=True)
    v.add_argument("--truth", required=True)
    v.set_defaults(func=_cmd_evaluate)

    s = sub.add_parser("sweep", help="run a Monte-Carlo sweep from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="result CSV")
    s.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.seterr(over="ignore", under="ignore")
    try:
        return args.func(args)
    except MonoDeconvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
