"""Batch command-line front end.

Subcommands: ``fit`` runs the full pipeline on a CSV matrix and writes a
run directory; ``simulate`` writes benchmark synthetic datasets with a
truth sidecar; ``relabel`` re-runs ECR relabeling on a stored raw trace;
``score`` computes the adjusted Rand index between two label files.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import shutil
import sys
from pathlib import Path

import numpy as np

from . import api, io, postprocess
from .errors import ConfigError, DataError, MfaclustError, NumericalError
from .linalg import RandomStream
from .sampler import RunSchedule, TemperingLadder
from .simulate import (
    adjusted_rand_index,
    scenario1_error_inverse_variance,
    scenario2_error_inverse_variance,
    sim_scenario1,
    sim_scenario2,
)
from .types import PARAMETERIZATIONS, PriorConfig


def parse_q_values(spec: str) -> list[int]:
    """Factor-dimension list: '2', '1,3,5' or a range '1:5'."""
    spec = spec.strip()
    try:
        if ":" in spec:
            lo, hi = spec.split(":")
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(tok) for tok in spec.split(",") if tok]
    except ValueError:
        raise ConfigError(f"cannot parse factor range {spec!r}") from None
    if not values or any(v < 1 for v in values):
        raise ConfigError(f"factor dimensions must be positive, got {spec!r}")
    return values


def parse_models(spec: str) -> list[str]:
    codes = [tok.strip().upper() for tok in spec.split(",") if tok.strip()]
    bad = [c for c in codes if c not in PARAMETERIZATIONS]
    if bad or not codes:
        raise ConfigError(f"unknown parameterization(s): {','.join(bad) or spec!r}")
    # canonical table order, duplicates dropped
    return [c for c in PARAMETERIZATIONS if c in codes]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfaclust",
        description="Model-based clustering with overfitted Bayesian "
                    "mixtures of factor analyzers")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit the model grid to a CSV matrix")
    fit.add_argument("--data", required=True, help="numeric CSV, rows = observations")
    fit.add_argument("--out-dir", required=True,
                     help="report directory (must not already exist)")
    fit.add_argument("--models", default=",".join(PARAMETERIZATIONS),
                     help="comma-separated parameterization subset (default: all 8)")
    fit.add_argument("--q", default="1:3",
                     help="factor dimensions, e.g. 2 or 1,3 or 1:5")
    fit.add_argument("--kmax", type=int, default=20,
                     help="components in the overfitted mixture (default 20)")
    fit.add_argument("--n-chains", type=int, default=4,
                     help="heated chains per model (default 4)")
    fit.add_argument("--gamma", type=float, default=1.0,
                     help="target-chain Dirichlet mass (default 1)")
    fit.add_argument("--delta", type=float, default=1.0,
                     help="tempering ladder increment (default 1)")
    fit.add_argument("--dir-prior-alphas", default=None,
                     help="explicit per-chain Dirichlet masses, overrides "
                          "gamma/delta (comma-separated, increasing)")
    fit.add_argument("--m-cycles", type=int, default=700)
    fit.add_argument("--burn-cycles", type=int, default=100)
    fit.add_argument("--iter-per-cycle", type=int, default=10)
    fit.add_argument("--warm-up", type=int, default=5000)
    fit.add_argument("--warm-up-overfitting", type=int, default=500)
    fit.add_argument("--alpha-sigma", type=float, default=0.5)
    fit.add_argument("--beta-sigma", type=float, default=0.5)
    fit.add_argument("--g", type=float, default=0.5)
    fit.add_argument("--h", type=float, default=0.5)
    fit.add_argument("--no-normalize", action="store_true",
                     help="skip z-standardization (on by default)")
    fit.add_argument("--parallel-models", type=int, default=1,
                     help="worker processes across grid cells")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--rm-dir", action="store_true",
                     help="delete the run directory after printing the "
                          "summary (default: keep)")

    sim = sub.add_parser("simulate", help="write a synthetic benchmark dataset")
    sim.add_argument("--scenario", type=int, choices=(1, 2), required=True)
    sim.add_argument("--clusters", type=int, required=True)
    sim.add_argument("--factors", type=int, required=True)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--p", type=int, required=True)
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--same-sigma", action="store_true",
                     help="share the error variances across clusters")
    sim.add_argument("--weights", default=None,
                     help="explicit true mixing proportions (comma-separated)")

    rel = sub.add_parser("relabel", help="re-run ECR relabeling on a stored trace")
    rel.add_argument("--run", required=True, help="existing fit run directory")
    rel.add_argument("--out", required=True, help="output directory for class.csv")
    rel.add_argument("--k", type=int, default=None,
                     help="condition on this alive count instead of the mode")

    score = sub.add_parser("score", help="adjusted Rand index of two label files")
    score.add_argument("--labels-a", required=True)
    score.add_argument("--labels-b", required=True)
    return parser


def run_config_from_args(args):
    models = parse_models(args.models)
    q_values = parse_q_values(args.q)
    ladder = None
    if args.dir_prior_alphas is not None:
        masses = [float(tok) for tok in args.dir_prior_alphas.split(",") if tok]
        if len(masses) < 1 or any(np.diff(masses) <= 0) or masses[0] <= 0:
            raise ConfigError("dir-prior-alphas must be increasing and positive")
        try:
            ladder = TemperingLadder.from_masses(masses, args.kmax)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        gamma = masses[0] * args.kmax
        n_chains = len(masses)
        delta = args.delta
    else:
        gamma, delta, n_chains = args.gamma, args.delta, args.n_chains
    prior = PriorConfig(kmax=args.kmax, gamma=gamma, delta=delta,
                        n_chains=n_chains, alpha_sigma=args.alpha_sigma,
                        beta_sigma=args.beta_sigma, g=args.g, h=args.h)
    try:
        schedule = RunSchedule(m_cycles=args.m_cycles, burn_cycles=args.burn_cycles,
                               iter_per_cycle=args.iter_per_cycle,
                               warm_up=args.warm_up,
                               warm_up_overfitting=args.warm_up_overfitting)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return prior, schedule, models, q_values, ladder


def parse_run_config(argv) -> argparse.Namespace:
    """Parse and validate a `fit` command line; raises ConfigError on any
    invalid flag combination."""
    args = build_parser().parse_args(argv)
    if args.command == "fit":
        run_config_from_args(args)
        if Path(args.out_dir).exists():
            raise ConfigError(f"output directory already exists: {args.out_dir}")
    return args


def _cmd_fit(args) -> int:
    prior, schedule, models, q_values, ladder = run_config_from_args(args)
    out_dir = Path(args.out_dir)
    if out_dir.exists():
        raise ConfigError(f"output directory already exists: {out_dir}")
    data = io.ingest_csv(args.data)
    config = {
        "data": args.data, "models": ",".join(models),
        "q": ",".join(map(str, q_values)), "kmax": prior.kmax,
        "n_chains": prior.n_chains, "gamma": prior.gamma, "delta": prior.delta,
        **({"dir_prior_alphas": args.dir_prior_alphas}
           if args.dir_prior_alphas is not None else {}),
        "m_cycles": schedule.m_cycles, "burn_cycles": schedule.burn_cycles,
        "iter_per_cycle": schedule.iter_per_cycle, "warm_up": schedule.warm_up,
        "warm_up_overfitting": schedule.warm_up_overfitting,
        "alpha_sigma": prior.alpha_sigma, "beta_sigma": prior.beta_sigma,
        "g": prior.g, "h": prior.h, "normalize": not args.no_normalize,
    }
    out_dir.mkdir(parents=True)
    report = api.fit(
        data, q_values=q_values, models=models, prior=prior, schedule=schedule,
        seed=args.seed, parallel_models=args.parallel_models,
        normalize=not args.no_normalize, log_dir=out_dir / "logs",
        ladder=ladder, config=config)
    io.emit_report(report, out_dir)
    print(api.print_table(report))
    if args.rm_dir:
        shutil.rmtree(out_dir)
    return 0


def _cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stream = RandomStream(args.seed)
    weights = None
    if args.weights is not None:
        weights = np.array([float(t) for t in args.weights.split(",")])
    K, p = args.clusters, args.p
    if args.scenario == 1:
        s_inv = scenario1_error_inverse_variance(K, p)
        data, z, params = sim_scenario1(K, p, args.factors, args.n, s_inv,
                                        args.same_sigma, stream, weights=weights)
    else:
        s_inv = scenario2_error_inverse_variance(K, p, stream.substream(0))
        data, z, params = sim_scenario2(K, p, args.factors, args.n, s_inv,
                                        args.same_sigma, stream, weights=weights)
    io.write_matrix(out / "data.csv", data.x, header=list(data.names()))
    io.write_matrix(out / "true_z.csv", (z + 1).reshape(-1, 1), header=["label"])
    io.write_matrix(out / "true_weights.csv", params.w.reshape(-1, 1),
                    header=["weight"])
    (out / "generator.txt").write_text(
        f"scenario={args.scenario}\nclusters={K}\nfactors={args.factors}\n"
        f"n={args.n}\np={p}\nseed={args.seed}\nsame_sigma={args.same_sigma}\n")
    print(f"wrote {args.n} x {p} dataset with {K} clusters to {out}")
    return 0


def _cmd_relabel(args) -> int:
    trace = io.load_raw_trace(args.run)
    if args.k is not None:
        k_map = args.k
        prob = float(np.mean(trace.alive_counts == k_map))
    else:
        k_map, prob = postprocess.map_alive_count(trace)
    rel = postprocess.ecr_relabel(trace, k_map)
    labels, prob_i = postprocess.single_best_clustering(rel)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = np.column_stack([np.arange(len(labels)) + 1, labels + 1, prob_i])
    with open(out / "class.csv", "w", newline="") as fh:
        fh.write("row,label,probability\n")
        for r, lab, pr in rows:
            fh.write(f"{int(r)},{int(lab)},{io.FLOAT_FMT % pr}\n")
    print(f"relabeled {rel.n_draws} draws at K={k_map} "
          f"(posterior probability {prob:.3f}); wrote {out / 'class.csv'}")
    return 0


def _cmd_score(args) -> int:
    a = io.read_labels(args.labels_a)
    b = io.read_labels(args.labels_b)
    print(f"ARI={adjusted_rand_index(a, b):.6f}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"fit": _cmd_fit, "simulate": _cmd_simulate,
                "relabel": _cmd_relabel, "score": _cmd_score}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, MfaclustError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
