"""Command line front end for the experiment harness.

Three subcommands mirror the library entry points:

    spadp run <config.json>                  execute one scenario
    spadp sweep --eps 0.01,0.001 <config.json>   repeat across time-scale ratios
    spadp compare <config.json>              sample-count arithmetic only

Common flags: --outdir overrides where artifacts land, --seed replaces the
exploration seed, --dt replaces the sampling rate.  Exit status is 0 on
success, 2 when learning does not converge (or certifies unstable), and 1
for configuration or runtime errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .harness import ConfigError, ExperimentConfig, RunReport, compare_dims, run, sweep_epsilon
from .learner import LearnDivergence
from .sim import SimulationBlowUp

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spadp",
        description="Learn reduced-order LQR gains from simulated trajectories.")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress and wall-clock timings to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="path to the experiment JSON file")
        p.add_argument("--outdir", default=None,
                       help="directory for report.json and CSV artifacts")
        p.add_argument("--seed", type=int, default=None,
                       help="override the exploration seed")
        p.add_argument("--dt", type=float, default=None,
                       help="override the sampling interval")

    p_run = sub.add_parser("run", help="execute one scenario end to end")
    common(p_run)

    p_sweep = sub.add_parser("sweep",
                             help="run the scenario for several epsilon values")
    p_sweep.add_argument("--eps", required=True,
                         help="comma-separated epsilon list, e.g. 0.01,0.001")
    common(p_sweep)

    p_cmp = sub.add_parser("compare",
                           help="reduced vs full-order sample accounting")
    common(p_cmp)
    return parser


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config)
    if args.seed is not None or args.dt is not None or args.outdir is not None:
        cfg = cfg.with_overrides(seed=args.seed, dt=args.dt, outdir=args.outdir)
    return cfg


def _fmt(arr) -> str:
    return np.array2string(np.asarray(arr), precision=4, suppress_small=True,
                           max_line_width=120)


def _print_run(rep: RunReport) -> None:
    r = rep.report
    print(f"scenario: {r['scenario']}")
    print(f"config hash: {r['config_hash']}")
    print(f"converged: {r['converged']}  stable: {r['stable']}")
    if rep.gains.get("K") is not None:
        print(f"K =\n{_fmt(rep.gains['K'])}")
    if rep.gains.get("per_cluster"):
        print(f"per-cluster gains: {_fmt(rep.gains['per_cluster'])}")
    if r.get("costs"):
        print(f"J (simulated) = {r['costs']['simulated']:.4f}   "
              f"J (exact) = {r['costs']['lyapunov']:.4f}")
    if r.get("poles"):
        print(f"closed-loop spectral abscissa = "
              f"{r['poles']['spectral_abscissa']:.4f}")
    if r.get("observer"):
        print(f"observer error bound = {r['observer']['bound']:.4f} "
              f"(past t = {r['observer']['tube_start']:g})")
    if rep.outdir is not None:
        print(f"artifacts: {rep.outdir}/report.json")


def _print_sweep(rep: RunReport) -> None:
    r = rep.report
    print(f"scenario: {r['scenario']} (sweep)")
    print(f"config hash: {r['config_hash']}")
    print(f"reference gain =\n{_fmt(r['reference_gain'])}")
    for e in r["runs"]:
        print(f"  eps={e['epsilon']:g}: |K - K_ref| = {e['gain_distance']:.5f}  "
              f"max|y - y_s| = {e['trajectory_gap']:.5f}  "
              f"converged={e['converged']}")
    for rt in r["ratios"]:
        gain = rt["gain_ratio"]
        gap = rt["gap_ratio"]
        print(f"  {rt['epsilon_from']:g} -> {rt['epsilon_to']:g}: "
              f"gain ratio = {gain:.2f}  gap ratio = {gap:.2f}"
              if gain is not None and gap is not None else
              f"  {rt['epsilon_from']:g} -> {rt['epsilon_to']:g}: incomplete")
    if rep.outdir is not None:
        print(f"artifacts: {rep.outdir}/report.json")


def _print_compare(rep: RunReport) -> None:
    r = rep.report
    print(f"scenario: {r['scenario']} (dimension comparison, dt = {r['dt']:g})")
    for label in ("reduced", "full"):
        blk = r[label]
        print(f"  {label:8s} dim={blk['dim']:3d}  samples={blk['samples']:5d}  "
              f"minimal horizon={blk['horizon_s']:g} s  "
              f"rank bound={blk['rank_bound']}")
    print(f"  sample reduction factor: {r['reduction_factor']:g}x")
    if rep.outdir is not None:
        print(f"artifacts: {rep.outdir}/report.json")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
        if args.command == "run":
            rep = run(cfg)
            _print_run(rep)
        elif args.command == "sweep":
            try:
                eps_list = [float(tok) for tok in args.eps.split(",")
                            if tok.strip()]
            except ValueError as exc:
                raise ConfigError(f"bad --eps list '{args.eps}'") from exc
            rep = sweep_epsilon(cfg, eps_list)
            _print_sweep(rep)
        else:
            rep = compare_dims(cfg)
            _print_compare(rep)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (LearnDivergence, SimulationBlowUp) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if not rep.succeeded:
        print("learning did not converge to a certified stabilizing gain",
              file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
