"""Command-line entry point ``sphlrd``.

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
from pathlib import Path
import sys
import warnings

import numpy as np

from .harmonics import SieveBasis
from .harness import (
    ConfigError,
    ExperimentConfig,
    emit_table,
    load_config,
    power_law_innovations,
    run_consistency_experiment,
    run_power_experiment,
    run_size_experiment,
    test_sieve,
    write_sidecar,
)
from .lrdtest import NullMoments, default_projections, null_calibration
from .observe import observe, sample_uniform_sphere, spatial_budget, write_observations_csv
from .reconstruct import design_matrix, reconstruct_series
from .simulate import CoefficientSeries, example_model, null_spharma11_model, simulate_series
from .spectra import WeightKernel, bandwidth

EXIT_CONFIG = 2
EXIT_IO = 3


def _config(args) -> ExperimentConfig:
    overrides = {"seed": args.seed, "R": args.reps, "threads": args.threads}
    if args.config is None:
        return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
    return load_config(args.config, **overrides)


def _models(cfg: ExperimentConfig):
    sieve = test_sieve(cfg)
    truth = SieveBasis(sieve.max_degree + cfg.buffer_degrees)
    lam = power_law_innovations(truth.max_degree, cfg.innovation_decay)
    null = null_spharma11_model(truth, lam)
    model = null if cfg.example == 0 else example_model(cfg.example, sieve, cfg.buffer_degrees, lam)
    return sieve, null, model


def _pipeline(cfg: ExperimentConfig):
    sieve, null, model = _models(cfg)
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(3)]
    x = simulate_series(model, cfg.T, cfg.burn_in, streams[0])
    loc = sample_uniform_sphere(spatial_budget(cfg.T, cfg.gamma), streams[1])
    obs = observe(x, loc, cfg.sigma2, streams[2])
    design = design_matrix(loc, sieve)
    return sieve, null, x, obs, design


def write_series_csv(series: CoefficientSeries, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", *(f"c{i}" for i in range(series.k))])
            for t, row in enumerate(series.values):
                w.writerow([t, *(f"{v:.12g}" for v in row)])
    except OSError as exc:
        raise OSError(f"cannot write series to {path}: {exc}") from exc


def cmd_simulate(args, cfg, say):
    _, _, model = _models(cfg)
    x = simulate_series(model, cfg.T, cfg.burn_in, cfg.seed)
    write_series_csv(x, args.out)
    say(f"wrote {cfg.T} x {x.k} coefficients to {args.out}")


def cmd_reconstruct(args, cfg, say):
    sieve, _, _, obs, design = _pipeline(cfg)
    xh = reconstruct_series(obs, sieve, design)
    write_series_csv(xh, args.out)
    if args.observations:
        write_observations_csv(obs, args.observations)
    say(f"reconstructed {cfg.T} snapshots from M={obs.M} locations (rank {design.rank}/{design.k})")


def cmd_test(args, cfg, say):
    sieve, null, _, obs, design = _pipeline(cfg)
    xh = reconstruct_series(obs, sieve, design)
    wk = WeightKernel(bandwidth(cfg.T, cfg.beta))
    ref = NullMoments(null, cfg.T, wk).reference(design, obs.locations, cfg.sigma2) if cfg.calibration == "exact" else None
    out = null_calibration(xh, wk, default_projections(sieve, cfg.seed, paired=cfg.paired), cfg.alpha, reference=ref)
    try:
        Path(args.out).write_text(json.dumps(out.to_record(), indent=1))
    except OSError as exc:
        raise OSError(f"cannot write outcome to {args.out}: {exc}") from exc
    say("Z = " + ", ".join(f"{z:.3f}" for z in out.z))


def _experiment(runner):
    def cmd(args, cfg, say):
        table = runner(cfg, progress=say)
        emit_table(table, args.out)
        if args.json:
            write_sidecar(table, cfg, args.json)
        say(f"wrote {args.out}")
    return cmd


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sphlrd", description="LRD testing for spherical functional time series")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "simulate": (cmd_simulate, "simulate a coefficient series"),
        "reconstruct": (cmd_reconstruct, "simulate, observe and reconstruct a series"),
        "test": (cmd_test, "run the LRD test on one simulated data set"),
        "size": (_experiment(run_size_experiment), "empirical size table"),
        "power": (_experiment(run_power_experiment), "empirical power table"),
        "consistency": (_experiment(run_consistency_experiment), "median HS norms along T_grid"),
    }
    for name, (fn, help_) in commands.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="key=value configuration file")
        p.add_argument("--out", type=Path, required=True, help="output path")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--reps", type=int, help="override the replicate count R")
        p.add_argument("--threads", type=int, help="worker processes")
        p.add_argument("--quiet", action="store_true", help="suppress progress messages")
        if name in ("size", "power", "consistency"):
            p.add_argument("--json", type=Path, help="per-replicate JSON sidecar")
        if name == "reconstruct":
            p.add_argument("--observations", type=Path, help="also write the raw observations CSV")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    def say(msg):
        if not args.quiet:
            print(msg, file=sys.stderr)

    try:
        cfg = _config(args)
        with warnings.catch_warnings():
            if args.quiet:
                warnings.simplefilter("ignore")
            args.func(args, cfg, say)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
