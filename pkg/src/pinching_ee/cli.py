"""Command-line entry point: ``pinching-ee --mode experiment --experiment fig2 --out results/``."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

from .ao import solve_scheme
from .config import ConfigError, build_spec, override, parse_config
from .harness import (
    PRESETS,
    ExperimentError,
    emit_results,
    generate_users,
    run_experiment,
    trial_streams,
)

logger = logging.getLogger("pinching_ee")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pinching-ee",
        description="EE maximisation for uplink NOMA pinching-antenna systems.",
        allow_abbrev=False,
    )
    p.add_argument("--mode", choices=("solve", "experiment"), default="experiment")
    p.add_argument("--experiment", choices=(*PRESETS, "custom"), default="custom",
                   help="preset sweep grid; 'custom' takes the sweep from the config")
    p.add_argument("--config", type=Path, default=None, help="flat key = value config file")
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--seed", type=int, default=None, help="override master_seed")
    p.add_argument("--trials", type=int, default=None, help="override trials per sweep point")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--log-level", default="INFO", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    return p


def _load_spec(args):
    spec = parse_config(args.config) if args.config is not None else build_spec({})
    if args.seed is not None and args.seed < 0:
        raise ConfigError("must be >= 0", "--seed")
    if args.trials is not None and args.trials < 1:
        raise ConfigError("must be >= 1", "--trials")
    if args.workers < 1:
        raise ConfigError("must be >= 1", "--workers")
    spec = override(spec, seed=args.seed, trials=args.trials)
    if args.experiment != "custom":
        spec = spec.with_preset(args.experiment)
    return spec


def _solve(spec, out_dir: Path) -> int:
    scenario, cap = spec.point(spec.sweep_values[0])
    user_rng, init_seed, pso_seed = trial_streams(spec.master_seed, 0)
    users = generate_users(scenario, spec.n_users, user_rng, cap)
    cfg = dataclasses.replace(spec.ao, seed=init_seed, pso=dataclasses.replace(spec.ao.pso, rng_seed=pso_seed))

    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "solution.csv"
    flagged = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("scheme", "antenna_x_m", "ee", "sum_rate", "total_power_w", "converged", "powers_w"))
        print(f"{'scheme':<16} {'x_ant [m]':>10} {'EE [bit/J/Hz]':>14} {'active':>6}")
        for kind in spec.schemes:
            sol = solve_scheme(kind, scenario, users, cfg)
            flagged += sol.flagged
            p = sol.allocation.powers_w
            w.writerow((kind.value, format(sol.antenna.x_m, ".17e"), format(sol.ee_bits_per_joule, ".17e"),
                        format(sol.sum_rate_bits_per_s_hz, ".17e"), format(sol.total_power_w, ".17e"),
                        int(sol.converged), ";".join(format(v, ".17e") for v in p)))
            print(f"{kind.value:<16} {sol.antenna.x_m:>10.3f} {sol.ee_bits_per_joule:>14.4f} {int((p > 0).sum()):>6}")
    logger.info("wrote %s", path)
    return 1 if flagged else 0


def _experiment(spec, out_dir: Path, workers: int) -> int:
    def progress(i, value):
        logger.info("sweep point %d/%d (%s = %g) done", i + 1, len(spec.sweep_values), spec.sweep_param, value)

    result = run_experiment(spec, workers=workers, progress=progress)
    csv_path, manifest = emit_results(result, out_dir)
    logger.info("wrote %s and %s", csv_path, manifest)

    schemes = result.schemes
    print(f"{spec.sweep_param:>16} " + " ".join(f"{s:>16}" for s in schemes))
    rows = result.rows()
    for i, v in enumerate(result.sweep_values):
        cells = rows[i * len(schemes):(i + 1) * len(schemes)]
        print(f"{v:>16g} " + " ".join(f"{c.ee_mean:>16.4f}" for c in cells))
    if result.failed:
        logger.error("too many flagged (non-converged) solves; see 'flagged' column")
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = _load_spec(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.mode == "solve":
            return _solve(spec, args.out)
        return _experiment(spec, args.out, args.workers)
    except (ExperimentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
