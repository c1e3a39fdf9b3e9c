"""Command-line entry point.

Every subcommand reads a JSON configuration and writes CSV tables plus a
``summary.json`` into the output directory.  Exit status: 0 on success,
2 on configuration errors, 3 when a numerical self-check fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, DegenerateBandsError, NumericalFilterError
from .experiments import (
    ExperimentConfig,
    run_evolution,
    run_limit_compare,
    run_spectrum,
    run_trace_norm,
    run_wave_probe,
)
from .measures import KS_GRID_POINTS

log = logging.getLogger("coinwalk")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _cmd_evolve(cfg: ExperimentConfig, out: Path) -> dict:
    res = run_evolution(cfg)
    for t, dist in res.distributions.items():
        with open(out / f"distribution_t{t}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "probability"])
            for x, p in zip(dist.sites, dist.probs):
                w.writerow([int(x), f"{p:.17g}"])
    return {
        "final_norm": res.final_norm,
        "mean_velocity": res.first_moment,
        "second_moment": res.second_moment,
        "checkpoints": sorted(res.distributions),
    }


def _cmd_limit_compare(cfg: ExperimentConfig, out: Path) -> dict:
    rep = run_limit_compare(cfg)
    rep.theory.to_csv(out / "theory_measure.csv")
    v = np.linspace(-1.0, 1.0, KS_GRID_POINTS)
    with open(out / "cdf_comparison.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["v", "cdf_empirical", "cdf_theory"])
        for row in zip(v, rep.empirical.cdf(v), rep.theory.cdf(v)):
            w.writerow([f"{x:.17g}" for x in row])
    return rep.summary()


def _cmd_wave_probe(cfg: ExperimentConfig, out: Path) -> dict:
    rep = run_wave_probe(cfg)
    rep.forward.to_csv(out / "wave_forward.csv")
    rep.backward.to_csv(out / "wave_backward.csv")
    return rep.summary()


def _cmd_spectrum(cfg: ExperimentConfig, out: Path) -> dict:
    rep = run_spectrum(cfg)
    rep.bound_states.to_json(out / "bound_states.json")
    return rep.summary()


def _cmd_trace_norm(cfg: ExperimentConfig, out: Path) -> dict:
    diag = run_trace_norm(cfg)
    diag.to_csv(out / "trace_norm.csv")
    monotone = bool(np.all(np.diff(diag.partial_sums) >= 0))
    within = None if diag.bounds is None else bool(np.all(diag.partial_sums <= diag.bounds))
    return {
        "radius": diag.radius,
        "partial_sum": diag.partial_sum,
        "bound": diag.bound,
        "origin_term": diag.origin_term,
        "monotone": monotone,
        "within_bound": within,
    }


COMMANDS = {
    "evolve": (_cmd_evolve, "evolve the initial state and write position laws"),
    "limit-compare": (_cmd_limit_compare, "compare the law of X_t/t with the limit law"),
    "wave-probe": (_cmd_wave_probe, "Cauchy residuals of the finite-time wave operators"),
    "spectrum": (_cmd_spectrum, "bound states by truncated diagonalization"),
    "trace-norm": (_cmd_trace_norm, "partial trace norms of the coin perturbation"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coinwalk", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, type=Path, help="JSON experiment configuration")
        p.add_argument("--out", required=True, type=Path, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the configuration seed")
    return parser


def load_config(path: Path, seed: int | None = None) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    cfg = ExperimentConfig.from_dict(data)
    return cfg if seed is None else cfg.with_seed(seed)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config, args.seed)
        args.out.mkdir(parents=True, exist_ok=True)
        result = handler(cfg, args.out)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (NumericalFilterError, DegenerateBandsError) as exc:
        log.error("numerical check failed: %s", exc)
        return EXIT_NUMERICAL
    _write_json(args.out / "summary.json", {"command": args.command, "config": cfg.to_dict(), "result": result})
    log.info("wrote %s", args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
