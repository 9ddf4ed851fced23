"""Command line interface: ``metagrad run|compare|ablate|validate``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from ..problems import DomainError
from .config import (DIFF_NORMS, OPTIMIZERS, PROBLEMS, TRAJECTORIES, ConfigError, ExperimentConfig,
                     coerce, load_config_file)
from .experiments import ABLATIONS, ablate, compare
from .report import CSV_HELP, run_experiment, summary_json, to_csv, write_text
from .validation import CHECKS, run_checks

log = logging.getLogger("metagrad")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_CHECK_FAILED = 0, 1, 2, 3

_CHOICES = {"problem": PROBLEMS, "optimizer": OPTIMIZERS, "trajectory": TRAJECTORIES, "diff_norm": DIFF_NORMS}
_HELP = {
    "problem": "test problem",
    "optimizer": "optimiser",
    "spp": "proportional samples per iteration (problem default if omitted)",
    "diff_spp": "samples re-evaluated for the finite difference (<= spp)",
    "init": "initial parameter value (exp-rate: rate; others: every coordinate)",
    "target": "target value (exp-rate: mean; mult-noise: optimum)",
    "lr": "learning rate (per-problem default if omitted)",
    "beta_f": "decay of the proportional-variance EMA",
    "beta_d": "decay of the decoupled finite-difference-variance EMA",
    "no_alpha_clip": "disable alpha clipping",
    "independent_variance_samples": "feed the variance EMAs an independent sample pair",
    "non_zero_centred": "reserved; rejected",
    "diff_norm": "normalise finite differences by the global L2 step or per parameter",
    "trajectory": "optimise, or follow a scripted linear / exponential parameter path",
    "track_index": "parameter coordinate reported in the CSV",
    "workers": "processes used to run replicates",
    "out": "CSV output path (stdout if omitted)",
    "summary": "JSON summary output path",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat 'key = value' config file; flags override it")
    for f in dataclasses.fields(ExperimentConfig):
        flag = "--" + f.name.replace("_", "-")
        kwargs = {"dest": f.name, "default": argparse.SUPPRESS, "help": _HELP.get(f.name)}
        if f.type.startswith("bool"):
            p.add_argument(flag, action="store_true", **kwargs)
        else:
            if f.name in _CHOICES:
                kwargs["choices"] = _CHOICES[f.name]
            p.add_argument(flag, type=lambda raw, name=f.name: coerce(name, raw), **kwargs)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="metagrad", description="Gradient meta-estimation experiments.",
                     epilog=CSV_HELP + " Exit codes: 0 ok, 1 config/usage/IO error, "
                     "2 every replicate diverged, 3 a validation check failed.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one experiment", epilog=CSV_HELP)
    _add_config_flags(run)

    cmp_ = sub.add_parser("compare", help="meta vs Adam at equal evaluations per iteration", epilog=CSV_HELP)
    _add_config_flags(cmp_)
    cmp_.add_argument("--budget-samples", type=int, help="integrand evaluations per iteration for each optimiser")
    cmp_.add_argument("--sweep-lr", help="comma-separated learning rates; the best per optimiser is kept")

    abl = sub.add_parser("ablate", help="baseline meta vs ablation switches", epilog=CSV_HELP)
    _add_config_flags(abl)
    abl.add_argument("--ablation", action="append", choices=ABLATIONS,
                     help="ablation to run (repeatable); default: the switches given, else all")

    val = sub.add_parser("validate", help="run the statistical invariant checks")
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--check", action="append", choices=tuple(CHECKS))
    parser.subcommands = {"run": run, "compare": cmp_, "ablate": abl, "validate": val}
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = load_config_file(args.config) if getattr(args, "config", None) else {}
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    values.update({k: v for k, v in vars(args).items() if k in names})
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _emit(reports, config: ExperimentConfig, **extra) -> int:
    status = EXIT_OK
    csv_text = to_csv(reports)
    errors = []
    # write each output independently so one failure does not lose the other
    if config.out:
        try:
            write_text(config.out, csv_text)
        except OSError as exc:
            errors.append(str(exc))
    else:
        sys.stdout.write(csv_text)
    if config.summary:
        try:
            write_text(config.summary, summary_json(reports, **extra))
        except OSError as exc:
            errors.append(str(exc))
    for msg in errors:
        print(f"error: {msg}", file=sys.stderr)
        status = EXIT_CONFIG
    return status


def _ablations_from(args, config: ExperimentConfig):
    if args.ablation:
        return args.ablation
    picked = [name for name, on in (("no_alpha_clip", config.no_alpha_clip),
                                    ("independent_variance_samples", config.independent_variance_samples),
                                    ("per_parameter_diff_norm", config.diff_norm == "per-parameter")) if on]
    return picked or None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args, unknown = parser.parse_known_args(argv)
        if unknown:
            valid = sorted(opt for opt in parser.subcommands[args.command]._option_string_actions
                           if opt.startswith("--"))
            raise UsageError(f"metagrad {args.command}: unrecognized arguments: {' '.join(unknown)}\n"
                             f"valid flags: {' '.join(valid)}")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")

    if args.command == "validate":
        failed = 0
        for name, ok, detail in run_checks(args.seed, args.check):
            print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
            failed += not ok
        return EXIT_CHECK_FAILED if failed else EXIT_OK

    try:
        config = config_from_args(args)
        extra = {}
        if args.command == "run":
            reports = [run_experiment(config)]
            gate = reports
        elif args.command == "compare":
            lrs = None
            if args.sweep_lr:
                try:
                    lrs = [float(x) for x in args.sweep_lr.split(",") if x.strip()]
                except ValueError:
                    raise ConfigError(f"bad --sweep-lr list: {args.sweep_lr!r}") from None
            reports, extra = compare(config, args.budget_samples, lrs)
            gate = reports
        else:
            reports = ablate(config, _ablations_from(args, config))
            gate = reports[:1]
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    status = _emit(reports, config, **extra)
    if status == EXIT_OK and any(rep.all_diverged for rep in gate):
        print("every replicate diverged", file=sys.stderr)
        return EXIT_DIVERGED
    return status


if __name__ == "__main__":
    sys.exit(main())
