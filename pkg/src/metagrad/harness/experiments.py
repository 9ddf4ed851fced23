"""Composite experiments: budget-matched comparison, lr sweeps, ablations."""

from __future__ import annotations

import numpy as np

from .config import ConfigError, ExperimentConfig
from .report import ExperimentReport, run_experiment

ABLATIONS = ("no_alpha_clip", "independent_variance_samples", "per_parameter_diff_norm")


def split_budget(budget: int, min_samples: int = 1) -> tuple[int, int]:
    """Split per-iteration evaluations between proportional and diff samples.

    Roughly one diff evaluation per two proportional ones, e.g. 3 -> (2, 1).
    """
    diff = max(budget // 3, min_samples)
    prop = budget - diff
    if prop < min_samples:
        raise ConfigError(f"budget of {budget} evaluations is too small to split (need >= {2 * min_samples})")
    return prop, diff


def final_quarter_score(report: ExperimentReport) -> float:
    """Mean over the last quarter of iterations of the median parameter error."""
    med = report.table["param_error"]["median"]
    tail = med[len(med) - max(1, len(med) // 4):]
    return float(np.nanmean(tail)) if np.any(np.isfinite(tail)) else np.inf


def sweep_lr(config: ExperimentConfig, lrs, label: str | None = None) -> tuple[ExperimentReport, dict]:
    """Run ``config`` at each learning rate and keep the best by final-quarter error."""
    best, scores = None, {}
    for lr in lrs:
        rep = run_experiment(config.replace(lr=float(lr)), label)
        score = final_quarter_score(rep)
        scores[repr(float(lr))] = score
        if best is None or score < best[0]:
            best = (score, rep)
    return best[1], scores


def compare(config: ExperimentConfig, budget: int | None = None, lrs=None) -> tuple[list[ExperimentReport], dict]:
    """Meta vs Adam on the same problem with equal evaluations per iteration.

    Meta spends its budget on proportional plus finite-difference evaluations,
    Adam spends all of it on proportional samples.
    """
    min_samples = config.build_problem().min_samples
    if budget is None:
        probe = config.replace(optimizer="meta").build_problem()
        budget = probe.evaluations(with_diff=True)
    prop, diff = split_budget(budget, min_samples)
    configs = {
        "meta": config.replace(optimizer="meta", spp=prop, diff_spp=diff),
        "adam": config.replace(optimizer="adam", spp=budget, diff_spp=None),
    }
    reports, info = [], {"budget_evaluations": budget, "evaluations": {}, "lr_scores": {}}
    for name, cfg in configs.items():
        problem = cfg.build_problem()
        info["evaluations"][name] = problem.evaluations(with_diff=name == "meta")
        if lrs:
            rep, scores = sweep_lr(cfg, lrs, name)
            info["lr_scores"][name] = scores
        else:
            rep = run_experiment(cfg, name)
        reports.append(rep)
    return reports, info


def ablation_config(config: ExperimentConfig, name: str) -> ExperimentConfig:
    if name == "no_alpha_clip":
        return config.replace(no_alpha_clip=True)
    if name == "independent_variance_samples":
        return config.replace(independent_variance_samples=True)
    if name == "per_parameter_diff_norm":
        return config.replace(diff_norm="per-parameter")
    raise ConfigError(f"unknown ablation {name!r}; valid: {', '.join(ABLATIONS)}")


def ablate(config: ExperimentConfig, names=None) -> list[ExperimentReport]:
    """Baseline meta run followed by one run per ablation switch."""
    base = config.replace(optimizer="meta", no_alpha_clip=False, independent_variance_samples=False,
                          diff_norm="global")
    reports = [run_experiment(base, "baseline")]
    for name in names or ABLATIONS:
        reports.append(run_experiment(ablation_config(base, name), name))
    return reports
