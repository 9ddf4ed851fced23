"""Seeded replicate runs of meta-estimation or Adam on a test problem."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..adam import Adam
from ..meta import Meta
from ..moments import Moment2
from ..problems import ScriptedTrajectory
from .config import ExperimentConfig

log = logging.getLogger(__name__)

SERIES = ("params", "true_grad", "prop", "diff", "estimate", "est_var", "alpha", "step")


@dataclass
class RunRecord:
    """Per-iteration time series of one replicate.

    Vector series have shape ``(iterations_run, dim)``. ``alpha`` is NaN for
    Adam; for Adam ``estimate`` and ``est_var`` hold the bias-corrected first
    and second moments.
    """

    replicate: int
    status: str = "completed"
    params: list = field(default_factory=list)
    loss: list = field(default_factory=list)
    param_error: list = field(default_factory=list)
    true_grad: list = field(default_factory=list)
    prop: list = field(default_factory=list)
    diff: list = field(default_factory=list)
    estimate: list = field(default_factory=list)
    est_var: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    step: list = field(default_factory=list)

    def finalize(self) -> "RunRecord":
        for name in SERIES + ("loss", "param_error"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        return self

    def __len__(self):
        return len(self.loss)


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replicate)]))


def _maybe(fn, *args):
    try:
        return fn(*args)
    except NotImplementedError:
        return None


# overflow on the way to divergence is expected; the status flag reports it
@np.errstate(over="ignore", invalid="ignore")
def run_single(config: ExperimentConfig, replicate: int = 0) -> RunRecord:
    """Run one replicate and record every intermediate quantity."""
    problem = config.build_problem()
    scripted = isinstance(problem, ScriptedTrajectory)
    rng = replicate_rng(config.seed, replicate)
    lr = config.learning_rate
    use_meta = config.optimizer == "meta"

    if use_meta:
        var_prop = Moment2(config.beta_f)
        var_diff_decoupled = Moment2(config.beta_d)
        meta = Meta(lr=lr, eps_step=config.eps, clip_alpha=not config.no_alpha_clip)
    else:
        adam = Adam(lr=lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps)

    truth = problem.params_truth
    params = problem.params_at(0) if scripted else problem.params_init.copy()
    prev = None
    rec = RunRecord(replicate)

    for i in range(config.iterations):
        if use_meta:
            pair = problem.sample_pair(params, prev, rng)
            # the variance EMAs see either the same pair or an independent one
            vpair = problem.sample_pair(params, prev, rng) if config.independent_variance_samples else pair
            var_prop.step(vpair.prop)
            if config.diff_norm == "global":
                scale = vpair.step_sq_norm
                if scale > 0:
                    var_diff_decoupled.step(vpair.diff / np.sqrt(scale))
            else:
                scale = vpair.step_sq
                if vpair.step_sq_norm > 0:
                    safe = np.where(scale > 0, scale, 1.0)
                    var_diff_decoupled.step(np.where(scale > 0, vpair.diff / np.sqrt(safe), 0.0))
            if var_diff_decoupled.count:
                var_diff = var_diff_decoupled.m2 * (scale if prev is not None else 0.0)
            else:
                var_diff = np.zeros_like(pair.prop)
            delta = meta.step(pair.prop, pair.diff, var_prop.m2, var_diff)
            prop, diff = pair.prop, pair.diff
            estimate, est_var, alpha = meta.mean, meta.var, meta.alpha
        else:
            prop = problem.sample_prop(params, rng)
            diff = np.full_like(prop, np.nan)
            delta = adam.step(prop)
            estimate, est_var, alpha = adam.m_hat, adam.v_hat, np.full_like(prop, np.nan)

        rec.params.append(params.copy())
        rec.loss.append(_maybe(problem.loss, params))
        rec.param_error.append(float(np.linalg.norm(params - truth)) if truth is not None else np.nan)
        grad = _maybe(problem.true_gradient, params)
        rec.true_grad.append(grad if grad is not None else np.full_like(prop, np.nan))
        rec.prop.append(prop.copy())
        rec.diff.append(diff.copy())
        rec.estimate.append(np.array(estimate, dtype=float))
        rec.est_var.append(np.array(est_var, dtype=float))
        rec.alpha.append(np.array(alpha, dtype=float))
        rec.step.append(np.array(delta, dtype=float))

        if scripted:
            new = problem.params_at(i + 1)
        else:
            new = params + delta
            if not np.all(np.isfinite(new)):
                rec.status = "diverged"
                log.info("replicate %d diverged at iteration %d", replicate, i)
                break
            new = problem.project(new)
        prev, params = params, new

    rec.finalize()
    if rec.status != "diverged" and not np.all(np.isfinite(rec.estimate)):
        rec.status = "diverged"
    if rec.status == "completed" and len(rec) and rec.param_error[-1] <= config.converge_threshold:
        rec.status = "converged"
    return rec


def _run_one(args):
    config, r = args
    return run_single(config, r)


def run_replicates(config: ExperimentConfig) -> list[RunRecord]:
    """Run all replicates; output order is by replicate index regardless of workers."""
    jobs = [(config, r) for r in range(config.replicates)]
    if config.workers == 1 or config.replicates == 1:
        return [_run_one(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))
