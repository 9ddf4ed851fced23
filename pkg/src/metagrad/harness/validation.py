"""Statistical invariant checks run by ``metagrad validate``."""

from __future__ import annotations

import zlib

import numpy as np

from ..meta import Meta, compute_alpha
from ..moments import Moment2
from ..problems import MiniRenderProblem, MultNoiseQuadratic
from .config import ExperimentConfig
from .report import run_experiment, to_csv


def check_moment2_closed_form(rng):
    decay, n = 0.9, 1000
    x = rng.normal(size=(n, 3))
    m = Moment2(decay)
    for xi in x:
        m.step(xi)
    w = decay ** np.arange(n - 1, -1, -1) * (1 - decay)
    closed = (w[:, None] * x**2).sum(0) / (1 - decay**n)
    err = np.max(np.abs(m.m2 / closed - 1))
    return err < 1e-10, f"max relative error {err:.2e}"


def check_moment2_long_run(rng):
    v = 2.5
    m = Moment2(0.9)
    total = 0.0
    n = 100_000
    for xi in rng.normal(scale=np.sqrt(v), size=n):
        total += float(m.step(xi))
    rel = abs(total / n / v - 1)
    return rel < 0.05, f"mean m2 / v - 1 = {rel:.3f}"


def check_harmonic_variance(rng):
    v, n = 1.7, 10_000
    meta = Meta(lr=1.0)
    props = rng.normal(size=n)
    worst = 0.0
    running = 0.0
    for i, p in enumerate(props):
        meta.step(np.array([p]), np.zeros(1), v, 0.0)
        running += (p - running) / (i + 1)
        worst = max(worst, abs(meta.var[0] - v / (i + 1)), abs(meta.mean[0] - running))
    return worst < 1e-12, f"max deviation {worst:.2e}"


def check_alpha_chain(rng):
    prev = np.array([-np.inf])
    worst = 0.0
    for i in range(101):
        prev = compute_alpha(1.0, 0.0, 0.0, prev)
        worst = max(worst, abs(prev[0] - (1 - 1 / (i + 1))))
    return worst < 1e-12, f"max deviation {worst:.2e}"


def _diff_unbiased(problem, now, prev, rng, n):
    diffs = np.array([problem.sample_pair(now, prev, rng).diff for _ in range(n)])
    want = problem.true_gradient(now) - problem.true_gradient(prev)
    se = diffs.std(0, ddof=1) / np.sqrt(n)
    z = np.abs(diffs.mean(0) - want) / np.where(se > 0, se, 1.0)
    return bool(np.all(z <= 3)), f"max |z| = {z.max():.2f}"


def check_diff_unbiased_mult_noise(rng):
    p = MultNoiseQuadratic(dim=3, target=[0.0, 1.0, -1.0], noise_amp=1.0)
    return _diff_unbiased(p, np.array([1.0, 0.5, 0.2]), np.array([0.9, 0.6, 0.25]), rng, 100_000)


def check_diff_unbiased_mini_render(rng):
    p = MiniRenderProblem(pixel_count=4, spp=2)
    now = np.array([0.3, 0.5, 0.7, 0.9])
    return _diff_unbiased(p, now, now - 0.05, rng, 100_000)


def check_quadratic_step_scaling(rng):
    p = MultNoiseQuadratic(dim=1, noise_amp=1.0)
    now = np.array([1.0])
    var = {}
    for h in (1e-1, 1e-2, 1e-3):
        diffs = np.array([p.sample_pair(now, now - h, rng).diff[0] for _ in range(20_000)])
        var[h] = diffs.var(ddof=1) / h**2
    ratios = [var[h] / var[1e-1] for h in var]
    ok = all(abs(r - 1) <= 0.25 for r in ratios)
    return ok, "normalised variance ratios " + ", ".join(f"{r:.3f}" for r in ratios)


def check_true_variance_mc(rng):
    p = MultNoiseQuadratic(dim=1, noise_amp=1.0)
    exact = p.true_variance(np.array([2.0]), 0.1)
    mc = p.true_variance(np.array([2.0]), 0.1, mode="mc", replicates=1000, rng=rng)
    rel = max(abs(mc[0][0] / exact[0][0] - 1), abs(mc[1][0] / exact[1][0] - 1))
    return rel < 0.15, f"max relative deviation {rel:.3f}"


def check_determinism(rng):
    cfg = ExperimentConfig(problem="mini-render", iterations=20, replicates=3, seed=11)
    a = to_csv([run_experiment(cfg)])
    b = to_csv([run_experiment(cfg)])
    return a == b, f"{len(a)} bytes compared"


CHECKS = {
    "moment2_closed_form": check_moment2_closed_form,
    "moment2_long_run_mean": check_moment2_long_run,
    "harmonic_variance_reduction": check_harmonic_variance,
    "alpha_clip_chain": check_alpha_chain,
    "diff_unbiased_mult_noise": check_diff_unbiased_mult_noise,
    "diff_unbiased_mini_render": check_diff_unbiased_mini_render,
    "quadratic_step_scaling": check_quadratic_step_scaling,
    "true_variance_mc_vs_exact": check_true_variance_mc,
    "determinism": check_determinism,
}


def run_checks(seed: int = 0, names=None):
    """Yield ``(name, passed, detail)`` for each selected check."""
    for name in names or CHECKS:
        rng = np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(name.encode())]))
        ok, detail = CHECKS[name](rng)
        yield name, bool(ok), detail
