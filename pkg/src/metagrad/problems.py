"""Synthetic stochastic objectives with paired gradient estimators.

Every problem draws a batch of random numbers per iteration and evaluates its
gradient estimator on that batch. The finite-difference sample re-evaluates
the estimator at the previous parameters with the *same* draws (common random
numbers), so its variance shrinks with the step size.

Each problem also knows its exact gradient, loss and (where tractable) the
exact variances of both estimators, which the tests and the harness use as
ground truth.
"""

from __future__ import annotations

import numpy as np

from .meta import GradientSamplePair


class DomainError(ValueError):
    """Parameters outside the problem's domain."""


class Problem:
    """Base class: subclasses provide ``draw`` and ``estimate``."""

    name = "problem"
    min_samples = 1

    def __init__(self, dim: int, spp: int = 1, diff_spp: int | None = None):
        self.dim = int(dim)
        self.spp = int(spp)
        self.diff_spp = self.spp if diff_spp is None else int(diff_spp)
        if self.spp < self.min_samples:
            raise ValueError(f"{self.name} needs at least {self.min_samples} samples per iteration, got {self.spp}")
        if not self.min_samples <= self.diff_spp <= self.spp:
            raise ValueError(f"diff_spp must lie in [{self.min_samples}, {self.spp}], got {self.diff_spp}")

    # -- to be provided by subclasses -------------------------------------
    params_init: np.ndarray
    params_truth: np.ndarray | None = None

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def estimate(self, params: np.ndarray, draws: np.ndarray, n: int | None = None) -> np.ndarray:
        """Gradient estimate at ``params`` from the first ``n`` draws."""
        raise NotImplementedError

    def true_gradient(self, params) -> np.ndarray:
        raise NotImplementedError(f"{self.name} has no closed-form gradient")

    def loss(self, params) -> float:
        raise NotImplementedError(f"{self.name} has no closed-form loss")

    def exact_variance(self, params, step):
        raise NotImplementedError(f"{self.name} has no closed-form variance")

    def check(self, params) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} parameters, got shape {params.shape}")
        return params

    def project(self, params) -> np.ndarray:
        return params

    # -- shared machinery ---------------------------------------------------
    def evaluations(self, with_diff: bool) -> int:
        """Integrand evaluations consumed per iteration."""
        return self.spp + (self.diff_spp if with_diff else 0)

    def sample_prop(self, params, rng) -> np.ndarray:
        params = self.check(params)
        return self.estimate(params, self.draw(rng))

    def sample_pair(self, params_now, params_prev, rng) -> GradientSamplePair:
        params_now = self.check(params_now)
        if params_prev is not None:
            params_prev = self.check(params_prev)
        draws = self.draw(rng)
        prop = self.estimate(params_now, draws)
        if params_prev is None:
            zeros = np.zeros(self.dim)
            return GradientSamplePair(prop, zeros, 0.0, zeros.copy())

        n = self.diff_spp
        now = prop if n == self.spp else self.estimate(params_now, draws, n)
        diff = now - self.estimate(params_prev, draws, n)
        step = params_now - params_prev
        return GradientSamplePair(prop, diff, float(step @ step), step * step)

    def true_variance(self, params, step, mode: str = "exact", replicates: int = 1000, rng=None):
        """Variances of the proportional and finite-difference estimators.

        ``step`` is the parameter step the difference is taken across, i.e.
        the previous parameters are ``params - step``. ``mode="mc"`` measures
        both over ``replicates`` independent sample pairs.
        """
        params = self.check(params)
        step = np.broadcast_to(np.asarray(step, dtype=float), params.shape)
        if mode == "exact":
            return self.exact_variance(params, step)
        if mode != "mc":
            raise ValueError(f"unknown variance mode {mode!r}; expected 'exact' or 'mc'")
        rng = np.random.default_rng() if rng is None else rng
        props = np.empty((replicates, self.dim))
        diffs = np.empty((replicates, self.dim))
        for r in range(replicates):
            pair = self.sample_pair(params, params - step, rng)
            props[r] = pair.prop
            diffs[r] = pair.diff
        return props.var(axis=0, ddof=1), diffs.var(axis=0, ddof=1)


class ExpRateProblem(Problem):
    """Fit the rate of an exponential distribution so its mean hits a target.

    Samples are drawn by inverse CDF, ``x = -log(u) / rate``, which makes them
    smooth in the rate and lets gradients flow pathwise (``dx/drate = -x/rate``).
    The loss is ``(E[x] - target)**2``; its gradient is estimated without bias
    by pairing distinct samples, sum over k != l of ``2 (x_k - target) dx_l``.
    """

    name = "exp-rate"
    min_samples = 2

    def __init__(self, target_mean: float = 2.0, samples_per_iter: int = 32, rate_init: float = 2.0,
                 diff_spp: int | None = None, min_rate: float = 1e-4):
        super().__init__(1, samples_per_iter, diff_spp)
        self.target_mean = float(target_mean)
        self.min_rate = float(min_rate)
        self.params_init = np.array([float(rate_init)])
        self.params_truth = np.array([1.0 / self.target_mean])

    @staticmethod
    def sample_values(rate, u):
        return -np.log(u) / rate

    def check(self, params):
        params = super().check(params)
        if not params[0] > 0:
            raise DomainError(f"rate must be positive, got {params[0]}")
        return params

    def draw(self, rng):
        # 1 - U[0, 1) lies in (0, 1], keeping the log finite
        return 1.0 - rng.random(self.spp)

    def estimate(self, params, draws, n=None):
        rate = params[0]
        x = self.sample_values(rate, draws[:n] if n is not None else draws)
        k = x.size
        centred = x - self.target_mean
        pairs = centred.sum() * x.sum() - centred @ x
        return np.array([-2.0 / rate * pairs / (k * (k - 1))])

    def true_gradient(self, params):
        rate = self.check(params)[0]
        return np.array([2.0 * (1.0 / rate - self.target_mean) * (-1.0 / rate**2)])

    def loss(self, params):
        rate = np.asarray(params, dtype=float)[0]
        return float((1.0 / rate - self.target_mean) ** 2)

    def project(self, params):
        return np.maximum(params, self.min_rate)


class MultNoiseQuadratic(Problem):
    """Quadratic bowl ``0.5 |p - t|^2`` with multiplicative gradient noise.

    Per coordinate the estimate is ``(p_j - t_j) * (1 + noise_amp * (2x - 1))``
    with ``x ~ U[0, 1)``, averaged over ``spp`` draws. Because the noise is
    multiplicative, the finite difference ``dp_j * (1 + noise_amp * (2x - 1))``
    has variance exactly quadratic in the step.
    """

    name = "mult-noise"

    def __init__(self, dim: int = 1, target=None, noise_amp: float = 1.0, params_init=None,
                 spp: int = 1, diff_spp: int | None = None):
        super().__init__(dim, spp, diff_spp)
        if noise_amp < 0:
            raise ValueError(f"noise_amp must be non-negative, got {noise_amp}")
        self.noise_amp = float(noise_amp)
        self.target = np.zeros(dim) if target is None else np.broadcast_to(np.asarray(target, float), (dim,)).copy()
        self.params_init = (self.target + 1.0 if params_init is None
                            else np.broadcast_to(np.asarray(params_init, float), (dim,)).copy())
        self.params_truth = self.target

    def draw(self, rng):
        return rng.random((self.spp, self.dim))

    def noise_factor(self, draws):
        return 1.0 + self.noise_amp * (2.0 * draws - 1.0)

    def estimate(self, params, draws, n=None):
        d = draws[:n] if n is not None else draws
        return (params - self.target) * self.noise_factor(d).mean(axis=0)

    def true_gradient(self, params):
        return self.check(params) - self.target

    def loss(self, params):
        r = np.asarray(params, dtype=float) - self.target
        return float(0.5 * r @ r)

    def exact_variance(self, params, step):
        unit = self.noise_amp**2 / 3.0
        return (params - self.target) ** 2 * unit / self.spp, step**2 * unit / self.diff_spp


class MiniRenderProblem(Problem):
    """Toy texture fit: one albedo per pixel, shaded by a Monte Carlo integral.

    Pixel ``j`` renders ``P_j(a) = integral_0^1 a_j (b_j + 1) x^b_j dx = a_j``,
    estimated with uniform samples. The loss is ``sum_j (P_j - T_j)^2``. The
    gradient ``2 (P_j - T_j) dP_j/da_j`` is estimated with two independent
    batches per pixel (one for the primal, one for the derivative) so the
    product stays unbiased. Larger shape exponents ``b_j`` mean noisier pixels.
    """

    name = "mini-render"

    def __init__(self, pixel_count: int = 16, spp: int = 4, diff_spp: int | None = None,
                 max_exponent: float = 4.0, scene_seed: int = 0, params_init=None, target=None):
        super().__init__(pixel_count, spp, diff_spp)
        self.pixel_count = self.dim
        scene = np.random.default_rng(scene_seed)
        self.exponents = scene.uniform(0.0, max_exponent, pixel_count)
        self.target = scene.uniform(0.2, 0.8, pixel_count) if target is None else np.asarray(target, float)
        self.params_init = (scene.uniform(0.0, 1.0, pixel_count) if params_init is None
                            else np.broadcast_to(np.asarray(params_init, float), (pixel_count,)).copy())
        self.params_truth = self.target

    def draw(self, rng):
        # axis 0: primal batch, derivative batch
        return rng.random((2, self.spp, self.dim))

    def weights(self, x):
        b = self.exponents
        return ((b + 1.0) * x**b).mean(axis=0)

    def render(self, params, x):
        return params * self.weights(x)

    def estimate(self, params, draws, n=None):
        primal, adjoint = (draws[:, :n] if n is not None else draws)
        return 2.0 * (self.render(params, primal) - self.target) * self.weights(adjoint)

    def true_gradient(self, params):
        return 2.0 * (self.check(params) - self.target)

    def loss(self, params):
        r = np.asarray(params, dtype=float) - self.target
        return float(r @ r)

    def weight_variance(self, n):
        b = self.exponents
        return ((b + 1.0) ** 2 / (2.0 * b + 1.0) - 1.0) / n

    def exact_variance(self, params, step):
        s = self.weight_variance(self.spp)
        r = params - self.target
        var_prop = 4.0 * (r**2 + params**2 * s) * (1.0 + s) - 4.0 * r**2
        sd = self.weight_variance(self.diff_spp)
        var_diff = 4.0 * step**2 * ((1.0 + sd) ** 2 - 1.0)
        return var_prop, var_diff

    def project(self, params):
        return np.clip(params, 0.0, 1.0)


class ScriptedTrajectory:
    """Drive an inner problem along a fixed parameter path.

    ``schedule="linear"`` interpolates from ``start`` to ``end`` over
    ``horizon`` iterations; ``schedule="exponential"`` approaches ``end`` as
    ``end + (start - end) * decay**i``. The optimiser's steps are ignored.
    """

    def __init__(self, inner: Problem, schedule: str = "linear", horizon: int = 100,
                 start=None, end=None, decay: float = 0.95):
        if schedule not in ("linear", "exponential"):
            raise ValueError(f"unknown schedule {schedule!r}; expected 'linear' or 'exponential'")
        self.inner = inner
        self.schedule = schedule
        self.horizon = int(horizon)
        self.decay = float(decay)
        self.start = np.asarray(inner.params_init if start is None else start, dtype=float)
        end = inner.params_truth if end is None else end
        self.end = np.asarray(end, dtype=float)

    def params_at(self, i: int) -> np.ndarray:
        if self.schedule == "linear":
            frac = i / max(self.horizon - 1, 1)
            return self.start + (self.end - self.start) * frac
        return self.end + (self.start - self.end) * self.decay**i

    def __getattr__(self, name):
        return getattr(self.inner, name)
