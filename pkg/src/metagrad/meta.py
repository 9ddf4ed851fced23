"""Recurrent meta-estimation of Monte Carlo gradients.

Each iteration the previous estimate is carried forward by a finite-difference
sample and blended with a fresh proportional sample using inverse-variance
weights:

    mean_i = alpha * (mean_{i-1} + diff_i) + (1 - alpha) * prop_i

The variance of the blend is propagated alongside and used to normalise the
parameter update, ``-lr * mean / (sqrt(var) + eps)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_ALPHA = 1e-30
EPS_STEP = 1e-8


@dataclass
class GradientSamplePair:
    """One iteration's proportional and finite-difference gradient samples.

    ``step_sq_norm`` is the squared Euclidean norm of the parameter step the
    finite difference was taken across. It is zero only before the first step,
    in which case ``diff`` is all zeros.
    """

    prop: np.ndarray
    diff: np.ndarray
    step_sq_norm: float
    # per-coordinate squared step; used only by the per-parameter decoupling mode
    step_sq: np.ndarray | None = None

    def __post_init__(self):
        self.prop = np.asarray(self.prop, dtype=float)
        self.diff = np.asarray(self.diff, dtype=float)
        if self.prop.shape != self.diff.shape:
            raise ValueError(f"prop {self.prop.shape} and diff {self.diff.shape} differ in shape")
        self.step_sq_norm = float(self.step_sq_norm)
        if self.step_sq_norm < 0:
            raise ValueError("step_sq_norm must be non-negative")
        if self.step_sq is None:
            self.step_sq = np.full(self.prop.shape, np.nan)


def compute_alpha(var_prop, var_meta, var_diff, alpha_prev, eps: float = EPS_ALPHA, clip: bool = True):
    """Inverse-variance weight of the carried-forward estimate, with clipping.

    The clip ``min(alpha, 1 / (2 - alpha_prev))`` never lets the weight exceed
    what a perfect running average would give. Starting from
    ``alpha_prev = -inf`` it yields 0, 1/2, 2/3, ... when the raw weight is
    saturated.
    """
    var_prop = np.asarray(var_prop, dtype=float)
    var_meta = np.asarray(var_meta, dtype=float)
    var_diff = np.asarray(var_diff, dtype=float)
    for name, v in (("var_prop", var_prop), ("var_meta", var_meta), ("var_diff", var_diff)):
        if np.any(v < 0):
            raise ValueError(f"{name} has negative entries: {v}")

    alpha = var_prop / (var_prop + var_meta + var_diff + eps)
    if clip:
        alpha = np.minimum(alpha, 1.0 / (2.0 - np.asarray(alpha_prev, dtype=float)))
    return alpha


def rescale_diff_variance(var_diff_decoupled, step_sq_norm):
    """Turn a step-normalised diff variance back into gradient units."""
    return np.asarray(var_diff_decoupled, dtype=float) * step_sq_norm


class Meta:
    """Meta-estimator state and update rule.

    ``mean`` and ``var`` are fixed in shape by the first call to :meth:`step`.
    """

    def __init__(self, lr: float = 0.001, eps_step: float = EPS_STEP, eps_alpha: float = EPS_ALPHA,
                 clip_alpha: bool = True):
        if lr <= 0:
            raise ValueError(f"lr must be positive, got {lr}")
        self.lr = float(lr)
        self.eps_step = float(eps_step)
        self.eps_alpha = float(eps_alpha)
        self.clip_alpha = clip_alpha
        self.mean = None
        self.var = None
        self.alpha_prev = None
        self.count = 0

    def _ensure_shape(self, shape):
        if self.mean is None:
            self.mean = np.zeros(shape)
            self.var = np.zeros(shape)
            self.alpha_prev = np.full(shape, -np.inf)
        elif self.mean.shape != shape:
            raise ValueError(f"sample shape {shape} does not match state shape {self.mean.shape}")

    def step(self, prop, diff, var_prop, var_diff) -> np.ndarray:
        """Fold in one sample pair and return the parameter step.

        ``var_prop`` and ``var_diff`` must already describe the current
        iteration (``var_diff`` rescaled to gradient units).
        """
        prop = np.asarray(prop, dtype=float)
        diff = np.asarray(diff, dtype=float)
        self._ensure_shape(prop.shape)
        if diff.shape != prop.shape:
            raise ValueError(f"diff shape {diff.shape} does not match prop shape {prop.shape}")
        var_prop = np.broadcast_to(np.asarray(var_prop, dtype=float), prop.shape)
        var_diff = np.broadcast_to(np.asarray(var_diff, dtype=float), prop.shape)

        # carry the previous estimate forward to the current parameters
        mean = self.mean + diff
        var = self.var + var_diff

        alpha = compute_alpha(var_prop, var, 0.0, self.alpha_prev, eps=self.eps_alpha, clip=self.clip_alpha)
        self.alpha_prev = alpha

        self.mean = alpha * mean + (1.0 - alpha) * prop
        self.var = alpha**2 * var + (1.0 - alpha) ** 2 * var_prop
        self.count += 1
        return -self.lr * self.mean / (np.sqrt(self.var) + self.eps_step)

    @property
    def alpha(self):
        return self.alpha_prev
