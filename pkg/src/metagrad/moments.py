"""Zero-centred, start-up-bias-corrected EMAs of squared samples."""

from __future__ import annotations

import numpy as np


class Moment2:
    """Exponential moving average of ``x**2`` with bias correction.

    No mean is subtracted, so ``m2`` is a raw second moment. It is used as a
    (conservative) variance approximation for zero-mean-ish gradient noise.
    The first step returns ``x**2`` exactly.
    """

    def __init__(self, decay: float = 0.9, shape: tuple[int, ...] | int | None = None):
        decay = float(decay)
        if not 0.0 <= decay < 1.0:
            raise ValueError(f"decay must lie in [0, 1), got {decay}")
        self.decay = decay
        self.count = 0
        self.m2 = None if shape is None else np.zeros(shape)

    def step(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.m2 is None:
            self.m2 = np.zeros_like(x)
        elif x.shape != self.m2.shape:
            raise ValueError(f"sample shape {x.shape} does not match tracked shape {self.m2.shape}")

        self.count += 1
        w = 1.0 - self.decay
        w_sum = 1.0 - self.decay**self.count
        self.m2 = self.m2 + (w / w_sum) * (x * x - self.m2)
        return self.m2

    @property
    def value(self) -> np.ndarray:
        if self.m2 is None:
            return np.zeros(())
        return self.m2

    def copy(self) -> "Moment2":
        other = Moment2(self.decay)
        other.count = self.count
        other.m2 = None if self.m2 is None else self.m2.copy()
        return other

    def __repr__(self) -> str:
        return f"Moment2(decay={self.decay}, count={self.count}, m2={self.m2})"
