"""Plain Adam, used as the baseline optimiser."""

from __future__ import annotations

import numpy as np


class Adam:
    def __init__(self, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        for name, b in (("beta1", beta1), ("beta2", beta2)):
            if not 0.0 <= b < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {b}")
        if lr <= 0:
            raise ValueError(f"lr must be positive, got {lr}")
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.m = None
        self.v = None
        self.t = 0

    def step(self, grad) -> np.ndarray:
        """Update the moments with ``grad`` and return the parameter step."""
        grad = np.asarray(grad, dtype=float)
        if self.m is None:
            self.m = np.zeros_like(grad)
            self.v = np.zeros_like(grad)
        elif grad.shape != self.m.shape:
            raise ValueError(f"gradient shape {grad.shape} does not match state shape {self.m.shape}")

        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        return -self.lr * self.m_hat / (np.sqrt(self.v_hat) + self.eps)

    @property
    def m_hat(self) -> np.ndarray:
        return self.m / (1.0 - self.beta1**self.t)

    @property
    def v_hat(self) -> np.ndarray:
        return self.v / (1.0 - self.beta2**self.t)
