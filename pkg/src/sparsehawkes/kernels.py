"""Excitation kernels.

Only the unit-mass exponential kernel is implemented, but the interface
(evaluate / integral_to / product_integral) is what the rest of the library
relies on, so other kernels with closed-form products could be dropped in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ExponentialKernel:
    """h(s) = beta * exp(-beta * s) for s >= 0; integrates to one."""

    beta: float = 3.0

    def __post_init__(self) -> None:
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise ValueError(f"beta must be a positive finite real, got {self.beta}")

    def evaluate(self, s):
        """Kernel value h(s); zero for s < 0."""
        s = np.asarray(s, dtype=float)
        out = np.where(s >= 0, self.beta * np.exp(-self.beta * np.maximum(s, 0.0)), 0.0)
        return out if out.ndim else float(out)

    def integral_to(self, s):
        """Integral of h over [0, s]: 1 - exp(-beta*s); zero for s <= 0."""
        s = np.asarray(s, dtype=float)
        out = np.where(s > 0, -np.expm1(-self.beta * np.maximum(s, 0.0)), 0.0)
        return out if out.ndim else float(out)

    def product_integral(self, x, y, T):
        """Integral of h(t-x)*h(t-y) over t in [max(x,y), T].

        Closed form (beta/2) * exp(-beta|x-y|) * (1 - exp(-2 beta (T - max(x,y))));
        zero when T <= max(x, y).
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        hi = np.maximum(x, y)
        rem = np.maximum(T - hi, 0.0)
        out = 0.5 * self.beta * np.exp(-self.beta * np.abs(x - y)) * -np.expm1(-2.0 * self.beta * rem)
        return out if out.ndim else float(out)
