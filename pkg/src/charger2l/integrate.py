"""Classical fixed-step fourth-order Runge-Kutta.

``rk4_step`` is the general rule. For a linear time-invariant system with a
held input, one RK4 step is an affine map ``x -> M x + N u``; ``rk4_linear_map``
builds that map once so long horizons cost one matrix-vector product per step.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

# Real-axis extent of the RK4 stability region, |h*lambda| < 2.785...
RK4_REAL_STABILITY_LIMIT = 2.785293563405282


def rk4_step(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_linear_map(a: np.ndarray, b: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(M, N)`` such that one RK4 step of ``x' = A x + B u`` is ``M x + N u``.

    Identical in exact arithmetic to calling ``rk4_step`` with a constant ``u``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.shape[0]
    ha = h * a
    ha2 = ha @ ha
    ha3 = ha2 @ ha
    m = np.eye(n) + ha + ha2 / 2.0 + ha3 / 6.0 + ha3 @ ha / 24.0
    poly = np.eye(n) + ha / 2.0 + ha2 / 6.0 + ha3 / 24.0
    return m, h * poly @ b


def stable_step(spectral_radius: float, h: float, margin: float = 2.0) -> bool:
    """True if ``h`` keeps every real mode inside ``|h*lambda| <= margin``."""
    return h * spectral_radius <= margin
