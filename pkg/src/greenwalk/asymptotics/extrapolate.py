"""Least-squares extrapolation of finite-``n`` ladders to their limits.

Both models are linear in their coefficients, so each extrapolated limit
is a fixed linear functional of the ladder.  Applying the same functional
to every Monte Carlo trajectory gives per-trajectory estimates whose
spread is the statistical error of the extrapolated value.
"""

from __future__ import annotations

import numpy as np


def entropy_design(ns, order: int) -> np.ndarray:
    """Columns of ``H_n = h n + a ln n + c + sum_{i <= order} d_i n^{-i}``."""
    n = np.asarray(ns, dtype=float)
    cols = [n, np.ones_like(n), np.log(n)] + [n ** (-i) for i in range(1, order + 1)]
    return np.stack(cols, axis=1)


def speed_design(ns) -> np.ndarray:
    """Columns of ``v(n) = l + c / n``."""
    n = np.asarray(ns, dtype=float)
    return np.stack([np.ones_like(n), 1.0 / n], axis=1)


def limit_weights(design: np.ndarray) -> np.ndarray:
    """Row ``w`` with ``w @ y`` the least-squares leading coefficient."""
    return np.linalg.pinv(design)[0]


def entropy_window(n_max: int, lo: int | None = None) -> list[int]:
    lo = max(1, n_max // 2) if lo is None else lo
    return list(range(lo, n_max + 1))


def feasible_orders(n_points: int, order: int) -> list[int]:
    """Orders whose model has fewer parameters than points."""
    return [p for p in range(order + 1) if 3 + p < n_points]


def extrapolate_entropy(H: dict[int, float], n_max: int, *, order: int = 2, lo: int | None = None):
    """Entropy rate from ``H_n``, ``n`` in ``[lo, n_max]``.

    Returns ``(value, model_spread, weights, window, per_order)`` where
    ``value`` uses the highest feasible order up to ``order`` and
    ``model_spread`` is its largest distance to the lower orders.
    """
    window = entropy_window(n_max, lo)
    orders = feasible_orders(len(window), order)
    if not orders:
        raise ValueError(f"window {window[0]}..{window[-1]} is too short for the entropy model")
    y = np.array([H[n] for n in window])
    per_order = {}
    weights = {}
    for p in orders:
        w = limit_weights(entropy_design(window, p))
        weights[p] = w
        per_order[p] = float(w @ y)
    top = orders[-1]
    value = per_order[top]
    spread = max((abs(v - value) for v in per_order.values()), default=0.0)
    return value, spread, weights[top], window, per_order
