"""
Activation clocks.

Node i wakes with rate λ_i = α + (1−α)·w_i. With Σw = N the rates sum to N, so the
global clock is unchanged; α = 1 gives uniform activation, α = 0 activation
proportional to weight. Each tick draws one broadcaster from λ/Σλ.
"""

import numpy as np

from ..core.exceptions import ValidationError


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError("alpha must lie in [0, 1]", {"alpha": alpha})


def activation_rates(weights: np.ndarray, alpha: float) -> np.ndarray:
    """λ = α + (1−α)·w, row-wise for a (R, N) batch.

    Weights are rescaled to sum to N first, so sum-mode weights (Σw = 1) see the
    same clock as average-mode ones.
    """
    _check_alpha(alpha)
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValidationError("negative weight in activation clock", {"min_w": float(w.min())})
    n = w.shape[-1]
    total = w.sum(axis=-1, keepdims=True)
    scaled = np.divide(w * n, total, out=np.ones_like(w), where=total > 0)
    return alpha + (1.0 - alpha) * scaled


def activation_probabilities(weights: np.ndarray, alpha: float) -> np.ndarray:
    rates = activation_rates(weights, alpha)
    return rates / rates.sum(axis=-1, keepdims=True)


def pick_broadcasters(weights: np.ndarray, alpha: float, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw of one broadcaster per row of ``weights`` from uniforms ``u``."""
    cdf = np.cumsum(activation_probabilities(weights, alpha), axis=-1)
    picks = np.sum(cdf < np.asarray(u)[..., None], axis=-1)
    return np.minimum(picks, cdf.shape[-1] - 1)


def sample_activation(weights: np.ndarray, alpha: float, rng: np.random.Generator) -> int:
    """Draw the node that wakes up next."""
    return int(pick_broadcasters(np.asarray(weights, dtype=float)[None], alpha, rng.random(1))[0])
