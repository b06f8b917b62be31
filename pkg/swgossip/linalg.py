"""Dense matrix helpers shared by the family, spectral and engine modules."""

from typing import Optional

import numpy as np


def kron_second_moment(matrices: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Σ_m weights[m] · (K_m ⊗ K_m) without materializing any single Kronecker product.

    With A the (M, N²) stack of row-major flattened K_m, G = Aᵀ diag(w) A holds
    Σ w K[i,j]K[k,l] at ((i,j),(k,l)); reordering its axes to ((i,k),(j,l)) gives the
    Kronecker layout.

    Args:
        matrices: (M, N, N) stack
        weights: (M,) weights (probabilities, or 1/S for sample means)

    Returns:
        (N², N²) matrix
    """
    m, n, _ = matrices.shape
    flat = matrices.reshape(m, n * n)
    gram = (flat * weights[:, None]).T @ flat
    return gram.reshape(n, n, n, n).transpose(0, 2, 1, 3).reshape(n * n, n * n)


def centering(n: int) -> np.ndarray:
    """I − J with J = (1/n)·11ᵀ."""
    return np.eye(n) - np.full((n, n), 1.0 / n)


def min_positive_entry(matrix: np.ndarray) -> float:
    """Smallest strictly positive entry, +inf when there is none."""
    positive = matrix[matrix > 0]
    return float(positive.min()) if positive.size else float("inf")


def row_sum_deviation(matrices: np.ndarray) -> float:
    """max |K·1 − 1| over a stack (or a single matrix)."""
    return float(np.max(np.abs(matrices.sum(axis=-1) - 1.0)))


def col_sum_deviation(matrices: np.ndarray) -> float:
    return float(np.max(np.abs(matrices.sum(axis=-2) - 1.0)))


def primitivity_exponent(support: np.ndarray, max_power: int) -> Optional[int]:
    """Smallest k <= max_power with support^k elementwise positive, or None.

    With a positive diagonal the support of the powers can only grow, so the search
    stops as soon as it stalls.
    """
    base = (support > 0).astype(np.float64)
    current = base.copy()
    grows = bool(np.all(np.diag(base) > 0))
    for k in range(1, max_power + 1):
        if np.all(current > 0):
            return k
        following = ((current @ base) > 0).astype(np.float64)
        if grows and np.array_equal(following, current):
            return None
        current = following
    return None
