"""
Error diagnostics for sum-weight runs.

``psi_diagnostics`` bounds the squared error by Ψ1·Ψ2 from the running matrix
product. ``WindowTracker`` multiplies disjoint windows of L update matrices and
records when a window product turns elementwise positive; every positive entry of
such a product is at least m_K^L, and at a positive window the weights are too.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import ValidationError

# relative slack on the m_K^L comparisons
BOUND_RTOL = 1e-9


def psi_diagnostics(x0: np.ndarray, product: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Ψ1 = ‖x(0)‖² / (min w)² and Ψ2 = ‖(I−J)P‖_F².

    Works on one run or a batch: ``product`` (..., N, N), ``weights`` (..., N),
    ``x0`` (..., N). Ψ1 is +inf where the smallest weight is zero.
    """
    min_w = np.min(weights, axis=-1)
    x_norm = np.sum(np.asarray(x0) ** 2, axis=-1)
    psi1 = np.divide(x_norm, min_w**2, out=np.full(np.shape(min_w), np.inf), where=min_w > 0)
    centered = product - product.mean(axis=-2, keepdims=True)
    psi2 = np.sum(centered**2, axis=(-2, -1))
    return psi1, psi2


@dataclass
class WindowDiagnostics:
    """Window statistics of one run.

    Attributes:
        L: Window length in ticks
        product: Product of the last completed window (identity if none completed)
        positivity_hits: End ticks of windows whose product is elementwise positive
        min_nonzero_bound_ok: Every completed window product has positive entries >= m_K^L
        weight_bound_ok: At every positivity hit, min w >= m_K^L
        windows: Completed window count
    """

    L: int
    product: np.ndarray = field(repr=False)
    positivity_hits: List[int] = field(default_factory=list)
    min_nonzero_bound_ok: bool = True
    weight_bound_ok: bool = True
    windows: int = 0

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "windows": self.windows,
            "positivity_hits": self.positivity_hits,
            "min_nonzero_bound_ok": self.min_nonzero_bound_ok,
            "weight_bound_ok": self.weight_bound_ok,
        }


class WindowTracker:
    """Online window products for a batch of R replicas."""

    def __init__(self, n: int, L: int, m_K: float, replicas: int = 1):
        if L < 1:
            raise ValidationError("window length must be >= 1", {"L": L})
        self.n = n
        self.L = L
        self.bound = m_K**L * (1.0 - BOUND_RTOL)
        self._current = np.repeat(np.eye(n)[None], replicas, axis=0)
        self._filled = 0
        self.results = [WindowDiagnostics(L=L, product=np.eye(n)) for _ in range(replicas)]

    def update(self, k: np.ndarray, t: int, weights: np.ndarray) -> None:
        """Fold the matrices applied at tick ``t`` (R, N, N); ``weights`` are w(t) (R, N)."""
        self._current = self._current @ k
        self._filled += 1
        if self._filled < self.L:
            return
        for r, diag in enumerate(self.results):
            product = self._current[r]
            positive = product[product > 0]
            diag.windows += 1
            diag.product = product.copy()
            if positive.size and positive.min() < self.bound:
                diag.min_nonzero_bound_ok = False
            if positive.size == product.size:
                diag.positivity_hits.append(t)
                if weights[r].min() < self.bound:
                    diag.weight_bound_ok = False
        self._current = np.repeat(np.eye(self.n)[None], len(self.results), axis=0)
        self._filled = 0


def window_diagnostics(
    matrices: Sequence[np.ndarray],
    w0: np.ndarray,
    L: int,
    m_K: float,
    start: Optional[int] = 0,
) -> WindowDiagnostics:
    """Replay a recorded matrix sequence through a ``WindowTracker``.

    Args:
        matrices: K(1), K(2), ... applied in order
        w0: Weights before the first matrix
        L: Window length
        m_K: Smallest positive entry of the family
        start: Tick number of w0
    """
    w = np.array(w0, dtype=float)
    n = len(w)
    tracker = WindowTracker(n, L, m_K)
    for offset, k in enumerate(matrices, start=1):
        k = np.asarray(k, dtype=float)
        if k.shape != (n, n):
            raise ValidationError("matrix dimension mismatch", {"shape": k.shape, "n": n})
        w = w @ k
        tracker.update(k[None], start + offset, w[None])
    return tracker.results[0]
