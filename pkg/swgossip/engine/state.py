"""
Sum-weight state: per-node sums s and weights w, with estimates x = s/w.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from ..core.config import get_settings
from ..core.exceptions import ValidationError
from ..linalg import col_sum_deviation


class Mode(str, Enum):
    """What the network computes."""

    AVERAGE = "average"
    SUM = "sum"
    SINGLE_VARIATE = "single_variate"

    def __str__(self) -> str:
        return self.value


def as_mode(mode: Union[Mode, str]) -> Mode:
    try:
        return Mode(mode)
    except ValueError:
        raise ValidationError(f"unknown mode {mode!r}", {"allowed": [m.value for m in Mode]})


@dataclass(frozen=True)
class SumWeightState:
    """State after ``t`` ticks.

    In single-variate mode only ``s`` evolves and ``w`` stays at 1.
    """

    s: np.ndarray
    w: np.ndarray
    t: int
    mode: Mode
    trigger: Optional[int] = None

    @property
    def n(self) -> int:
        return len(self.s)


def init_state(x0, mode: Union[Mode, str] = Mode.AVERAGE, trigger: Optional[int] = None) -> SumWeightState:
    """Initial state: s = x(0), with w = 1 (average, single-variate) or w = e_trigger (sum).

    Raises:
        ValidationError: On a bad vector or a missing/out-of-range trigger
    """
    mode = as_mode(mode)
    s = np.array(x0, dtype=float)
    if s.ndim != 1 or len(s) < 2:
        raise ValidationError("x0 must be a vector of length >= 2", {"shape": s.shape})
    if not np.all(np.isfinite(s)):
        raise ValidationError("x0 has non-finite entries")
    n = len(s)
    if mode is Mode.SUM:
        if trigger is None or not 0 <= int(trigger) < n:
            raise ValidationError("sum mode needs a trigger node in range", {"trigger": trigger, "n": n})
        w = np.zeros(n)
        w[int(trigger)] = 1.0
        return SumWeightState(s=s, w=w, t=0, mode=mode, trigger=int(trigger))
    return SumWeightState(s=s, w=np.ones(n), t=0, mode=mode)


def require_doubly_stochastic(k: np.ndarray) -> None:
    if col_sum_deviation(k) > get_settings().stochastic_tol:
        raise ValidationError("single-variate mode needs doubly stochastic update matrices")


def step(state: SumWeightState, k: np.ndarray) -> SumWeightState:
    """Apply one update: sᵀ ← sᵀK and wᵀ ← wᵀK (only sᵀ in single-variate mode)."""
    k = np.asarray(k, dtype=float)
    if k.shape != (state.n, state.n):
        raise ValidationError("update matrix dimension mismatch", {"shape": k.shape, "n": state.n})
    if state.mode is Mode.SINGLE_VARIATE:
        require_doubly_stochastic(k)
        return SumWeightState(s=state.s @ k, w=state.w, t=state.t + 1, mode=state.mode)
    return SumWeightState(
        s=state.s @ k,
        w=state.w @ k,
        t=state.t + 1,
        mode=state.mode,
        trigger=state.trigger,
    )


def estimates(state: SumWeightState) -> np.ndarray:
    """x = s/w; nodes with zero weight get NaN (undefined, not an error)."""
    return ratio(state.s, state.w)


def ratio(s: np.ndarray, w: np.ndarray) -> np.ndarray:
    defined = w > 0
    out = np.full(np.shape(s), np.nan)
    np.divide(s, w, out=out, where=defined)
    return out
