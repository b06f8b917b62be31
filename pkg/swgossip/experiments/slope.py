"""
Decay rate of an MSE curve by least squares on ln(mse).
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats

from ..core.exceptions import SlopeError

# values below this are rounding noise, not decay
MSE_FLOOR = 1e-24
# share of the horizon skipped as initial transient
TRANSIENT = 0.2
# the fit covers at most this trailing share of the part above the floor
LATE_SHARE = 0.5


@dataclass(frozen=True)
class SlopeEstimate:
    """Least-squares fit of ln(mse) = intercept + slope·t over ``fit_window`` (inclusive)."""

    slope: float
    intercept: float
    fit_window: Tuple[int, int]
    r_squared: float

    @property
    def rate(self) -> float:
        """Decay rate |slope|, comparable with κ."""
        return abs(self.slope)


def _as_curve(curve: Union[pd.DataFrame, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(curve, pd.DataFrame):
        return curve["t"].to_numpy(dtype=float), curve["mse"].to_numpy(dtype=float)
    mse = np.asarray(curve, dtype=float)
    return np.arange(len(mse), dtype=float), mse


def default_window(mse: np.ndarray, floor: float = MSE_FLOOR) -> Tuple[int, int]:
    """Late-region window ending at the last index above ``floor``.

    The window starts halfway to that end, and never inside the first 20% of the
    horizon. When the curve sinks under the floor before the transient is over, the
    window is the second half of the part above the floor.
    """
    above = np.flatnonzero(mse >= floor)
    if above.size == 0:
        raise SlopeError("MSE curve is below the floating-point floor everywhere", {"floor": floor})
    end = int(above[-1])
    late = int(math.ceil((1.0 - LATE_SHARE) * end))
    start = max(int(math.ceil(TRANSIENT * (len(mse) - 1))), late)
    if start >= end - 1:
        start = late
    return start, end


def empirical_slope(
    curve: Union[pd.DataFrame, np.ndarray],
    window: Optional[Tuple[int, int]] = None,
) -> SlopeEstimate:
    """Fit ln(mse) against t.

    Args:
        curve: DataFrame with ``t`` and ``mse`` columns, or an array indexed by tick
        window: Inclusive (start, end) positions in the curve; defaults to ``default_window``

    Raises:
        SlopeError: Non-positive MSE inside the window, or fewer than two points
    """
    t, mse = _as_curve(curve)
    start, end = window if window is not None else default_window(mse)
    if not 0 <= start < end < len(mse):
        raise SlopeError("slope window needs two points inside the curve", {"window": [start, end], "len": len(mse)})
    ts, ys = t[start : end + 1], mse[start : end + 1]
    if np.any(ys <= 0) or not np.all(np.isfinite(ys)):
        raise SlopeError(
            "non-positive MSE inside the regression window",
            {"window": [start, end], "min": float(np.nanmin(ys))},
        )
    fit = stats.linregress(ts, np.log(ys))
    r2 = float(fit.rvalue**2) if np.isfinite(fit.rvalue) else 1.0
    return SlopeEstimate(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        fit_window=(int(t[start]), int(t[end])),
        r_squared=min(max(r2, 0.0), 1.0),
    )
