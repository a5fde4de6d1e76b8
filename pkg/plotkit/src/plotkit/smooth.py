"""Centered moving-average smoothing with shrinking edge windows."""

from __future__ import annotations

import numpy as np


def moving_average(values, window: int) -> np.ndarray:
    """Centered moving average of odd width `window`.

    Output length equals input length; near the edges the window shrinks to
    whatever fits, so the first and last points average fewer samples
    instead of being dropped. window=1 is the identity.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd integer, got {window}")
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d series, got shape {v.shape}")
    if window == 1:
        # the cumsum route below would reintroduce rounding
        return v.copy()
    half = window // 2
    n = v.size
    csum = np.concatenate([[0.0], np.cumsum(v)])
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    return (csum[hi] - csum[lo]) / (hi - lo)
