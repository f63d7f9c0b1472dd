"""Confidence intervals used across the harness."""

import math

import numpy as np
from scipy import stats as _st

Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials <= 0:
        return (math.nan, math.nan)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return (lo, hi)


def mean_ci95(values) -> tuple[float, float]:
    """Mean and 95% half-width: normal quantile from 30 samples up, Student t below."""
    x = np.asarray(values, dtype=np.float64)
    k = x.size
    if k == 0:
        return (math.nan, math.nan)
    mean = float(x.mean())
    if k == 1:
        return (mean, math.nan)
    sem = float(x.std(ddof=1)) / math.sqrt(k)
    q = Z95 if k >= 30 else float(_st.t.ppf(0.975, k - 1))
    return (mean, q * sem)
