"""Aggregate statistics in the layout of the experiment tables (mean/max/min/std)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StatRecord:
    """Summary of a sample.  ``std`` is the population standard deviation."""

    mean: float
    max: float
    min: float
    std: float
    count: int

    @classmethod
    def from_values(cls, values) -> "StatRecord":
        x = np.asarray([v for v in values if v is not None], dtype=np.float64)
        if x.size == 0:
            nan = math.nan
            return cls(nan, nan, nan, nan, 0)
        if not np.all(np.isfinite(x)):
            m = float(np.mean(x)) if not np.any(np.isnan(x)) else math.nan
            return cls(m, float(np.max(x)), float(np.min(x)), math.nan, int(x.size))
        mean = float(math.fsum(x) / x.size)
        # two-pass: centre first, then sum squares
        std = math.sqrt(math.fsum((x - mean) ** 2) / x.size)
        lo, hi = float(np.min(x)), float(np.max(x))
        # fsum mean can land one ulp outside [min, max] for constant samples
        mean = min(max(mean, lo), hi)
        return cls(mean, hi, lo, std, int(x.size))

    def as_dict(self) -> dict:
        return {"mean": self.mean, "max": self.max, "min": self.min,
                "std": self.std, "count": self.count}
