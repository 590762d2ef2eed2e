from __future__ import annotations

import numpy as np


def ordered_sum(values) -> float:
    """Strict left-to-right sum in C order; unlike ``np.sum`` it never reassociates."""
    flat = np.ascontiguousarray(values, dtype=np.float64).ravel()
    return float(np.cumsum(flat)[-1]) if flat.size else 0.0
