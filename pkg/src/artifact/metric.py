"""Euclidean distances are minimised, inner products maximised.

Everything downstream ranks by a cost (smaller is better); for inner
product the cost is the negated score, which turns argmax into argmin with
the same lowest-index tie-breaking.
"""

import numpy as np

EUCLIDEAN = "euclidean"
INNER_PRODUCT = "inner_product"
METRICS = (EUCLIDEAN, INNER_PRODUCT)


def check(metric: str) -> str:
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return metric


def to_cost(values, metric: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    return -values if check(metric) == INNER_PRODUCT else values


def best(values, metric: str, axis=-1) -> np.ndarray:
    """argmin for Euclidean, argmax for inner product; first index wins ties."""
    return np.argmin(to_cost(values, metric), axis=axis)
