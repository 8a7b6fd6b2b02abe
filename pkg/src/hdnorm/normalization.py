"""Robust per-context statistics and affine-invariant normalization.

A context's values are shifted by their median and divided by their mean
absolute deviation from the median (MAD). Both statistics are affine
equivariant, so the normalized values are invariant under v -> a*v + b
with a > 0. The denominator is clamped from below by eps so constant
contexts normalize to zeros instead of dividing by zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError

DEFAULT_EPS = 1e-6


@dataclass(frozen=True)
class ContextStats:
    median: float
    mad: float  # unclamped mean absolute deviation from the median
    count: int


def median(values) -> float:
    """Middle element for odd counts, mean of the two middle for even."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("median of empty list")
    return float(np.median(values))


def mad(values, m: float) -> float:
    """Mean absolute deviation of values around m."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("mad of empty list")
    return float(np.mean(np.abs(values - m)))


def normalize_context(values, eps: float = DEFAULT_EPS):
    """Return ((v - median) / max(mad, eps), stats with the unclamped mad)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("normalize_context of empty list")
    m = float(np.median(values))
    s = float(np.mean(np.abs(values - m)))
    normalized = (values - m) / max(s, eps)
    return normalized, ContextStats(median=m, mad=s, count=values.size)
