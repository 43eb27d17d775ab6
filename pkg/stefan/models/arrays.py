"""Annotated numpy array types usable as pydantic fields.

Arrays are copied on validation and marked read-only, so models holding
them can be shared freely once constructed.
"""
from typing import Annotated

import numpy as np
from pydantic import BeforeValidator, PlainSerializer


def _as_array(value, dtype) -> np.ndarray:
    array = np.array(value, dtype=dtype)
    if array.ndim != 1:
        raise ValueError(f"expected a one-dimensional sequence, got shape {array.shape}")
    if dtype is float and not np.all(np.isfinite(array)):
        raise ValueError("array contains non-finite values")
    array.setflags(write=False)
    return array


def as_float_array(value) -> np.ndarray:
    """Validate and freeze a one-dimensional float array."""
    return _as_array(value, float)


def as_int_array(value) -> np.ndarray:
    """Validate and freeze a one-dimensional integer array."""
    return _as_array(value, np.int64)


FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(as_float_array),
    PlainSerializer(lambda a: a.tolist(), return_type=list),
]

IntArray = Annotated[
    np.ndarray,
    BeforeValidator(as_int_array),
    PlainSerializer(lambda a: a.tolist(), return_type=list),
]


def strictly_increasing(values: np.ndarray) -> bool:
    return bool(values.size < 2 or np.all(np.diff(values) > 0))
