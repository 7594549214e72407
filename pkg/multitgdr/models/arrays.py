import numpy as np
from typing import Annotated
from pydantic import BeforeValidator, PlainSerializer


def _float_array(value) -> np.ndarray:
    return np.asarray(value, dtype=np.float64)


def _int_array(value) -> np.ndarray:
    arr = np.asarray(value)
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(arr)
        if not np.array_equal(rounded, arr):
            raise ValueError("expected integer values")
        arr = rounded
    return arr.astype(np.int64)


def _bool_array(value) -> np.ndarray:
    return np.asarray(value, dtype=bool)


FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(_float_array),
    PlainSerializer(lambda a: a.tolist(), return_type=list),
]
IntArray = Annotated[
    np.ndarray,
    BeforeValidator(_int_array),
    PlainSerializer(lambda a: a.tolist(), return_type=list),
]
BoolArray = Annotated[
    np.ndarray,
    BeforeValidator(_bool_array),
    PlainSerializer(lambda a: a.tolist(), return_type=list),
]
