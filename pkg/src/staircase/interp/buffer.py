"""Dense strided buffers backing memref values during interpretation.

Storage uses array.array so f32 elements round to C float on every store,
matching what a real 32-bit buffer would hold. Strides are row-major and
measured in elements; they are recorded explicitly so the descriptor
shape does not have to change if other layouts ever appear.
"""
from __future__ import annotations

import json
import math
from array import array

from staircase.errors import OutOfBounds, TypeMismatch

_TYPECODES = {"f32": "f", "f64": "d", "i32": "i", "i64": "q"}
_FLOAT_DTYPES = frozenset({"f32", "f64"})

_WRAP = {"i32": (1 << 32, 1 << 31), "i64": (1 << 64, 1 << 63)}


def wrap_int(value: int, dtype: str) -> int:
    span, half = _WRAP[dtype]
    return (int(value) + half) % span - half


def row_major_strides(shape) -> tuple:
    strides = [1] * len(shape)
    for i in range(len(shape) - 2, -1, -1):
        strides[i] = strides[i + 1] * shape[i + 1]
    return tuple(strides)


class Buffer:
    """One dense numeric array plus its logical shape."""

    __slots__ = ("shape", "strides", "dtype", "data")

    def __init__(self, shape, dtype: str, data=None):
        shape = tuple(int(s) for s in shape)
        if dtype not in _TYPECODES:
            raise TypeMismatch(
                f"unknown buffer dtype {dtype!r}; expected one of "
                f"{sorted(_TYPECODES)}"
            )
        if any(s <= 0 for s in shape):
            raise TypeMismatch(f"buffer extents must be positive, got {shape}")
        size = math.prod(shape)
        self.shape = shape
        self.strides = row_major_strides(shape)
        self.dtype = dtype
        if data is None:
            self.data = array(_TYPECODES[dtype], [0] * size)
        else:
            self.data = array(_TYPECODES[dtype], data)
            if len(self.data) != size:
                raise TypeMismatch(
                    f"buffer data has {len(self.data)} elements, shape "
                    f"{shape} needs {size}"
                )

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zeros(cls, shape, dtype: str) -> "Buffer":
        return cls(shape, dtype)

    @classmethod
    def filled(cls, shape, dtype: str, value) -> "Buffer":
        b = cls(shape, dtype)
        for i in range(len(b.data)):
            b.data[i] = value
        return b

    @classmethod
    def ones(cls, shape, dtype: str) -> "Buffer":
        return cls.filled(shape, dtype, 1 if dtype.startswith("i") else 1.0)

    def copy(self) -> "Buffer":
        return Buffer(self.shape, self.dtype, self.data)

    # -- element access (host-side convenience; the evaluator inlines this) ---

    @property
    def rank(self) -> int:
        return len(self.shape)

    @property
    def is_float(self) -> bool:
        return self.dtype in _FLOAT_DTYPES

    def offset_of(self, indices) -> int:
        if len(indices) != len(self.shape):
            raise OutOfBounds(
                f"{len(indices)} indices for a rank-{len(self.shape)} buffer"
            )
        off = 0
        for idx, extent, stride in zip(indices, self.shape, self.strides):
            if idx < 0 or idx >= extent:
                raise OutOfBounds(
                    f"index {idx} out of bounds for extent {extent}"
                )
            off += idx * stride
        return off

    def __getitem__(self, indices):
        if not isinstance(indices, tuple):
            indices = (indices,)
        return self.data[self.offset_of(indices)]

    def __setitem__(self, indices, value):
        if not isinstance(indices, tuple):
            indices = (indices,)
        if not self.is_float:
            value = wrap_int(value, self.dtype)
        self.data[self.offset_of(indices)] = value

    def tolist(self) -> list:
        return self.data.tolist()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Buffer)
            and self.shape == other.shape
            and self.dtype == other.dtype
            and self.data == other.data
        )

    def __repr__(self) -> str:
        dims = "x".join(str(s) for s in self.shape)
        return f"Buffer<{dims}x{self.dtype}>"


# -- JSON interchange ({"shape": [...], "dtype": "...", "data": [...]}) -------

def buffer_to_json(buf: Buffer) -> str:
    return json.dumps(
        {"shape": list(buf.shape), "dtype": buf.dtype,
         "data": buf.data.tolist()}
    )


def buffer_from_json(text: str) -> Buffer:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TypeMismatch(f"buffer JSON is malformed: {exc}")
    if not isinstance(obj, dict) or not {"shape", "dtype", "data"} <= set(obj):
        raise TypeMismatch(
            'buffer JSON needs the keys "shape", "dtype" and "data"'
        )
    shape, dtype, data = obj["shape"], obj["dtype"], obj["data"]
    if not isinstance(shape, list) or not all(
        isinstance(s, int) and not isinstance(s, bool) for s in shape
    ):
        raise TypeMismatch("buffer shape must be a list of integers")
    if dtype not in _TYPECODES:
        raise TypeMismatch(
            f"unknown buffer dtype {dtype!r}; expected one of "
            f"{sorted(_TYPECODES)}"
        )
    if not isinstance(data, list):
        raise TypeMismatch("buffer data must be a flat list of numbers")
    if dtype in _FLOAT_DTYPES:
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                   for v in data):
            raise TypeMismatch("float buffer data must be numbers")
        data = [float(v) for v in data]
    else:
        if not all(isinstance(v, int) and not isinstance(v, bool)
                   for v in data):
            raise TypeMismatch("integer buffer data must be integers")
        data = [wrap_int(v, dtype) for v in data]
    return Buffer(shape, dtype, data)
