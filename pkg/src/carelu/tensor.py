"""Dense float64 tensors and the checked primitive operations.

Everything downstream (indicators, activations, layers) moves data through
the functions here.  Tensors are plain C-order (row-major) float64 numpy
arrays with the batch dimension first; every operation verifies shapes up
front and finiteness on the way out, so NaN/Inf never propagates silently.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


class NumericError(ArithmeticError):
    """An operation produced a NaN or Inf entry."""


def tensor(data) -> np.ndarray:
    """Return ``data`` as a C-contiguous float64 array."""
    return np.ascontiguousarray(data, dtype=np.float64)


def check_finite(a: np.ndarray, context: str = "tensor") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise NumericError(f"non-finite values in {context}")
    return a


_BINARY = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
}

_UNARY = {
    "relu": lambda a: np.maximum(a, 0.0),
    "tanh": np.tanh,
    # H(0) = 0: only strictly positive entries count
    "heaviside": lambda a: np.heaviside(a, 0.0),
}


def elementwise(op: str, a, b=None) -> np.ndarray:
    """Apply an elementwise operation.

    ``add``/``sub``/``mul`` take a second tensor of identical shape or a
    scalar; ``max-with-scalar`` takes a scalar; ``relu``/``tanh``/
    ``heaviside`` are unary.  No broadcasting beyond scalars.
    """
    a = tensor(a)
    if op in _UNARY:
        if b is not None:
            raise ShapeError(f"{op} is unary, got a second operand")
        out = _UNARY[op](a)
    elif op == "max-with-scalar":
        if b is None or not np.isscalar(b):
            raise ShapeError("max-with-scalar needs a scalar operand")
        out = np.maximum(a, float(b))
    elif op in _BINARY:
        if b is None:
            raise ShapeError(f"{op} needs a second operand")
        if np.isscalar(b):
            out = _BINARY[op](a, float(b))
        else:
            b = tensor(b)
            if b.shape != a.shape:
                raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
            out = _BINARY[op](a, b)
    else:
        raise ValueError(f"unknown elementwise op {op!r}")
    return check_finite(out, f"elementwise {op}")


def relu(a) -> np.ndarray:
    return elementwise("relu", a)


def heaviside(a) -> np.ndarray:
    return elementwise("heaviside", a)


def matmul(a, b) -> np.ndarray:
    """Row-major matrix product of two rank-2 tensors."""
    a = tensor(a)
    b = tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs rank-2 operands, got {a.ndim} and {b.ndim}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions disagree: {a.shape} x {b.shape}")
    return check_finite(a @ b, "matmul")


def row_reduce(op: str, a) -> np.ndarray:
    """Reduce each row of a rank-2 tensor to one value.

    ``sum`` = sum of entries, ``sumsq`` = sum of squares, ``l1`` = sum of
    absolute values.
    """
    a = tensor(a)
    if a.ndim != 2:
        raise ShapeError(f"row_reduce needs a rank-2 input, got rank {a.ndim}")
    if op == "sum":
        out = a.sum(axis=1)
    elif op == "sumsq":
        out = (a * a).sum(axis=1)
    elif op == "l1":
        out = np.abs(a).sum(axis=1)
    else:
        raise ValueError(f"unknown row_reduce op {op!r}")
    return check_finite(out, f"row_reduce {op}")


def reshape(a, shape) -> np.ndarray:
    """Reshape preserving row-major element order."""
    a = tensor(a)
    if int(np.prod(shape, dtype=np.int64)) != a.size:
        raise ShapeError(f"cannot reshape {a.shape} to {tuple(shape)}")
    return a.reshape(shape)
