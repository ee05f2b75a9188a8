"""Dense double-precision matrix operations.

A matrix is a 2-D float64 ``numpy.ndarray`` in row-major layout; rows are
samples in all batched operations. Every function here is pure: inputs are
validated, never mutated, and a fresh array is returned. numpy supplies the
arithmetic; this module supplies the shape contracts.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

Matrix = np.ndarray


class ShapeError(ValueError):
    """Operands have incompatible shapes; carries both shapes."""

    def __init__(self, message: str, shape_a=None, shape_b=None):
        super().__init__(message)
        self.shape_a = shape_a
        self.shape_b = shape_b


def as_matrix(data) -> Matrix:
    """Coerce nested sequences (or an array) to a 2-D float64 matrix."""
    m = np.array(data, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={m.ndim}", m.shape)
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"matrix dimensions must be >= 1, got {m.shape}", m.shape)
    return m


def _check_same_shape(a: Matrix, b: Matrix, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ", a.shape, b.shape)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Matrix product; requires a.cols == b.rows."""
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"matmul: inner dimensions differ, {a.shape} x {b.shape}", a.shape, b.shape
        )
    return a @ b


def add(a: Matrix, b: Matrix) -> Matrix:
    _check_same_shape(a, b, "add")
    return a + b


def sub(a: Matrix, b: Matrix) -> Matrix:
    _check_same_shape(a, b, "sub")
    return a - b


def scale(a: Matrix, s: float) -> Matrix:
    return a * float(s)


def transpose(a: Matrix) -> Matrix:
    return np.ascontiguousarray(a.T)


def elementwise(a: Matrix, f: Callable[[float], float]) -> Matrix:
    """Apply a scalar function to every entry."""
    return np.vectorize(f, otypes=[np.float64])(a)


def row_sum(a: Matrix) -> Matrix:
    """Sum each row; returns a (rows, 1) column."""
    return a.sum(axis=1, keepdims=True)
