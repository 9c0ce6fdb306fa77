"""Dense order-D tensors under one fixed column-major linearization.

Everything in this package leans on a single storage convention: the
entries of an order-D tensor are linearized with the *first* index varying
fastest.  ``vec`` flattens in that order, and an order-2D tensor whose two
index blocks share the same dimension lengths reshapes to an
``nstar x nstar`` matrix (``matricize``) whose rows enumerate the first
block and whose columns enumerate the second block, both in the same
column-major order.  Determinants, covariance tensors and densities built
downstream are mutually consistent only because these two maps share the
convention, so it is fixed here once and never re-derived.

D=1 is fully supported (tensors are vectors, square tensors are matrices),
which makes the classical matrix and multivariate results special cases of
the general ones.  Order-0 tensors (scalars) are rejected at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import ShapeError

__all__ = [
    "Shape",
    "DenseTensor",
    "SquareTensor",
    "as_shape",
    "vec",
    "matricize",
    "unmatricize",
    "transpose2d",
    "add",
    "scale",
    "outer",
    "contract_product",
    "double_dot_quadratic",
]

ShapeLike = Union["Shape", Sequence[int]]


@dataclass(frozen=True)
class Shape:
    """Ordered dimension lengths ``n1 .. nD`` of an order-D tensor.

    ``nstar`` is the total entry count, which is also the length of any
    conforming vectorization.  Shapes compare by exact equality of the
    dimension list; there is no broadcasting anywhere in the package.
    """

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        try:
            dims = tuple(int(n) for n in self.dims)
        except TypeError:
            raise ShapeError(
                f"dims must be a sequence of integers, got {self.dims!r}"
            ) from None
        if len(dims) == 0:
            raise ShapeError(
                "order must be at least 1; order-0 (scalar) shapes are not supported"
            )
        if any(n < 1 for n in dims):
            raise ShapeError(f"every dimension length must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def order(self) -> int:
        """Number of indices D."""
        return len(self.dims)

    @property
    def nstar(self) -> int:
        """Product of the dimension lengths."""
        return math.prod(self.dims)

    def __iter__(self) -> Iterator[int]:
        return iter(self.dims)

    def __len__(self) -> int:
        return len(self.dims)

    def __str__(self) -> str:
        return "x".join(str(n) for n in self.dims)


def as_shape(shape: ShapeLike) -> Shape:
    """Coerce a Shape or a plain sequence of dimension lengths to a Shape."""
    if isinstance(shape, Shape):
        return shape
    return Shape(tuple(shape))


def _require_finite(values: np.ndarray) -> None:
    if not np.isfinite(values).all():
        raise ValueError("tensor entries must be finite (no NaN or Inf)")


class DenseTensor:
    """Immutable dense real order-D tensor.

    ``data`` is the column-major flat sequence (first index fastest) and
    ``array`` the multi-dimensional view; both are read-only.  Construction
    validates that every entry is finite.

    Parameters
    ----------
    data : sequence of float
        Flat entries, length ``shape.nstar``, in column-major order.
    shape : Shape or sequence of int
        Dimension lengths.
    """

    __slots__ = ("shape", "_array")

    def __init__(self, data, shape: ShapeLike):
        shape = as_shape(shape)
        flat = np.array(data, dtype=np.float64, copy=True)
        if flat.ndim != 1:
            raise ShapeError(
                f"data must be a flat sequence, got {flat.ndim} dimensions; "
                "use from_array for multi-dimensional input"
            )
        if flat.size != shape.nstar:
            raise ShapeError(
                f"data length {flat.size} does not match shape {shape} "
                f"(expected {shape.nstar} entries)"
            )
        _require_finite(flat)
        array = flat.reshape(shape.dims, order="F")
        array.flags.writeable = False
        self.shape = shape
        self._array = array

    @classmethod
    def from_array(cls, array) -> "DenseTensor":
        """Build from a multi-dimensional array, taking its shape."""
        a = np.asarray(array, dtype=np.float64)
        if a.ndim == 0:
            raise ShapeError("order-0 (scalar) tensors are not supported")
        return cls(a.ravel(order="F"), Shape(a.shape))

    @classmethod
    def zeros(cls, shape: ShapeLike) -> "DenseTensor":
        """All-zero tensor of the given shape."""
        shape = as_shape(shape)
        return cls._wrap(np.zeros(shape.dims, order="F"), shape)

    @classmethod
    def _wrap(cls, array: np.ndarray, shape: Shape) -> "DenseTensor":
        # Internal: adopt a float64 array without copying or validating.
        a = np.asfortranarray(array, dtype=np.float64)
        a.flags.writeable = False
        t = object.__new__(cls)
        t.shape = shape
        t._array = a
        return t

    @classmethod
    def _unchecked(cls, data, shape: ShapeLike) -> "DenseTensor":
        # Test-only escape hatch: skips the finite-entry validation.
        shape = as_shape(shape)
        flat = np.array(data, dtype=np.float64, copy=True).reshape(-1)
        if flat.size != shape.nstar:
            raise ShapeError(
                f"data length {flat.size} does not match shape {shape}"
            )
        return cls._wrap(flat.reshape(shape.dims, order="F"), shape)

    @property
    def array(self) -> np.ndarray:
        """Read-only multi-dimensional view of the entries."""
        return self._array

    @property
    def data(self) -> np.ndarray:
        """Read-only column-major flat view of the entries."""
        return self._array.reshape(-1, order="F")

    @property
    def order(self) -> int:
        return self.shape.order

    def __getitem__(self, index):
        return self._array[index]

    def __eq__(self, other) -> bool:
        if type(other) is not DenseTensor:
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._array, other._array)

    __hash__ = None

    def __add__(self, other: "DenseTensor") -> "DenseTensor":
        if type(other) is not DenseTensor:
            return NotImplemented
        if other.shape != self.shape:
            raise ShapeError(f"cannot add tensors of shapes {self.shape} and {other.shape}")
        return DenseTensor._wrap(self._array + other._array, self.shape)

    def __sub__(self, other: "DenseTensor") -> "DenseTensor":
        if type(other) is not DenseTensor:
            return NotImplemented
        if other.shape != self.shape:
            raise ShapeError(f"cannot subtract tensors of shapes {self.shape} and {other.shape}")
        return DenseTensor._wrap(self._array - other._array, self.shape)

    def __mul__(self, factor: float) -> "DenseTensor":
        return DenseTensor._wrap(float(factor) * self._array, self.shape)

    __rmul__ = __mul__

    def __neg__(self) -> "DenseTensor":
        return DenseTensor._wrap(-self._array, self.shape)

    def __repr__(self) -> str:
        return f"DenseTensor(shape={self.shape})"


class SquareTensor:
    """Immutable order-2D tensor whose two index blocks share one Shape.

    The first D indices form the row block and the last D the column
    block.  Entries are stored column-major over the full 2D-tuple, which
    makes ``matricize`` a pure reinterpretation of the same data.

    Parameters
    ----------
    data : sequence of float
        Flat entries, length ``row_shape.nstar ** 2``, column-major.
    row_shape : Shape or sequence of int
        Dimension lengths shared by both index blocks.
    """

    __slots__ = ("row_shape", "_array")

    def __init__(self, data, row_shape: ShapeLike):
        row_shape = as_shape(row_shape)
        flat = np.array(data, dtype=np.float64, copy=True)
        if flat.ndim != 1:
            raise ShapeError(
                f"data must be a flat sequence, got {flat.ndim} dimensions; "
                "use from_array or from_matrix for structured input"
            )
        if flat.size != row_shape.nstar**2:
            raise ShapeError(
                f"data length {flat.size} does not match row shape {row_shape} "
                f"(expected {row_shape.nstar ** 2} entries)"
            )
        _require_finite(flat)
        array = flat.reshape(row_shape.dims * 2, order="F")
        array.flags.writeable = False
        self.row_shape = row_shape
        self._array = array

    @classmethod
    def from_matrix(cls, matrix, row_shape: ShapeLike) -> "SquareTensor":
        """Build from an ``nstar x nstar`` matrix in the shared convention."""
        row_shape = as_shape(row_shape)
        m = np.array(matrix, dtype=np.float64, copy=True)
        n = row_shape.nstar
        if m.shape != (n, n):
            raise ShapeError(
                f"matrix of shape {m.shape} does not match row shape {row_shape} "
                f"(expected {n} x {n})"
            )
        _require_finite(m)
        return cls._wrap(np.reshape(m, row_shape.dims * 2, order="F"), row_shape)

    @classmethod
    def from_array(cls, array) -> "SquareTensor":
        """Build from an order-2D array whose two index blocks agree."""
        a = np.asarray(array, dtype=np.float64)
        if a.ndim % 2 != 0 or a.ndim == 0:
            raise ShapeError(f"expected an even-order array, got order {a.ndim}")
        half = a.ndim // 2
        if a.shape[:half] != a.shape[half:]:
            raise ShapeError(
                f"index blocks must share dimension lengths, got {a.shape}"
            )
        row_shape = Shape(a.shape[:half])
        flat = a.ravel(order="F")
        _require_finite(flat)
        return cls._wrap(flat.reshape(row_shape.dims * 2, order="F"), row_shape)

    @classmethod
    def identity(cls, row_shape: ShapeLike) -> "SquareTensor":
        """Tensor with 1 where the two index blocks coincide, 0 elsewhere."""
        row_shape = as_shape(row_shape)
        return cls.from_matrix(np.eye(row_shape.nstar), row_shape)

    @classmethod
    def zeros(cls, row_shape: ShapeLike) -> "SquareTensor":
        """All-zero square tensor."""
        row_shape = as_shape(row_shape)
        return cls._wrap(np.zeros(row_shape.dims * 2, order="F"), row_shape)

    @classmethod
    def _wrap(cls, array: np.ndarray, row_shape: Shape) -> "SquareTensor":
        # Internal: adopt a float64 array without copying or validating.
        a = np.asfortranarray(array, dtype=np.float64)
        a.flags.writeable = False
        t = object.__new__(cls)
        t.row_shape = row_shape
        t._array = a
        return t

    @property
    def array(self) -> np.ndarray:
        """Read-only order-2D view of the entries."""
        return self._array

    @property
    def data(self) -> np.ndarray:
        """Read-only column-major flat view of the entries."""
        return self._array.reshape(-1, order="F")

    @property
    def order(self) -> int:
        """Full tensor order, i.e. 2D."""
        return 2 * self.row_shape.order

    def __getitem__(self, index):
        return self._array[index]

    def __eq__(self, other) -> bool:
        if type(other) is not SquareTensor:
            return NotImplemented
        return self.row_shape == other.row_shape and np.array_equal(
            self._array, other._array
        )

    __hash__ = None

    def __add__(self, other: "SquareTensor") -> "SquareTensor":
        if type(other) is not SquareTensor:
            return NotImplemented
        if other.row_shape != self.row_shape:
            raise ShapeError(
                f"cannot add square tensors of row shapes {self.row_shape} "
                f"and {other.row_shape}"
            )
        return SquareTensor._wrap(self._array + other._array, self.row_shape)

    def __sub__(self, other: "SquareTensor") -> "SquareTensor":
        if type(other) is not SquareTensor:
            return NotImplemented
        if other.row_shape != self.row_shape:
            raise ShapeError(
                f"cannot subtract square tensors of row shapes {self.row_shape} "
                f"and {other.row_shape}"
            )
        return SquareTensor._wrap(self._array - other._array, self.row_shape)

    def __mul__(self, factor: float) -> "SquareTensor":
        return SquareTensor._wrap(float(factor) * self._array, self.row_shape)

    __rmul__ = __mul__

    def __neg__(self) -> "SquareTensor":
        return SquareTensor._wrap(-self._array, self.row_shape)

    def __repr__(self) -> str:
        return f"SquareTensor(row_shape={self.row_shape})"


def vec(t: Union[DenseTensor, SquareTensor]) -> np.ndarray:
    """Column-major flat entries of a tensor (read-only view).

    For a shape ``(n1, .., nD)`` the entry at multi-index ``(i1, .., iD)``
    lands at flat position ``i1 + n1*i2 + n1*n2*i3 + ...`` (zero-based),
    so the first index varies fastest.  The map is a bijection; for square
    tensors it is consistent with ``matricize`` by construction.
    """
    return t.data


def matricize(x: SquareTensor) -> np.ndarray:
    """``nstar x nstar`` matrix view of an order-2D square tensor.

    Row ``r`` and column ``c`` decode to the row-block and column-block
    multi-indices through the same column-major map ``vec`` uses, so
    ``matricize(x)[r, c] == x[decode(r) + decode(c)]``.  The returned
    array is a read-only view of the tensor's storage.
    """
    n = x.row_shape.nstar
    return x._array.reshape((n, n), order="F")


def unmatricize(matrix, row_shape: ShapeLike) -> SquareTensor:
    """Inverse of ``matricize``: rebuild the square tensor from its matrix."""
    return SquareTensor.from_matrix(matrix, row_shape)


def transpose2d(x: SquareTensor) -> SquareTensor:
    """Swap the two index blocks of an order-2D tensor.

    The matricization of the result is exactly the matrix transpose of the
    matricization of the input.
    """
    d = x.row_shape.order
    perm = tuple(range(d, 2 * d)) + tuple(range(d))
    return SquareTensor._wrap(
        np.asfortranarray(np.transpose(x._array, perm)), x.row_shape
    )


def add(x, y):
    """Entrywise sum of two conforming tensors of the same kind."""
    if type(x) is not type(y):
        raise ShapeError(
            f"cannot add {type(x).__name__} and {type(y).__name__}; "
            "operands must be the same kind of tensor"
        )
    return x + y


def scale(factor: float, x):
    """Scalar multiple of a tensor, same kind as the input."""
    return float(factor) * x


def outer(a: DenseTensor, b: DenseTensor) -> Union[SquareTensor, DenseTensor]:
    """Outer product: entry ``(i1..iD, j1..jD)`` equals ``a[i] * b[j]``.

    Returns a :class:`SquareTensor` when the factors share a shape and an
    order-2D :class:`DenseTensor` with the concatenated shape otherwise.
    """
    prod = np.multiply.outer(a.array, b.array)
    if a.shape == b.shape:
        return SquareTensor._wrap(np.asfortranarray(prod), a.shape)
    return DenseTensor._wrap(
        np.asfortranarray(prod), Shape(a.shape.dims + b.shape.dims)
    )


def contract_product(x: SquareTensor, y: SquareTensor) -> SquareTensor:
    """Contraction of ``x``'s column block against ``y``'s row block.

    Sums over all shared multi-indices ``j1 .. jD``; the matricization of
    the result agrees with the matrix product of the matricizations up to
    floating-point round-off.  The contraction itself runs on the
    multi-index arrays and never touches the matrix view.
    """
    if x.row_shape != y.row_shape:
        raise ShapeError(
            f"cannot contract square tensors of row shapes {x.row_shape} "
            f"and {y.row_shape}"
        )
    d = x.row_shape.order
    res = np.tensordot(x.array, y.array, axes=(tuple(range(d, 2 * d)), tuple(range(d))))
    return SquareTensor._wrap(np.asfortranarray(res), x.row_shape)


def double_dot_quadratic(a: DenseTensor, s: SquareTensor, b: DenseTensor) -> float:
    """Full double contraction ``sum_{i,j} a[i] * s[i, j] * b[j]``.

    Equals ``vec(a) @ matricize(s) @ vec(b)``; evaluated here by genuine
    multi-index contraction so the matrix identity stays a checkable
    property rather than a definition.
    """
    if a.shape != s.row_shape or b.shape != s.row_shape:
        raise ShapeError(
            f"operand shapes {a.shape}, {s.row_shape}, {b.shape} must agree"
        )
    d = s.row_shape.order
    sb = np.tensordot(s.array, b.array, axes=(tuple(range(d, 2 * d)), tuple(range(d))))
    return float(np.tensordot(a.array, sb, axes=d))
