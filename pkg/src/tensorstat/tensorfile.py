"""Tensor file I/O: human-readable JSON plus a compact binary twin.

JSON formats (UTF-8, one object per file):

* single tensor   ``{"kind": "tensor", "shape": [...], "data": [...]}``
* square tensor   ``{"kind": "square2d", "rowShape": [...], "shape": [...],
  "data": [...]}`` with ``data`` of length ``nstar**2``
* sample set      ``{"kind": "samples", "shape": [...], "count": N,
  "seed": <int or null>, "observations": [<tensor objects>]}``; a bare JSON
  array of tensor objects is also accepted on read
* parameters      ``{"location": <tensor object>, "scale": <square2d object
  or {"kind": "kronecker", "factors": [<order-2 tensor objects>]}>}``

All data arrays are column-major and numbers serialize as shortest
round-trip decimals, so write-then-read is bit-exact.

Binary formats (little-endian, magic ``TST1``):

* single tensor   magic, u8 order, u32 dims, f64 payload
* sample set      magic, u64 count, u8 order, u32 dims, ``count``
  contiguous f64 payloads

The binary header carries no kind tag; the two layouts are told apart by
the reading entry point, not by the bytes.  The path ``"-"`` reads stdin
or writes stdout.
"""

from __future__ import annotations

import json
import struct
import sys
from typing import Optional, Union

import numpy as np

from .errors import FileFormatError, ShapeError
from .linalg import KroneckerFactors
from .stats import SampleSet
from .tensor_core import DenseTensor, Shape, SquareTensor

__all__ = [
    "MAGIC",
    "read_tensor",
    "write_tensor",
    "read_sample_set",
    "write_sample_set",
    "read_params",
    "write_params",
    "tensor_to_obj",
    "tensor_from_obj",
]

MAGIC = b"TST1"

AnyTensor = Union[DenseTensor, SquareTensor]


def _read_bytes(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _write_bytes(path: str, payload: bytes) -> None:
    if path == "-":
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.flush()
        return
    with open(path, "wb") as fh:
        fh.write(payload)


def _parse_json(raw: bytes):
    try:
        return json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FileFormatError(f"not valid JSON: {e}") from None


def _require_dims(dims) -> tuple[int, ...]:
    if not isinstance(dims, list) or not dims or not all(
        isinstance(n, int) and n >= 1 for n in dims
    ):
        raise FileFormatError(f"shape must be a non-empty list of positive integers, got {dims!r}")
    return tuple(dims)


def tensor_to_obj(t: AnyTensor) -> dict:
    """JSON-ready dict for a tensor, with column-major data."""
    if isinstance(t, SquareTensor):
        return {
            "kind": "square2d",
            "rowShape": list(t.row_shape.dims),
            "shape": list(t.row_shape.dims) * 2,
            "data": [float(v) for v in t.data],
        }
    return {
        "kind": "tensor",
        "shape": list(t.shape.dims),
        "data": [float(v) for v in t.data],
    }


def tensor_from_obj(obj) -> AnyTensor:
    """Rebuild a tensor from its JSON dict form."""
    if not isinstance(obj, dict):
        raise FileFormatError("tensor object must be a JSON object")
    kind = obj.get("kind", "tensor")
    data = obj.get("data")
    if not isinstance(data, list):
        raise FileFormatError("tensor object must carry a 'data' array")
    try:
        if kind == "tensor":
            dims = _require_dims(obj.get("shape"))
            return DenseTensor(data, Shape(dims))
        if kind == "square2d":
            row = obj.get("rowShape")
            if row is None:
                raise FileFormatError("square2d tensor objects require a 'rowShape' field")
            return SquareTensor(data, Shape(_require_dims(row)))
    except (ShapeError, ValueError, TypeError) as e:
        if isinstance(e, FileFormatError):
            raise
        raise FileFormatError(str(e)) from None
    raise FileFormatError(f"unknown tensor kind {kind!r}")


def _binary_tensor(t: AnyTensor) -> bytes:
    dims = t.row_shape.dims * 2 if isinstance(t, SquareTensor) else t.shape.dims
    header = struct.pack("<B", len(dims)) + struct.pack(f"<{len(dims)}I", *dims)
    return header + np.ascontiguousarray(t.data, dtype="<f8").tobytes()


def _parse_binary_header(raw: bytes, offset: int) -> tuple[tuple[int, ...], int]:
    (order,) = struct.unpack_from("<B", raw, offset)
    offset += 1
    if order == 0:
        raise FileFormatError("binary tensor order must be at least 1")
    dims = struct.unpack_from(f"<{order}I", raw, offset)
    offset += 4 * order
    if any(n < 1 for n in dims):
        raise FileFormatError(f"binary tensor dims must be positive, got {dims}")
    return tuple(dims), offset


def _parse_binary_payload(raw: bytes, offset: int, count: int) -> tuple[np.ndarray, int]:
    end = offset + 8 * count
    if end > len(raw):
        raise FileFormatError("binary tensor payload is truncated")
    values = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
    return values, end


def write_tensor(path: str, t: AnyTensor, binary: bool = False) -> None:
    """Serialize one tensor; JSON by default, binary on request."""
    if binary:
        _write_bytes(path, MAGIC + _binary_tensor(t))
        return
    _write_bytes(path, (json.dumps(tensor_to_obj(t)) + "\n").encode("utf-8"))


def read_tensor(path: str) -> AnyTensor:
    """Read one tensor, auto-detecting JSON versus binary.

    Binary files carry no kind tag and always come back as
    :class:`DenseTensor`; callers needing square semantics reinterpret
    even-order results themselves.
    """
    raw = _read_bytes(path)
    if raw.startswith(MAGIC):
        dims, offset = _parse_binary_header(raw, len(MAGIC))
        nstar = int(np.prod(dims))
        values, end = _parse_binary_payload(raw, offset, nstar)
        if end != len(raw):
            raise FileFormatError("binary tensor file has trailing bytes")
        try:
            return DenseTensor(values, Shape(dims))
        except (ShapeError, ValueError) as e:
            raise FileFormatError(str(e)) from None
    return tensor_from_obj(_parse_json(raw))


def write_sample_set(
    path: str, s: SampleSet, seed: Optional[int] = None, binary: bool = False
) -> None:
    """Serialize a sample set; the JSON header records the seed when given."""
    if binary:
        chunks = [MAGIC, struct.pack("<Q", len(s))]
        dims = s.shape.dims
        chunks.append(struct.pack("<B", len(dims)) + struct.pack(f"<{len(dims)}I", *dims))
        for t in s:
            chunks.append(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
        _write_bytes(path, b"".join(chunks))
        return
    obj = {
        "kind": "samples",
        "shape": list(s.shape.dims),
        "count": len(s),
        "seed": int(seed) if seed is not None else None,
        "observations": [tensor_to_obj(t) for t in s],
    }
    _write_bytes(path, (json.dumps(obj) + "\n").encode("utf-8"))


def read_sample_set(path: str) -> SampleSet:
    """Read a sample set: binary, JSON object form, or bare JSON array."""
    raw = _read_bytes(path)
    if raw.startswith(MAGIC):
        offset = len(MAGIC)
        (count,) = struct.unpack_from("<Q", raw, offset)
        offset += 8
        dims, offset = _parse_binary_header(raw, offset)
        shape = Shape(dims)
        obs = []
        for _ in range(count):
            values, offset = _parse_binary_payload(raw, offset, shape.nstar)
            try:
                obs.append(DenseTensor(values, shape))
            except ValueError as e:
                raise FileFormatError(str(e)) from None
        if offset != len(raw):
            raise FileFormatError("binary sample file has trailing bytes")
        return SampleSet(shape=shape, observations=tuple(obs))
    doc = _parse_json(raw)
    if isinstance(doc, dict):
        if doc.get("kind") != "samples":
            raise FileFormatError("expected a sample-set object or a JSON array")
        dims = _require_dims(doc.get("shape"))
        items = doc.get("observations")
        if not isinstance(items, list):
            raise FileFormatError("sample-set object must carry an 'observations' array")
        shape = Shape(dims)
    elif isinstance(doc, list):
        if not doc:
            raise FileFormatError(
                "a bare empty sample array carries no shape; use the object form"
            )
        items = doc
        shape = None
    else:
        raise FileFormatError("sample file must hold a JSON object or array")
    obs = []
    for item in items:
        t = tensor_from_obj(item)
        if not isinstance(t, DenseTensor):
            raise FileFormatError("sample observations must be plain tensors")
        obs.append(t)
    if shape is None:
        shape = obs[0].shape
    return SampleSet(shape=shape, observations=tuple(obs))


def write_params(
    path: str, location: DenseTensor, scale: Union[SquareTensor, KroneckerFactors]
) -> None:
    """Serialize distribution parameters (location plus scale spec)."""
    if isinstance(scale, KroneckerFactors):
        scale_obj = {
            "kind": "kronecker",
            "factors": [tensor_to_obj(DenseTensor.from_array(f)) for f in scale.factors],
        }
    else:
        scale_obj = tensor_to_obj(scale)
    obj = {"location": tensor_to_obj(location), "scale": scale_obj}
    _write_bytes(path, (json.dumps(obj) + "\n").encode("utf-8"))


def read_params(path: str) -> tuple[DenseTensor, Union[SquareTensor, KroneckerFactors]]:
    """Read distribution parameters written by :func:`write_params`."""
    doc = _parse_json(_read_bytes(path))
    if not isinstance(doc, dict) or "location" not in doc or "scale" not in doc:
        raise FileFormatError("params file must carry 'location' and 'scale'")
    location = tensor_from_obj(doc["location"])
    if not isinstance(location, DenseTensor):
        raise FileFormatError("params location must be a plain tensor")
    sc = doc["scale"]
    if isinstance(sc, dict) and sc.get("kind") == "kronecker":
        raw_factors = sc.get("factors")
        if not isinstance(raw_factors, list) or not raw_factors:
            raise FileFormatError("kronecker scale must carry a non-empty 'factors' list")
        factors = []
        for fobj in raw_factors:
            ft = tensor_from_obj(fobj)
            if not isinstance(ft, DenseTensor) or ft.order != 2:
                raise FileFormatError("kronecker factors must be order-2 tensors")
            factors.append(ft.array)
        return location, KroneckerFactors(tuple(factors))
    scale = tensor_from_obj(sc)
    if not isinstance(scale, SquareTensor):
        raise FileFormatError("params scale must be a square2d tensor or kronecker factors")
    return location, scale
