"""Binary encoding of sketches.

All fields are little-endian.  A sketch record is::

    offset size  field
    0      4     magic  b"UDDS"
    4      2     format version (uint16, currently 1)
    6      1     kind tag: 0 = UDDSketch, 1 = DDSketch L, 2 = DDSketch H
    7      1     flags: bit 0 set when a DDSketch boundary index follows
    8      8     alpha0 (float64; the fixed alpha for DDSketch)
    16     8     collapses k (uint64)
    24     8     bucket budget m (uint64)
    32     8     total count (uint64)
    40     8     bucket count b (uint64)
    48     16*b  b pairs of (index int64, count uint64), ascending by index
    ...    8     boundary index (int64), DDSketch only, present iff flags bit 0

A signed sketch is ``b"UDSG"``, version (uint16), two pad bytes, zero count
(uint64), then the positive record followed by the negative record.

For UDDSketch the current gamma and alpha are not stored: they are rebuilt
from ``alpha0`` by ``k`` squarings, which is exactly how a live sketch
computes them, so a decoded sketch is bit-identical to the original.
"""

from __future__ import annotations

import struct
from typing import Tuple, Union

from .core import BucketStore
from .ddsketch import HIGH, LOW, DDSketch
from .signed import SignedUDDSketch
from .sketch import UDDSketch

MAGIC = b"UDDS"
SIGNED_MAGIC = b"UDSG"
VERSION = 1

KIND_UDD = 0
KIND_DD_LOW = 1
KIND_DD_HIGH = 2

_HEADER = struct.Struct("<4sHBBdQQQQ")
_PAIR = struct.Struct("<qQ")
_I64 = struct.Struct("<q")
_SIGNED_HEADER = struct.Struct("<4sH2xQ")

AnySketch = Union[UDDSketch, DDSketch, SignedUDDSketch]


class FormatError(ValueError):
    pass


def _pack(kind: int, alpha0: float, k: int, m: int, store: BucketStore, boundary=None) -> bytes:
    flags = 0 if boundary is None else 1
    parts = [_HEADER.pack(MAGIC, VERSION, kind, flags, alpha0, k, m, store.total, len(store))]
    parts.extend(_PAIR.pack(i, c) for i, c in store.items())
    if boundary is not None:
        parts.append(_I64.pack(boundary))
    return b"".join(parts)


def dumps(sketch: AnySketch) -> bytes:
    if isinstance(sketch, UDDSketch):
        return _pack(KIND_UDD, sketch.alpha0, sketch.k, sketch.m, sketch.store)
    if isinstance(sketch, DDSketch):
        kind = KIND_DD_LOW if sketch.strategy == LOW else KIND_DD_HIGH
        return _pack(kind, sketch.alpha, sketch.collapse_count, sketch.m, sketch.store,
                     sketch.collapsed_boundary_index)
    if isinstance(sketch, SignedUDDSketch):
        return (_SIGNED_HEADER.pack(SIGNED_MAGIC, VERSION, sketch.zero_count)
                + dumps(sketch.positives) + dumps(sketch.negatives))
    raise TypeError(f"cannot encode {type(sketch).__name__}")


def _unpack(buf: bytes, offset: int) -> Tuple[Union[UDDSketch, DDSketch], int]:
    if len(buf) - offset < _HEADER.size:
        raise FormatError("truncated sketch header")
    magic, version, kind, flags, alpha0, k, m, total, nbuckets = _HEADER.unpack_from(buf, offset)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}")
    offset += _HEADER.size
    end = offset + nbuckets * _PAIR.size
    if end > len(buf):
        raise FormatError("truncated bucket list")
    store = BucketStore()
    prev = None
    for i, c in _PAIR.iter_unpack(buf[offset:end]):
        if prev is not None and i <= prev:
            raise FormatError("bucket indices are not strictly ascending")
        store.add(i, c)
        prev = i
    offset = end
    if store.total != total:
        raise FormatError(f"total {total} does not match bucket sum {store.total}")

    if kind == KIND_UDD:
        return UDDSketch._restore(alpha0, m, k, store), offset
    if kind in (KIND_DD_LOW, KIND_DD_HIGH):
        s = DDSketch(alpha0, m, LOW if kind == KIND_DD_LOW else HIGH)
        s.store = store
        s.collapse_count = k
        if flags & 1:
            if offset + _I64.size > len(buf):
                raise FormatError("truncated boundary index")
            (s.collapsed_boundary_index,) = _I64.unpack_from(buf, offset)
            offset += _I64.size
        return s, offset
    raise FormatError(f"unknown sketch kind {kind}")


def loads(buf: bytes) -> AnySketch:
    buf = bytes(buf)
    if buf[:4] == SIGNED_MAGIC:
        _, version, zeros = _SIGNED_HEADER.unpack_from(buf, 0)
        if version != VERSION:
            raise FormatError(f"unsupported format version {version}")
        pos, offset = _unpack(buf, _SIGNED_HEADER.size)
        neg, offset = _unpack(buf, offset)
        if not (isinstance(pos, UDDSketch) and isinstance(neg, UDDSketch)):
            raise FormatError("signed sketch halves must be UDDSketch records")
        sketch: AnySketch = SignedUDDSketch._from_parts(pos, neg, zeros)
    else:
        sketch, offset = _unpack(buf, 0)
    if offset != len(buf):
        raise FormatError(f"{len(buf) - offset} trailing bytes")
    return sketch


def save(sketch: AnySketch, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(sketch))


def load(path) -> AnySketch:
    with open(path, "rb") as fh:
        return loads(fh.read())
