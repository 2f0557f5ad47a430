"""Flat binary dumps of fine paths, local-time fields and Skorokhod schedules.

Layout (little-endian)::

    offset  size  field
    0       8     magic  b"RWRSDUMP"
    8       2     format version (1)
    10      2     kind   (1 = FinePath, 2 = LocalTimeField, 3 = SkorokhodSchedule)
    12      8     m      refinement (fine path / field) or m_W (schedule), u64
    20      8     T      horizon t (path / field) or dx (schedule), f64
    28      8     count  number of payload records, u64
    36      8     aux    i64: lo (field), seed (path, schedule; -1 if unknown)
    44      ...   payload

Payloads:

* FinePath: ``count`` int64 lattice positions.
* LocalTimeField: ``count`` float64 values at sites lo .. lo + count - 1.
* SkorokhodSchedule: ``count`` = n_pos, then u64 n_neg, then int64 exit
  indices and float64 exit values of the x > 0 half (n_pos each), then the
  same for the x < 0 half (n_neg each).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .brownian import FinePath, LocalTimeField
from .embed import SkorokhodSchedule

MAGIC = b"RWRSDUMP"
VERSION = 1
HEADER = struct.Struct("<8sHHQdQq")
KIND_PATH, KIND_FIELD, KIND_SCHEDULE = 1, 2, 3


class DumpError(ValueError):
    pass


@dataclass(frozen=True)
class ScheduleDump:
    """The recorded exits of a Skorokhod schedule, as read back from disk."""

    m_w: int
    dx: float
    seed: int | None
    pos_idx: np.ndarray
    pos_val: np.ndarray
    neg_idx: np.ndarray
    neg_val: np.ndarray


def _seed_field(seed) -> int:
    if seed is None:
        return -1
    return int(np.uint64(seed).astype(np.int64))


def _seed_back(aux: int):
    return None if aux == -1 else int(np.int64(aux).astype(np.uint64))


def _header(kind, m, T, count, aux) -> bytes:
    return HEADER.pack(MAGIC, VERSION, kind, int(m), float(T), int(count), int(aux))


def dumps(obj) -> bytes:
    if isinstance(obj, FinePath):
        payload = np.ascontiguousarray(obj.positions, dtype="<i8").tobytes()
        return _header(KIND_PATH, obj.m, obj.T, obj.positions.shape[0], _seed_field(obj.seed)) + payload
    if isinstance(obj, LocalTimeField):
        payload = np.ascontiguousarray(obj.values, dtype="<f8").tobytes()
        return _header(KIND_FIELD, obj.m, obj.t, obj.values.shape[0], obj.lo) + payload
    if isinstance(obj, SkorokhodSchedule):
        pi, pv = obj.exit_indices("+"), obj.exit_values("+")
        ni, nv = obj.exit_indices("-"), obj.exit_values("-")
        parts = [
            _header(KIND_SCHEDULE, obj.w.m_w, obj.dx, pi.shape[0], _seed_field(obj.seed)),
            struct.pack("<Q", ni.shape[0]),
            pi.astype("<i8").tobytes(),
            pv.astype("<f8").tobytes(),
            ni.astype("<i8").tobytes(),
            nv.astype("<f8").tobytes(),
        ]
        return b"".join(parts)
    raise TypeError(f"cannot dump {type(obj).__name__}")


def loads(data: bytes):
    if len(data) < HEADER.size:
        raise DumpError("truncated header")
    magic, version, kind, m, T, count, aux = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise DumpError("not an rwrslab dump (bad magic)")
    if version != VERSION:
        raise DumpError(f"unsupported dump version {version}")
    body = memoryview(data)[HEADER.size:]

    def take(dtype, n, offset):
        size = np.dtype(dtype).itemsize * n
        if offset + size > len(body):
            raise DumpError("truncated payload")
        return np.frombuffer(body, dtype=dtype, count=n, offset=offset).copy(), offset + size

    if kind == KIND_PATH:
        pos, end = take("<i8", count, 0)
        return FinePath(int(m), float(T), pos.astype(np.int64), _seed_back(aux))
    if kind == KIND_FIELD:
        vals, end = take("<f8", count, 0)
        return LocalTimeField(int(m), float(T), int(aux), vals.astype(np.float64))
    if kind == KIND_SCHEDULE:
        if len(body) < 8:
            raise DumpError("truncated payload")
        (n_neg,) = struct.unpack_from("<Q", body)
        pi, off = take("<i8", count, 8)
        pv, off = take("<f8", count, off)
        ni, off = take("<i8", n_neg, off)
        nv, off = take("<f8", n_neg, off)
        return ScheduleDump(int(m), float(T), _seed_back(aux), pi, pv, ni, nv)
    raise DumpError(f"unknown dump kind {kind}")


def save(obj, path) -> Path:
    path = Path(path)
    path.write_bytes(dumps(obj))
    return path


def load(path):
    return loads(Path(path).read_bytes())
