"""CTFW binary matrix container and a CSV adapter.

Layout (little-endian)::

    0-3    magic  b"CTFW"
    4      version (1)
    5      dtype code (1 = float64)
    6-7    reserved, zero
    8-15   rows (uint64)
    16-23  cols (uint64)
    24-    rows * cols float64 values, row-major
"""
from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"CTFW"
VERSION = 1
DTYPE_F64 = 1
HEADER = struct.Struct("<4sBBHQQ")
HEADER_SIZE = HEADER.size  # 24

_LE_F64 = np.dtype("<f8")


class FormatError(ValueError):
    """The file is not a readable CTFW container."""


class TruncatedError(FormatError):
    """The payload is shorter than the header promises."""


def _pack_header(rows, cols):
    return HEADER.pack(MAGIC, VERSION, DTYPE_F64, 0, rows, cols)


def write_matrix(mat, path):
    """Write a 2-D float matrix to ``path`` in CTFW layout.

    Non-finite values are refused so that every file on disk is loadable.
    """
    arr = np.asarray(mat, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("matrix contains NaN or Inf")
    path = Path(path)
    payload = np.ascontiguousarray(arr, dtype=_LE_F64).tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(_pack_header(*arr.shape))
        fh.write(payload)


def read_header(path):
    """Return ``(rows, cols)`` from a CTFW header without reading the payload."""
    with open(path, "rb") as fh:
        raw = fh.read(HEADER_SIZE)
    return _parse_header(raw, path)


def _parse_header(raw, path):
    if len(raw) < HEADER_SIZE:
        raise TruncatedError(f"{path}: header is {len(raw)} bytes, need {HEADER_SIZE}")
    magic, version, dtype, _reserved, rows, cols = HEADER.unpack(raw[:HEADER_SIZE])
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dtype != DTYPE_F64:
        raise FormatError(f"{path}: unsupported dtype code {dtype}")
    if rows < 1 or cols < 1:
        raise FormatError(f"{path}: empty shape ({rows}, {cols})")
    return rows, cols


def read_matrix(path):
    """Load a CTFW file as a read-only ``(rows, cols)`` float64 array."""
    with open(path, "rb") as fh:
        raw = fh.read()
    rows, cols = _parse_header(raw, path)
    expected = rows * cols * 8
    got = len(raw) - HEADER_SIZE
    if got < expected:
        raise TruncatedError(f"{path}: payload has {got} bytes, header promises {expected}")
    if got > expected:
        raise FormatError(f"{path}: {got - expected} trailing bytes after payload")
    arr = np.frombuffer(raw, dtype=_LE_F64, count=rows * cols, offset=HEADER_SIZE)
    arr = arr.astype(np.float64).reshape(rows, cols)
    if not np.isfinite(arr).all():
        raise FormatError(f"{path}: matrix contains NaN or Inf")
    arr.flags.writeable = False
    return arr


def write_csv(mat, path):
    arr = np.asarray(mat, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    # repr-precision keeps the round trip exact
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for row in arr:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def read_csv(path):
    arr = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    if arr.size == 0:
        raise FormatError(f"{path}: empty CSV")
    if not np.isfinite(arr).all():
        raise FormatError(f"{path}: matrix contains NaN or Inf")
    return arr


def load_any(path):
    """Read ``.csv`` via the CSV adapter and anything else as CTFW."""
    if os.fspath(path).lower().endswith(".csv"):
        return read_csv(path)
    return read_matrix(path)
