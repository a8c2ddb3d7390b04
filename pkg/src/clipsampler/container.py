"""Binary container formats for feature matrices, score tables, and model files.

All containers are little-endian.

Matrix container (feature and score files)::

    magic    4 bytes   b"SCFT" for clip features, b"SCSC" for score tables
    version  u32       currently 1
    rows     u32       number of clips L
    cols     u32       feature dimension d (features) or class count C (scores)
    data     rows*cols IEEE-754 float32, row-major

Model container (classifier and scorer checkpoints)::

    magic     4 bytes  b"SCLM"
    version   u32      currently 1
    kind      u8       model kind tag (see KIND_* constants)
    name_len  u16      length of the modality tag in bytes
    name      utf-8    modality tag
    n_arrays  u8       number of parameter tensors that follow
    per tensor: rows u32, cols u32, rows*cols float32 row-major

Vectors are stored as 1 x n matrices; callers reshape on load.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ContainerError

MAGIC_FEATURES = b"SCFT"
MAGIC_SCORES = b"SCSC"
MAGIC_MODEL = b"SCLM"
FORMAT_VERSION = 1

KIND_LINEAR_CLASSIFIER = 0
KIND_LINEAR_SIGMOID = 1
KIND_MLP_1HIDDEN = 2
KIND_AC_CLASSIFIER = 3

_MATRIX_HEADER = struct.Struct("<4sIII")
_MODEL_HEADER = struct.Struct("<4sIBH")
_ARRAY_HEADER = struct.Struct("<II")


def _read_exact(fh, n: int, path: Path, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise ContainerError(f"{path}: truncated while reading {what}")
    return buf


def write_matrix(path: str | Path, magic: bytes, matrix: np.ndarray) -> None:
    """Write a 2-D array as a matrix container with the given magic."""
    arr = np.ascontiguousarray(matrix, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
    rows, cols = arr.shape
    with open(path, "wb") as fh:
        fh.write(_MATRIX_HEADER.pack(magic, FORMAT_VERSION, rows, cols))
        fh.write(arr.tobytes())


def read_matrix_header(path: str | Path, expected_magic: bytes) -> tuple[int, int]:
    """Read and validate only the header; returns (rows, cols)."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic, version, rows, cols = _MATRIX_HEADER.unpack(
            _read_exact(fh, _MATRIX_HEADER.size, path, "header")
        )
    if magic != expected_magic:
        raise ContainerError(
            f"{path}: bad magic {magic!r}, expected {expected_magic!r}"
        )
    if version != FORMAT_VERSION:
        raise ContainerError(f"{path}: unsupported container version {version}")
    return rows, cols


def read_matrix(path: str | Path, expected_magic: bytes) -> np.ndarray:
    """Read a full matrix container; returns a float32 array of shape (rows, cols)."""
    path = Path(path)
    rows, cols = read_matrix_header(path, expected_magic)
    with open(path, "rb") as fh:
        fh.seek(_MATRIX_HEADER.size)
        data = _read_exact(fh, rows * cols * 4, path, "matrix data")
    arr = np.frombuffer(data, dtype="<f4").reshape(rows, cols)
    return arr.copy()


def write_model(path: str | Path, kind: int, modality: str, arrays: list[np.ndarray]) -> None:
    """Write a model checkpoint holding one or more parameter tensors."""
    name = modality.encode("utf-8")
    if len(arrays) > 255:
        raise ValueError("too many parameter tensors for one checkpoint")
    with open(path, "wb") as fh:
        fh.write(_MODEL_HEADER.pack(MAGIC_MODEL, FORMAT_VERSION, kind, len(name)))
        fh.write(name)
        fh.write(struct.pack("<B", len(arrays)))
        for arr in arrays:
            a2 = np.ascontiguousarray(arr, dtype="<f4")
            if a2.ndim == 1:
                a2 = a2.reshape(1, -1)
            if a2.ndim != 2:
                raise ValueError(f"parameter tensor must be 1-D or 2-D, got {arr.ndim}-D")
            fh.write(_ARRAY_HEADER.pack(a2.shape[0], a2.shape[1]))
            fh.write(a2.tobytes())


def read_model(path: str | Path) -> tuple[int, str, list[np.ndarray]]:
    """Read a model checkpoint; returns (kind, modality, float64 tensors)."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic, version, kind, name_len = _MODEL_HEADER.unpack(
            _read_exact(fh, _MODEL_HEADER.size, path, "header")
        )
        if magic != MAGIC_MODEL:
            raise ContainerError(f"{path}: bad magic {magic!r}, expected {MAGIC_MODEL!r}")
        if version != FORMAT_VERSION:
            raise ContainerError(f"{path}: unsupported container version {version}")
        modality = _read_exact(fh, name_len, path, "modality tag").decode("utf-8")
        (n_arrays,) = struct.unpack("<B", _read_exact(fh, 1, path, "array count"))
        arrays = []
        for idx in range(n_arrays):
            rows, cols = _ARRAY_HEADER.unpack(
                _read_exact(fh, _ARRAY_HEADER.size, path, f"tensor {idx} header")
            )
            data = _read_exact(fh, rows * cols * 4, path, f"tensor {idx} data")
            arrays.append(
                np.frombuffer(data, dtype="<f4").reshape(rows, cols).astype(np.float64)
            )
    return kind, modality, arrays
