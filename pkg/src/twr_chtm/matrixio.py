"""Binary matrix files with JSON sidecars, and PGM/PPM raster rendering.

Layout: b"CHTM1", u8 kind, u32 rows, u32 cols (little endian), then
rows*cols float64 little endian, row major.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

MAGIC = b"CHTM1"
_HEADER = struct.Struct("<5sBII")


class MatrixKind(IntEnum):
    RTM = 0
    DTM = 1
    CHTM = 2
    CUBE_REAL = 3
    CUBE_IMAG = 4


class MatrixFormatError(ValueError):
    pass


@dataclass
class MatrixFile:
    kind: MatrixKind
    data: np.ndarray
    sidecar: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.data.shape


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def encode_matrix(kind: MatrixKind, data) -> bytes:
    data = np.asarray(data, dtype="<f8")
    if data.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got shape {data.shape}")
    return _HEADER.pack(MAGIC, int(kind), *data.shape) + np.ascontiguousarray(data).tobytes()


def decode_matrix(blob: bytes):
    if len(blob) < _HEADER.size:
        raise MatrixFormatError("file shorter than the header")
    magic, kind, rows, cols = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise MatrixFormatError(f"bad magic {magic!r}")
    try:
        kind = MatrixKind(kind)
    except ValueError:
        raise MatrixFormatError(f"unknown kind tag {kind}") from None
    payload = blob[_HEADER.size:]
    if len(payload) != 8 * rows * cols:
        raise MatrixFormatError(f"payload is {len(payload)} bytes, header implies {8 * rows * cols}")
    data = np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(float)
    return kind, data


def write_matrix(path, kind: MatrixKind, data, sidecar: dict | None = None) -> Path:
    path = Path(path)
    path.write_bytes(encode_matrix(kind, data))
    meta = {"kind": MatrixKind(kind).name, "rows": int(np.shape(data)[0]), "cols": int(np.shape(data)[1])}
    meta.update(sidecar or {})
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_matrix(path, with_sidecar: bool = True) -> MatrixFile:
    path = Path(path)
    kind, data = decode_matrix(path.read_bytes())
    meta = {}
    side = sidecar_path(path)
    if with_sidecar and side.exists():
        meta = json.loads(side.read_text())
    return MatrixFile(kind, data, meta)


def read_header(path) -> dict:
    path = Path(path)
    with path.open("rb") as fh:
        head = fh.read(_HEADER.size)
    if len(head) < _HEADER.size:
        raise MatrixFormatError("file shorter than the header")
    magic, kind, rows, cols = _HEADER.unpack(head)
    if magic != MAGIC:
        raise MatrixFormatError(f"bad magic {magic!r}")
    size = path.stat().st_size
    return {"magic": magic.decode(), "kind": int(kind),
            "kind_name": MatrixKind(kind).name if kind in MatrixKind._value2member_map_ else "?",
            "rows": rows, "cols": cols, "payload_bytes": size - _HEADER.size,
            "payload_ok": size - _HEADER.size == 8 * rows * cols}


def stretch_u8(data) -> np.ndarray:
    """Min-max stretch to 0..255; a zero-span matrix maps to all zeros."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.size == 0:
        raise ValueError("need a non-empty 2-D matrix")
    if not np.all(np.isfinite(data)):
        raise ValueError("matrix contains non-finite values")
    lo, hi = data.min(), data.max()
    if hi <= lo:
        return np.zeros(data.shape, np.uint8)
    return np.rint((data - lo) / (hi - lo) * 255).astype(np.uint8)


# sampled perceptually uniform blue -> green -> yellow ramp
_VIRIDIS_KNOTS = np.array([
    [68, 1, 84], [72, 40, 120], [62, 74, 137], [49, 104, 142], [38, 130, 142],
    [31, 158, 137], [53, 183, 121], [109, 205, 89], [180, 222, 44], [253, 231, 37],
], dtype=float)


def viridis_lut() -> np.ndarray:
    x = np.linspace(0, 1, len(_VIRIDIS_KNOTS))
    t = np.linspace(0, 1, 256)
    return np.rint(np.column_stack([np.interp(t, x, _VIRIDIS_KNOTS[:, c]) for c in range(3)])).astype(np.uint8)


def render(data, colormap: str = "gray") -> bytes:
    """Binary PGM (gray) or PPM (viridis) image; image rows follow matrix rows."""
    img = stretch_u8(data)
    rows, cols = img.shape
    if colormap == "gray":
        return f"P5\n{cols} {rows}\n255\n".encode() + img.tobytes()
    if colormap == "viridis":
        return f"P6\n{cols} {rows}\n255\n".encode() + viridis_lut()[img].tobytes()
    raise ValueError(f"unknown colormap {colormap!r}")
