"""Binary checkpoint container.

Layout (all integers little-endian)::

    b"PLM1" | u32 version | u32 config_len | config JSON (utf-8)
    u32 record_count
    record*: u32 name_len | name (utf-8) | u32 rank | u64 dim * rank | f64 * prod(dims)

Round-trips are bit-exact: values are written as raw little-endian float64.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

from ..errors import DataError

MAGIC = b"PLM1"
FORMAT_VERSION = 1


def dumps(params: Mapping[str, np.ndarray], config: Mapping | None = None) -> bytes:
    cfg = json.dumps(dict(config or {}), sort_keys=True).encode("utf-8")
    chunks = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(cfg)), cfg, struct.pack("<I", len(params))]
    for name in sorted(params):
        arr = np.asarray(params[name], dtype="<f8", order="C")
        raw_name = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(raw_name)))
        chunks.append(raw_name)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(arr.tobytes())
    return b"".join(chunks)


def loads(blob: bytes) -> tuple[dict[str, np.ndarray], dict]:
    try:
        return _parse(blob)
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"truncated or corrupt checkpoint ({exc})") from exc


def _parse(blob: bytes) -> tuple[dict[str, np.ndarray], dict]:
    if blob[:4] != MAGIC:
        raise DataError("not a checkpoint: bad magic")
    version, cfg_len = struct.unpack_from("<II", blob, 4)
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported checkpoint version {version}")
    off = 12
    config = json.loads(blob[off : off + cfg_len].decode("utf-8"))
    off += cfg_len
    (count,) = struct.unpack_from("<I", blob, off)
    off += 4
    params: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", blob, off)
        off += 4
        name = blob[off : off + name_len].decode("utf-8")
        off += name_len
        (rank,) = struct.unpack_from("<I", blob, off)
        off += 4
        dims = struct.unpack_from(f"<{rank}Q", blob, off)
        off += 8 * rank
        n = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(blob, dtype="<f8", count=n, offset=off).reshape(dims)
        off += 8 * n
        params[name] = arr.astype(np.float64)
    if off != len(blob):
        raise DataError("trailing bytes after last checkpoint record")
    return params, config


def save(path: str | Path, params: Mapping[str, np.ndarray], config: Mapping | None = None) -> None:
    Path(path).write_bytes(dumps(params, config))


def load(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    return loads(Path(path).read_bytes())
