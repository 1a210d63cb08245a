"""Binary parameter checkpoints and text loss histories.

Checkpoint layout (all integers little-endian)::

    b"FDLPCKPT"             8-byte magic
    u32 version             currently 1
    u32 n, n bytes          UTF-8 JSON config block
    u32 tensor count
    per tensor:
        u16 n, n bytes      UTF-8 tensor name
        u32 ndim, ndim*u64  shape
        float64 values      little-endian, C order
"""
import json
import struct

import numpy as np

from ..errors import UnsupportedFormatError
from .config import EnhancerConfig
from .network import check_params

MAGIC = b"FDLPCKPT"
VERSION = 1


def save_checkpoint(path, params, config, meta=None):
    block = json.dumps({"config": config.to_dict(), "meta": meta or {}}, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(block)))
        f.write(block)
        f.write(struct.pack("<I", len(params)))
        for name in sorted(params):
            arr = np.ascontiguousarray(params[name], dtype="<f8")
            raw = name.encode()
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            f.write(arr.tobytes())


def load_checkpoint(path):
    """Returns ``(params, config, meta)``."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:8] != MAGIC:
        raise UnsupportedFormatError(f"{path}: not a checkpoint (bad magic)")
    version, n = struct.unpack_from("<II", data, 8)
    if version != VERSION:
        raise UnsupportedFormatError(f"{path}: unsupported checkpoint version {version}")
    pos = 16
    block = json.loads(data[pos:pos + n].decode())
    pos += n
    config = EnhancerConfig.from_dict(block["config"])
    (count,) = struct.unpack_from("<I", data, pos)
    pos += 4
    params = {}
    for _ in range(count):
        (ln,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos:pos + ln].decode()
        pos += ln
        (ndim,) = struct.unpack_from("<I", data, pos)
        pos += 4
        shape = struct.unpack_from(f"<{ndim}Q", data, pos)
        pos += 8 * ndim
        size = int(np.prod(shape, dtype=np.int64))
        params[name] = np.frombuffer(data, dtype="<f8", count=size, offset=pos).reshape(shape).astype(np.float64)
        pos += 8 * size
    check_params(params, config)
    return params, config, block.get("meta", {})


def write_history(path, records):
    with open(path, "w") as f:
        f.write("# epoch train_loss val_loss\n")
        for r in records:
            f.write(f"{r.epoch} {r.train_loss!r} {r.val_loss!r}\n")


def read_history(path):
    from .training import TrainRecord
    out = []
    with open(path) as f:
        for line in f:
            if line.startswith("#") or not line.strip():
                continue
            e, tr, va = line.split()
            out.append(TrainRecord(int(e), float(tr), float(va)))
    return out
