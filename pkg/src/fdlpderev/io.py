"""WAV, feature, envelope-dump and manifest files.

Feature files (``FDLPFEAT``) and envelope dumps (``FDLPENVL``) share one
little-endian container::

    8-byte magic, u32 version (1), u32 rows, u32 cols

``FDLPENVL`` then carries a segment table (u32 count, then per segment
u32 index, u32 rows, u32 valid_length). Both end with rows*cols float32
values in row-major order.
"""
import csv
import os
import struct
from dataclasses import dataclass

import numpy as np
import scipy.io.wavfile

from .dsp import Signal
from .errors import InvalidArgumentError, RateMismatchError, UnsupportedFormatError
from .fdlp import EnvelopeMatrix
from .features import FeatureMatrix

FEATURE_MAGIC = b"FDLPFEAT"
ENVELOPE_MAGIC = b"FDLPENVL"
CONTAINER_VERSION = 1
_HEADER = struct.Struct("<8sIII")
_SEGMENT = struct.Struct("<III")


def read_wav(path, sample_rate=16000, channel=0):
    """Read 16-bit PCM or 32-bit float WAV as a float64 Signal in [-1, 1]."""
    try:
        rate, data = scipy.io.wavfile.read(path)
    except FileNotFoundError:
        raise
    except (ValueError, EOFError, struct.error) as exc:
        raise UnsupportedFormatError(f"{path}: {exc}") from exc
    if data.ndim == 2:
        if not 0 <= channel < data.shape[1]:
            raise InvalidArgumentError(f"{path}: channel {channel} not in file "
                                       f"with {data.shape[1]} channels")
        data = data[:, channel]
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedFormatError(f"{path}: unsupported sample type {data.dtype}; "
                                     "expected 16-bit PCM or 32-bit float")
    if sample_rate is not None and rate != sample_rate:
        raise RateMismatchError(f"{path}: sample rate {rate} Hz, expected {sample_rate} Hz "
                                "(no resampling is done)")
    return Signal(samples, rate)


def write_wav(path, signal, encoding="pcm16"):
    x = signal.samples
    if encoding == "pcm16":
        data = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
    elif encoding == "float32":
        data = x.astype(np.float32)
    else:
        raise InvalidArgumentError(f"unknown WAV encoding {encoding!r}")
    scipy.io.wavfile.write(path, signal.sample_rate, data)


def _check_dims(rows, cols):
    if rows >= 2 ** 32 or cols >= 2 ** 32:
        raise InvalidArgumentError("matrix too large for the container header")


def write_features(matrix, path, format="binary"):
    frames = matrix.frames if isinstance(matrix, FeatureMatrix) else np.asarray(matrix)
    rows, cols = frames.shape
    if format == "binary":
        _check_dims(rows, cols)
        payload = np.ascontiguousarray(frames, dtype="<f4")
        try:
            with open(path, "wb") as f:
                f.write(_HEADER.pack(FEATURE_MAGIC, CONTAINER_VERSION, rows, cols))
                f.write(payload.tobytes())
        except OSError as exc:
            raise OSError(f"writing features to {path}: {exc}") from exc
    elif format == "csv":
        values = frames.astype(np.float32).astype(np.float64)
        try:
            with open(path, "w", newline="") as f:
                w = csv.writer(f)
                for row in values:
                    w.writerow([repr(float(v)) for v in row])
        except OSError as exc:
            raise OSError(f"writing features to {path}: {exc}") from exc
    else:
        raise InvalidArgumentError(f"unknown feature format {format!r}")


def _read_header(data, magic, path):
    if len(data) < _HEADER.size:
        raise UnsupportedFormatError(f"{path}: file too short")
    m, version, rows, cols = _HEADER.unpack_from(data, 0)
    if m != magic:
        raise UnsupportedFormatError(f"{path}: bad magic {m!r}, expected {magic!r}")
    if version != CONTAINER_VERSION:
        raise UnsupportedFormatError(f"{path}: unsupported version {version}")
    return rows, cols


def read_features(path, format=None):
    """Inverse of :func:`write_features`; the format follows the extension
    unless given."""
    if format is None:
        format = "csv" if str(path).endswith(".csv") else "binary"
    if format == "csv":
        with open(path, newline="") as f:
            rows = [[float(v) for v in row] for row in csv.reader(f) if row]
        frames = np.array(rows, dtype=np.float32)
        return FeatureMatrix(frames.reshape(len(rows), -1) if rows else np.zeros((0, 0), np.float32))
    with open(path, "rb") as f:
        data = f.read()
    rows, cols = _read_header(data, FEATURE_MAGIC, path)
    expected = _HEADER.size + 4 * rows * cols
    if len(data) != expected:
        raise UnsupportedFormatError(f"{path}: size {len(data)} != expected {expected}")
    frames = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(rows, cols)
    return FeatureMatrix(frames.astype(np.float32))


def write_envelopes(path, envs):
    """Dump a list of per-segment envelope matrices (float32 payload)."""
    envs = list(envs)
    if not envs:
        raise InvalidArgumentError("no envelope segments to write")
    cols = envs[0].values.shape[1]
    if any(e.values.shape[1] != cols for e in envs):
        raise InvalidArgumentError("segments disagree on band count")
    rows = sum(e.values.shape[0] for e in envs)
    _check_dims(rows, cols)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(ENVELOPE_MAGIC, CONTAINER_VERSION, rows, cols))
        f.write(struct.pack("<I", len(envs)))
        for i, e in enumerate(envs):
            f.write(_SEGMENT.pack(i, e.values.shape[0], e.valid_length))
        for e in envs:
            f.write(np.ascontiguousarray(e.values, dtype="<f4").tobytes())


def read_envelopes(path):
    with open(path, "rb") as f:
        data = f.read()
    rows, cols = _read_header(data, ENVELOPE_MAGIC, path)
    pos = _HEADER.size
    (count,) = struct.unpack_from("<I", data, pos)
    pos += 4
    table = [_SEGMENT.unpack_from(data, pos + i * _SEGMENT.size) for i in range(count)]
    pos += count * _SEGMENT.size
    if sum(t[1] for t in table) != rows or len(data) != pos + 4 * rows * cols:
        raise UnsupportedFormatError(f"{path}: segment table inconsistent with payload")
    values = np.frombuffer(data, dtype="<f4", offset=pos).reshape(rows, cols)
    out = []
    start = 0
    for _, n, valid in table:
        out.append(EnvelopeMatrix(values[start:start + n].astype(np.float64), valid))
        start += n
    return out


@dataclass(frozen=True)
class ManifestRecord:
    clean_path: str
    reverb_path: str
    t60: float
    direct_delay: float
    seed: int

    def line(self):
        return f"{self.clean_path}\t{self.reverb_path}\t{self.t60!r}\t{self.direct_delay!r}\t{self.seed}\n"


MANIFEST_FIELDS = "clean_path<TAB>reverb_path<TAB>t60_s<TAB>direct_delay_s<TAB>rir_seed"


def write_manifest(path, records):
    with open(path, "w") as f:
        for r in records:
            f.write(r.line())


def read_manifest(path):
    """Records with paths resolved relative to the manifest's directory."""
    base = os.path.dirname(os.path.abspath(path))
    out = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 5:
                raise InvalidArgumentError(f"{path}:{lineno}: expected 5 tab-separated fields "
                                           f"({MANIFEST_FIELDS})")
            try:
                out.append(ManifestRecord(os.path.join(base, parts[0]), os.path.join(base, parts[1]),
                                          float(parts[2]), float(parts[3]), int(parts[4])))
            except ValueError as exc:
                raise InvalidArgumentError(f"{path}:{lineno}: {exc}") from exc
    if not out:
        raise InvalidArgumentError(f"{path}: manifest has no records")
    return out
