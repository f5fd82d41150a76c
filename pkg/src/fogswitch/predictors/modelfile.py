"""Binary model file (``.fsm``).

Layout, all integers little-endian::

    magic    4 bytes  b"FSM1"
    version  u8       FORMAT_VERSION
    count    u32      number of fields
    field * count:
        name_len  u16, name (utf-8)
        dtype     u8   0 = float64, 1 = int64, 2 = utf-8 string
        ndim      u8   (0 for scalars and strings)
        dims      u32 * ndim
        data_len  u64, data (raw little-endian values or utf-8 bytes)
    crc32    u32      zlib.crc32 of every preceding byte

Fields: ``kind``, ``std.means``, ``std.stdevs``, then one ``p.<name>`` per
payload entry.
"""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import ModelIOError, SchemaMismatch
from .base import RegressorKind, Standardizer, TrainedModel

MAGIC = b"FSM1"
FORMAT_VERSION = 1

F64, I64, STR = 0, 1, 2


def _encode_field(name: str, value) -> bytes:
    if isinstance(value, str):
        dtype, dims, data = STR, (), value.encode("utf-8")
    else:
        arr = np.asarray(value)
        if arr.dtype.kind in "iub":
            dtype, arr = I64, arr.astype("<i8")
        elif arr.dtype.kind == "f":
            dtype, arr = F64, arr.astype("<f8")
        else:
            raise TypeError(f"cannot serialize field {name!r} of dtype {arr.dtype}")
        dims, data = arr.shape, arr.tobytes(order="C")
    raw = name.encode("utf-8")
    head = struct.pack("<H", len(raw)) + raw + struct.pack("<BB", dtype, len(dims))
    head += b"".join(struct.pack("<I", d) for d in dims)
    return head + struct.pack("<Q", len(data)) + data


def dumps(model: TrainedModel) -> bytes:
    fields = [
        ("kind", model.kind.value),
        ("std.means", model.standardizer.means),
        ("std.stdevs", model.standardizer.stdevs),
    ]
    fields += [(f"p.{k}", v) for k, v in model.payload.items()]
    body = MAGIC + struct.pack("<BI", FORMAT_VERSION, len(fields))
    body += b"".join(_encode_field(k, v) for k, v in fields)
    return body + struct.pack("<I", zlib.crc32(body))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf, self.pos = buf, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise SchemaMismatch("model file is truncated")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def loads(buf: bytes) -> TrainedModel:
    if len(buf) < len(MAGIC) or buf[:4] != MAGIC:
        raise SchemaMismatch("not a model file (bad magic header)")
    if len(buf) < 4 + 5 + 4:
        raise SchemaMismatch("model file is truncated")
    body, (crc,) = buf[:-4], struct.unpack("<I", buf[-4:])
    r = _Reader(body)
    r.take(4)
    version, count = r.unpack("<BI")
    if version != FORMAT_VERSION:
        raise SchemaMismatch(f"unsupported model file version {version}")
    fields = {}
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        dtype, ndim = r.unpack("<BB")
        dims = r.unpack(f"<{ndim}I") if ndim else ()
        (size,) = r.unpack("<Q")
        data = r.take(size)
        if dtype == STR:
            fields[name] = data.decode("utf-8")
        elif dtype in (F64, I64):
            arr = np.frombuffer(data, dtype="<f8" if dtype == F64 else "<i8")
            if arr.size != int(np.prod(dims, dtype=np.int64)):
                raise SchemaMismatch(f"field {name!r}: {arr.size} values do not fill shape {dims}")
            arr = arr.reshape(dims).astype(np.float64 if dtype == F64 else np.int64)
            fields[name] = arr.item() if ndim == 0 else arr
        else:
            raise SchemaMismatch(f"field {name!r}: unknown dtype tag {dtype}")
    if r.pos != len(body):
        raise SchemaMismatch("trailing bytes after the last field")
    if zlib.crc32(body) != crc:
        raise SchemaMismatch("checksum mismatch (file corrupted or truncated)")
    try:
        kind = RegressorKind.parse(fields.pop("kind"))
        std = Standardizer(fields.pop("std.means"), fields.pop("std.stdevs"))
    except (KeyError, ValueError) as e:
        raise SchemaMismatch(f"missing or invalid header field: {e}") from None
    payload = {k[2:]: v for k, v in fields.items() if k.startswith("p.")}
    return TrainedModel(kind, std, payload)


def save_model(model: TrainedModel, path) -> None:
    try:
        Path(path).write_bytes(dumps(model))
    except OSError as e:
        raise ModelIOError(f"cannot write model file {path}: {e}") from e


def load_model(path) -> TrainedModel:
    try:
        buf = Path(path).read_bytes()
    except OSError as e:
        raise ModelIOError(f"cannot read model file {path}: {e}") from e
    return loads(buf)
