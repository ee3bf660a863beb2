"""Binary ground-state cache.

Layout (all little-endian)::

    b"QISGS1\\n"  u32 N  u32 count
    count x { f64 h1/J, f64 h2/J, f64 energy, u8 degenerate, 2^N x (f64 re, f64 im) }

A sidecar ``<file>.sha256`` holds the hex digest of the cache bytes; a cache is
valid only when magic, header and digest all agree.
"""

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError

log = logging.getLogger(__name__)

MAGIC = b"QISGS1\n"
_HEADER = np.dtype([("N", "<u4"), ("count", "<u4")])


def _record_dtype(n):
    return np.dtype(
        [("x", "<f8", (2,)), ("energy", "<f8"), ("degenerate", "u1"), ("amp", "<f8", (2**n, 2))]
    )


@dataclass(frozen=True, eq=False)
class GroundStateTable:
    N: int
    xs: np.ndarray  # (count, 2)
    energies: np.ndarray
    degenerate: np.ndarray
    vectors: np.ndarray  # (count, 2^N) complex

    def __len__(self):
        return len(self.energies)


def encode(table: GroundStateTable):
    rec = np.zeros(len(table), dtype=_record_dtype(table.N))
    rec["x"] = table.xs
    rec["energy"] = table.energies
    rec["degenerate"] = table.degenerate.astype(np.uint8)
    rec["amp"][..., 0] = table.vectors.real
    rec["amp"][..., 1] = table.vectors.imag
    head = np.array([(table.N, len(table))], dtype=_HEADER)
    return MAGIC + head.tobytes() + rec.tobytes()


def decode(data: bytes, source="<bytes>"):
    if not data.startswith(MAGIC):
        raise ParseError(f"{source}: bad magic bytes")
    off = len(MAGIC)
    if len(data) < off + _HEADER.itemsize:
        raise ParseError(f"{source}: truncated header")
    head = np.frombuffer(data, dtype=_HEADER, count=1, offset=off)[0]
    n, count = int(head["N"]), int(head["count"])
    off += _HEADER.itemsize
    dt = _record_dtype(n)
    if len(data) != off + count * dt.itemsize:
        raise ParseError(f"{source}: expected {count} records of {dt.itemsize} bytes")
    rec = np.frombuffer(data, dtype=dt, count=count, offset=off)
    vectors = rec["amp"][..., 0] + 1j * rec["amp"][..., 1]
    return GroundStateTable(n, rec["x"].copy(), rec["energy"].copy(), rec["degenerate"].astype(bool), vectors)


def _digest_path(path):
    path = Path(path)
    return path.with_name(path.name + ".sha256")


def write(path, table: GroundStateTable):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = encode(table)
    path.write_bytes(data)
    _digest_path(path).write_text(hashlib.sha256(data).hexdigest() + "\n")


def read(path):
    path = Path(path)
    return decode(path.read_bytes(), str(path))


def is_valid(path, N=None, count=None):
    """True when the file decodes, matches header expectations and its digest."""
    path = Path(path)
    digest = _digest_path(path)
    if not path.exists() or not digest.exists():
        return False
    data = path.read_bytes()
    if not data.startswith(MAGIC):
        log.warning("cache %s has corrupted magic bytes; it will be regenerated", path)
        return False
    if hashlib.sha256(data).hexdigest() != digest.read_text().strip():
        log.warning("cache %s failed its checksum; it will be regenerated", path)
        return False
    try:
        head = np.frombuffer(data, dtype=_HEADER, count=1, offset=len(MAGIC))[0]
    except ValueError:
        return False
    if N is not None and int(head["N"]) != N:
        return False
    if count is not None and int(head["count"]) != count:
        return False
    return True
