"""Binary container shared by the ensemble, basis, operator and model files.

Layout: an 8-byte magic plus newline, ``key=value`` header lines closed by a
blank line, a little-endian float64 payload, and an 8-byte little-endian
FNV-1a hash of the payload bytes.
"""

import struct

import numpy as np

from .errors import ChecksumError, HeaderError, TruncatedError

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data):
    """64-bit FNV-1a hash of a bytes-like object."""
    h = _FNV_OFFSET
    prime = _FNV_PRIME
    for b in bytes(data):
        h = ((h ^ b) * prime) & _MASK
    return h


def write_container(path, magic, header, arrays):
    """Write ``arrays`` (sequence of float arrays) under a text ``header``."""
    payload = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays
    )
    lines = [magic.rstrip("\n")]
    for key, value in header.items():
        lines.append(f"{key}={value}")
    text = "\n".join(lines) + "\n\n"
    with open(path, "wb") as fh:
        fh.write(text.encode("ascii"))
        fh.write(payload)
        fh.write(struct.pack("<Q", fnv1a64(payload)))


def read_container(path, magic):
    """Return ``(header_dict, payload_float64_array)`` from a container file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    tag = magic.encode("ascii")
    if not raw.startswith(tag):
        raise HeaderError(f"{path}: bad magic string, expected {magic!r}")
    end = raw.find(b"\n\n", len(tag) - 1)
    if end < 0:
        raise HeaderError(f"{path}: unterminated header")
    header = {}
    for line in raw[len(tag):end].decode("ascii", "replace").splitlines():
        if not line:
            continue
        if "=" not in line:
            raise HeaderError(f"{path}: malformed header line {line!r}")
        key, value = line.split("=", 1)
        header[key.strip()] = value.strip()
    body = raw[end + 2:]
    if len(body) < 8 or (len(body) - 8) % 8:
        raise TruncatedError(f"{path}: payload truncated")
    payload, stored = body[:-8], struct.unpack("<Q", body[-8:])[0]
    if fnv1a64(payload) != stored:
        raise ChecksumError(f"{path}: checksum mismatch")
    return header, np.frombuffer(payload, dtype="<f8").astype(np.float64)


def take(payload, offset, count, path="<payload>"):
    """Slice ``count`` values from ``payload`` at ``offset``."""
    if offset + count > payload.size:
        raise TruncatedError(f"{path}: payload shorter than header announces")
    return payload[offset:offset + count].copy(), offset + count


def header_int(header, key, path="<file>"):
    try:
        return int(header[key])
    except (KeyError, ValueError):
        raise HeaderError(f"{path}: missing or invalid header field {key!r}")


def header_float(header, key, path="<file>"):
    try:
        return float.fromhex(header[key])
    except (KeyError, ValueError):
        raise HeaderError(f"{path}: missing or invalid header field {key!r}")
