"""Deterministic hashing and seeded unit draws.

FNV-1a 64-bit is the content hash for table files and commit ids; splitmix64
turns FNV-combined keys into uniform draws in [0, 1). Both are bit-exact
across platforms, so catalogs and generated data reproduce byte-identically.
"""

from __future__ import annotations

import struct

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_SPLITMIX_M1 = 0xBF58476D1CE4E5B9
_SPLITMIX_M2 = 0x94D049BB133111EB


def fnv1a64(data: bytes, h: int = FNV_OFFSET) -> int:
    """FNV-1a 64-bit over ``data``, continuing from state ``h``."""
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK64
    return h


try:
    import numba

    @numba.njit("uint64(uint8[::1], uint64)", cache=True)
    def _fnv1a64_jit(buf, h):  # pragma: no cover - exercised via fnv1a64_bytes
        prime = np.uint64(FNV_PRIME)
        for i in range(buf.shape[0]):
            h = (h ^ np.uint64(buf[i])) * prime
        return h

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


def fnv1a64_bytes(data: bytes) -> int:
    """FNV-1a 64-bit of a full buffer; JIT-accelerated for large inputs."""
    if _HAVE_NUMBA and len(data) >= 4096:
        buf = np.frombuffer(data, dtype=np.uint8)
        return int(_fnv1a64_jit(buf, np.uint64(FNV_OFFSET)))
    return fnv1a64(data)


def hex16(h: int) -> str:
    """Render a 64-bit hash as 16 lowercase hex digits."""
    return f"{h & _MASK64:016x}"


def splitmix64(x: int) -> int:
    """One splitmix64 step: mix ``x + gamma`` into a well-distributed uint64."""
    z = (x + _SPLITMIX_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * _SPLITMIX_M1) & _MASK64
    z = ((z ^ (z >> 27)) * _SPLITMIX_M2) & _MASK64
    return z ^ (z >> 31)


def _key_bytes(seed: int, *parts: str) -> bytes:
    out = struct.pack("<Q", seed & _MASK64)
    for p in parts:
        out += p.encode("utf-8") + b"\x00"
    return out


def unit_draw(seed: int, *parts: str) -> float:
    """Uniform draw in [0, 1) keyed by (seed, *parts)."""
    return splitmix64(fnv1a64(_key_bytes(seed, *parts))) / 2.0**64


def unit_draws_for_ids(seed: int, ids: np.ndarray, *parts: str) -> np.ndarray:
    """Vectorized uniform draws in [0, 1), keyed by (seed, *parts, id).

    Bit-identical to ``unit_draw`` continued over each id's 8 little-endian
    bytes; the test suite pins the two paths against each other.
    """
    prefix = np.uint64(fnv1a64(_key_bytes(seed, *parts)))
    prime = np.uint64(FNV_PRIME)
    h = np.full(ids.shape[0], prefix, dtype=np.uint64)
    u = ids.astype(np.uint64)
    for k in range(8):
        byte_k = (u >> np.uint64(8 * k)) & np.uint64(0xFF)
        h = (h ^ byte_k) * prime
    return _splitmix64_np(h) / np.float64(2.0**64)


def unit_draw_for_id(seed: int, id_value: int, *parts: str) -> float:
    """Scalar counterpart of ``unit_draws_for_ids`` for a single id."""
    h = fnv1a64(struct.pack("<Q", id_value), fnv1a64(_key_bytes(seed, *parts)))
    return splitmix64(h) / 2.0**64


def _splitmix64_np(x: np.ndarray) -> np.ndarray:
    z = x + np.uint64(_SPLITMIX_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_SPLITMIX_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_SPLITMIX_M2)
    return z ^ (z >> np.uint64(31))
