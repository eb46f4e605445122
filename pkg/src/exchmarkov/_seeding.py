"""Seed derivation and counter-based uniforms.

Sub-seeds come from ``derive_seed(master, *labels)`` so that a labelled
path always yields the same stream no matter how work is scheduled.
Coordinate-level randomness uses a splitmix64 hash of (seed, stream,
coordinates), which makes samplers projective: the value attached to a
tuple never depends on the truncation size.
"""
from __future__ import annotations

import hashlib
from functools import lru_cache

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def derive_seed(master: int, *labels: object) -> int:
    """64-bit seed for ``labels`` under ``master``."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master) & MASK64).encode())
    for label in labels:
        h.update(b"\x1f")
        h.update(repr(label).encode())
    return int.from_bytes(h.digest(), "little")


@lru_cache(maxsize=None)
def _stream_key(stream: str) -> int:
    return derive_seed(0, "stream", stream)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash_bits(seed: int, stream: str, *coords) -> np.ndarray:
    """uint64 hash of ``(seed, stream, coords)``; coords broadcast as arrays."""
    with np.errstate(over="ignore"):
        base = np.uint64((int(seed) ^ _stream_key(stream)) & MASK64)
        h = _mix(np.asarray(base + _GOLDEN, dtype=np.uint64))
        for c in coords:
            c = np.asarray(c, dtype=np.int64).astype(np.uint64)
            h = _mix(h ^ (c * _GOLDEN + np.uint64(1)))
        return h


def hash_uniform(seed: int, stream: str, *coords) -> np.ndarray:
    """Uniform(0,1) values attached to coordinates; vectorised over arrays."""
    bits = hash_bits(seed, stream, *coords)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def uniform_at(seed: int, stream: str, *coords: int) -> float:
    """Scalar convenience wrapper around :func:`hash_uniform`."""
    return float(hash_uniform(seed, stream, *coords))


def rng_for(seed: int, *labels: object) -> np.random.Generator:
    """numpy Generator seeded from a labelled path."""
    return np.random.default_rng(derive_seed(seed, *labels) if labels else int(seed) & MASK64)
