"""Named, splittable random streams.

All randomness in the package derives from a master seed plus a string/int
key path, hashed with SHA-256 into a PCG64 seed. This keeps every draw
reproducible across platforms and independent of Python's hash
randomization, and lets independent components (scenes, episodes, noise,
training) consume disjoint streams without coordination.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["substream", "stream_seed"]


def stream_seed(*key: int | str) -> int:
    """Derive a 128-bit integer seed from a key path.

    Keys are rendered to a canonical byte string, so ("scene", 3) and
    ("scene", "3") are distinct streams.
    """
    parts = []
    for k in key:
        if isinstance(k, (bool, np.bool_)):
            raise TypeError("bool keys are ambiguous; use int or str")
        if isinstance(k, (int, np.integer)):
            parts.append(b"i" + str(int(k)).encode())
        elif isinstance(k, str):
            parts.append(b"s" + k.encode("utf-8"))
        else:
            raise TypeError(f"unsupported stream key type: {type(k)!r}")
    digest = hashlib.sha256(b"\x1f".join(parts)).digest()
    return int.from_bytes(digest[:16], "little")


def substream(*key: int | str) -> np.random.Generator:
    """Return a fresh PCG64 generator for the given key path."""
    return np.random.Generator(np.random.PCG64(stream_seed(*key)))
