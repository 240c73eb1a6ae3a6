"""Stable per-stage random streams.

Python's ``hash`` is salted per process, so stage names are folded in with
CRC32 instead; adding a stage never perturbs the draws of another.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream_key(*parts) -> list[int]:
    out = []
    for p in parts:
        if isinstance(p, (int, np.integer)) and p >= 0:
            out.append(int(p))
        else:
            out.append(zlib.crc32(str(p).encode("utf-8")))
    return out


def derive_rng(seed: int, *parts) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(stream_key(seed, *parts)))
