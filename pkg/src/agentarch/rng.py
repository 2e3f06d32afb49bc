"""Counter-based substream derivation for reproducible parallel simulation.

Every stochastic component draws from a Philox generator keyed by
``(seed, label)``, where the label names the consumer (a task-generation
pass, or one architecture's trial run). Item ``i`` of a stream always owns
the same fixed block of uniforms, so results are independent of worker
count, chunking, and evaluation order.
"""

from __future__ import annotations

import hashlib

import numpy as np

# Philox emits 4 uint64 words per counter block; row addressing below
# requires the per-item draw budget to be a multiple of 4.
_WORDS_PER_BLOCK = 4


def stream_key(seed: int, label: str) -> int:
    """Derive a stable 128-bit Philox key from a seed and stream label."""
    data = f"{seed}:{label}".encode("utf-8")
    return int.from_bytes(hashlib.blake2s(data, digest_size=16).digest(), "little")


def uniform_matrix(seed: int, label: str, n_rows: int, n_cols: int) -> np.ndarray:
    """Return the full (n_rows, n_cols) uniform block for a stream.

    Row ``i`` is the private substream of item ``i``.
    """
    if n_cols % _WORDS_PER_BLOCK != 0:
        raise ValueError(f"n_cols must be a multiple of {_WORDS_PER_BLOCK}, got {n_cols}")
    gen = np.random.Generator(np.random.Philox(key=stream_key(seed, label)))
    return gen.random((n_rows, n_cols))


def uniform_row(seed: int, label: str, row: int, n_cols: int) -> np.ndarray:
    """Return row ``row`` of ``uniform_matrix`` without generating the rest.

    Uses a counter offset so the standalone row is bit-identical to the
    corresponding matrix row.
    """
    if n_cols % _WORDS_PER_BLOCK != 0:
        raise ValueError(f"n_cols must be a multiple of {_WORDS_PER_BLOCK}, got {n_cols}")
    block = row * (n_cols // _WORDS_PER_BLOCK)
    bitgen = np.random.Philox(key=stream_key(seed, label), counter=[block, 0, 0, 0])
    return np.random.Generator(bitgen).random(n_cols)
