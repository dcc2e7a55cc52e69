"""Deterministic random streams keyed by (seed, index, tag)."""

from __future__ import annotations

import zlib

import numpy as np


def _zigzag(j: int) -> int:
    return 2 * j if j >= 0 else -2 * j - 1


def _tag_code(tag: str) -> int:
    return zlib.crc32(tag.encode())


def index_rng(seed: int, j: int, tag: str = "") -> np.random.Generator:
    """Generator that depends only on ``(seed, j, tag)``; ``j`` may be negative."""
    return np.random.default_rng(np.random.SeedSequence([_tag_code(tag), int(seed) & (2**64 - 1), _zigzag(int(j))]))


def task_rng(seed: int, task: int, tag: str = "task") -> np.random.Generator:
    """Independent stream for parallel task ``task`` of a seeded run."""
    return index_rng(seed, task, tag)


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
