"""Seeded stream derivation and order-preserving parallel map."""
from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor

import numpy as np

# Stream tags keep the independent uses of one master seed apart.
TAG_PERMUTATION = 1
TAG_GOF_REPLICATE = 2
TAG_IMPORTANCE = 3
TAG_TRUSTED_DRAW = 4
TAG_TEST_DRAW = 5
TAG_STUDY_TRIAL = 6


def stream(seed, *keys):
    """Generator for the sub-stream ``(seed, *keys)``; schedule independent."""
    return np.random.default_rng([int(seed), *map(int, keys)])


def derive_seed(seed, *keys):
    """A 32-bit seed for the sub-stream ``(seed, *keys)``."""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1)[0])


def id_keys(ids, seed):
    """Uniform [0, 1) key per run id, a pure function of (seed, id)."""
    out = np.empty(len(ids))
    prefix = f"{int(seed)}\x00".encode()
    for i, rid in enumerate(ids):
        h = hashlib.blake2b(prefix + str(rid).encode(), digest_size=8).digest()
        out[i] = (int.from_bytes(h, "little") >> 11) * 2.0**-53
    return out


def _run_chunk(payload):
    func, args, items = payload
    return [func(*args, item) for item in items]


def ordered_map(func, items, args=(), jobs=1):
    """``[func(*args, item) for item in items]``, optionally across processes.

    Items are split into contiguous chunks and results concatenated in item
    order, so the output never depends on ``jobs``.
    """
    items = list(items)
    jobs = max(1, int(jobs or 1))
    if jobs == 1 or len(items) < 2:
        return [func(*args, item) for item in items]
    n_chunks = min(jobs, len(items))
    bounds = np.linspace(0, len(items), n_chunks + 1).astype(int)
    chunks = [items[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=n_chunks) as pool:
        parts = list(pool.map(_run_chunk, [(func, args, c) for c in chunks]))
    return [r for part in parts for r in part]
