"""Counter-based random substreams.

Every random draw in the package comes from `substream(seed, *keys)`, so a
result depends only on the master seed and the key path (run, n, chain...),
never on worker counts or call order.
"""

import zlib
from typing import Union

import numpy as np

Key = Union[int, str]


def _key_to_int(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"substream keys must be non-negative, got {key}")
    return int(key)


def substream(seed: int, *keys: Key) -> np.random.Generator:
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key_to_int(k) for k in keys))
    return np.random.default_rng(sequence)


def derive_seed(seed: int, *keys: Key) -> int:
    """A 63-bit integer seed for APIs that take a plain seed."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key_to_int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
