"""Seed plumbing: every random draw is keyed by integers, never by call order."""
import zlib

import numpy as np

from .errors import ValidationError

_MAX_SEED = 2**64 - 1


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ValidationError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if seed < 0 or seed > _MAX_SEED:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def rng_for(seed, *keys) -> np.random.Generator:
    """Generator whose stream is a pure function of ``(seed, *keys)``."""
    entropy = [check_seed(seed)] + [int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def stream_id(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def derive_seed(seed, *keys) -> int:
    """Derive a child 64-bit seed. String keys are hashed into stable integers."""
    ints = [stream_id(k) if isinstance(k, str) else int(k) for k in keys]
    ss = np.random.SeedSequence([check_seed(seed)] + ints)
    return int(ss.generate_state(1, np.uint64)[0])
