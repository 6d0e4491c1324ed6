"""Named seed derivation: every random stream is a function of (root seed, names)."""
import hashlib

import numpy as np


def derive_seed(seed: int, *names) -> int:
    """Deterministic 64-bit child seed for a stage/component path."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for n in names:
        h.update(b"\x1f")
        h.update(str(n).encode())
    return int.from_bytes(h.digest(), "little")


def rng_for(seed: int, *names) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *names))
