"""
Seeded random streams.

Every stream is a numpy ``PCG64DXSM`` generator keyed by ``SeedSequence(seed mod 2**64, spawn_key=key)``.
The spawn key is hashed into the generator state by ``SeedSequence``, so ``stream(seed, t)`` for
different trial indices ``t`` are independent and do not depend on how trials are split across workers.
"""
import numpy as np

__all__ = (
    'SEED_MASK',
    'normalize_seed',
    'seed_sequence',
    'stream',
    'derive_seed',
)

SEED_MASK = (1 << 64) - 1


def normalize_seed(seed: int) -> int:
    return int(seed) & SEED_MASK


def seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(normalize_seed(seed), spawn_key=tuple(int(k) for k in key))


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64DXSM(seed_sequence(seed, *key)))


def derive_seed(seed: int, *key: int) -> int:
    """
    a 64-bit seed for the stream `(seed, *key)`; `stream(derive_seed(seed, *key))` is reproducible on its own
    """
    return int(seed_sequence(seed, *key).generate_state(1, np.uint64)[0])
