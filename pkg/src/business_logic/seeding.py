from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence]

# first spawn key of every random stream, one per simulation family
FRINGE_STREAM = 1
CAMPAIGN_STREAM = 2
LADDER_STREAM = 3
BOOTSTRAP_STREAM = 4
TRIAL_STREAM = 5


def derive_seed(master: SeedLike, *keys: int) -> np.random.SeedSequence:
    """Child seed sequence addressed by integer keys below `master`.

    The same (master, keys) always yields the same stream, whatever other
    streams were drawn before it.
    """
    if isinstance(master, np.random.SeedSequence):
        return np.random.SeedSequence(master.entropy, spawn_key=tuple(master.spawn_key) + tuple(keys))
    if isinstance(master, (bool, np.bool_)) or int(master) != master or master < 0:
        raise ValueError(f"Seed must be a non-negative integer, got {master!r}")
    return np.random.SeedSequence(int(master), spawn_key=tuple(int(key) for key in keys))


def derive_rng(master: SeedLike, *keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *keys))


def as_generator(seed: Union[SeedLike, np.random.Generator]) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return derive_rng(seed)
