"""Per-trial seed derivation shared by every battery."""

import numpy as np


def derive_seed(master_seed: int, trial_index: int) -> int:
    """64-bit seed for one trial, mixed from (master seed, trial index)
    with numpy's SeedSequence hash."""
    ss = np.random.SeedSequence([master_seed & (2 ** 64 - 1), trial_index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, trial_index))
