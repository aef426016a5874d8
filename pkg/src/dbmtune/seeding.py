"""Counter-based seed derivation.

Every random stream in an experiment is keyed by a tuple of integers
(master seed, run index, role, ...) so results do not depend on the order
in which runs or evaluations are scheduled.
"""

import numpy as np

# role keys
OPTIMIZER = 0
EVALUATION = 1
SPLIT = 2
FINAL_TRAIN = 3
PSEUDO_LIKELIHOOD = 4


def derive_seed(master_seed: int, *keys: int) -> int:
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in keys))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def derive_rng(master_seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, *keys))
