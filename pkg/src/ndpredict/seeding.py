"""Named sub-seeds derived from one run seed."""
import hashlib

import numpy as np


def derive_seed(seed: int, name: str) -> int:
    """Deterministic 32-bit seed for the component called ``name``."""
    digest = int.from_bytes(hashlib.sha256(name.encode()).digest()[:4], "little")
    return int(np.random.SeedSequence([int(seed), digest]).generate_state(1)[0])
