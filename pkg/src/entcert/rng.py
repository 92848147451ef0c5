"""Counter-based random streams for reproducible, partition-independent sampling.

All simulation draws come from Philox streams keyed by a 64-bit seed.  Philox
emits four doubles per counter step, so samplers lay their trials out on
4-double strides: any contiguous range of trials can then be regenerated by
advancing the counter, and partitioning work across threads cannot change the
output.
"""

from __future__ import annotations

import hashlib

import numpy as np

#: Doubles emitted per Philox counter increment.
WORDS_PER_STEP = 4


def derive_seed(master_seed: int, *indices: int) -> int:
    """Derive a stable 64-bit subseed from a master seed and index path."""
    payload = ":".join(str(int(v)) for v in (master_seed, *indices)).encode("ascii")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")


def philox(seed: int, step_offset: int = 0) -> np.random.Generator:
    """Philox generator positioned ``step_offset`` counter steps into the stream.

    One counter step corresponds to WORDS_PER_STEP uniform doubles.
    """
    bitgen = np.random.Philox(key=int(seed) & (2**64 - 1))
    if step_offset:
        bitgen.advance(int(step_offset))
    return np.random.Generator(bitgen)


def steps_for(doubles: int) -> int:
    """Counter steps needed to hold ``doubles`` uniform draws (rounded up)."""
    return -(-int(doubles) // WORDS_PER_STEP)
