"""Counter-based random streams.

Every Monte Carlo trial owns the uniforms at a fixed position of a Philox
stream keyed by the root seed: trial ``i`` reads counter blocks
``[BLOCKS_PER_TRIAL * i, BLOCKS_PER_TRIAL * (i + 1))``. A trial's randomness
therefore depends only on ``(seed, i)``, never on how trials are scheduled
across workers.
"""

from __future__ import annotations

import numpy as np

UNIFORMS_PER_TRIAL = 8
# Philox emits four 64-bit words per counter increment; one double per word.
BLOCKS_PER_TRIAL = UNIFORMS_PER_TRIAL // 4

_TRIAL_NAMESPACE = 0
_BULK_NAMESPACE = 1


def _key(seed: int, namespace: int) -> np.ndarray:
    if int(seed) != seed or seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed!r}")
    return np.random.SeedSequence([int(seed), namespace]).generate_state(2, dtype=np.uint64)


def _generator(key: np.ndarray, block: int) -> np.random.Generator:
    counter = np.array([block, 0, 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


class RandomStream:
    """Handle onto a slice of a counter-based uniform stream.

    Use :meth:`for_trial` for the bounded per-trial slice consumed by the
    simulator, or :meth:`bulk` for an unbounded stream (sampling studies).
    A handle is stateful and must not be shared between workers.
    """

    def __init__(self, key: np.ndarray, block: int, capacity: int | None):
        self._gen = _generator(key, block)
        self._remaining = capacity

    @classmethod
    def for_trial(cls, seed: int, index: int) -> "RandomStream":
        if index < 0:
            raise ValueError("trial index must be nonnegative")
        return cls(_key(seed, _TRIAL_NAMESPACE), BLOCKS_PER_TRIAL * int(index), UNIFORMS_PER_TRIAL)

    @classmethod
    def bulk(cls, seed: int) -> "RandomStream":
        return cls(_key(seed, _BULK_NAMESPACE), 0, None)

    def uniforms(self, shape) -> np.ndarray:
        """Uniforms on [0, 1)."""
        n = int(np.prod(shape))
        if self._remaining is not None:
            if n > self._remaining:
                raise RuntimeError("per-trial stream exhausted")
            self._remaining -= n
        return self._gen.random(shape)


def trial_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniforms of trials ``start .. start+count-1`` as a (count, 8) array.

    Row ``k`` equals what ``RandomStream.for_trial(seed, start + k)`` yields.
    """
    gen = _generator(_key(seed, _TRIAL_NAMESPACE), BLOCKS_PER_TRIAL * int(start))
    return gen.random((int(count), UNIFORMS_PER_TRIAL))
