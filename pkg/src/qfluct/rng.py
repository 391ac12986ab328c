"""Counter-based random streams for reproducible, order-free trial sampling.

Generator: Philox4x64-10 (``numpy.random.Philox``). The 128-bit key is
``(master_seed, sweep_index)`` and trial ``k`` owns one counter block: the
four 64-bit words Philox emits for the 256-bit counter ``(k + 1, 0, 0, 0)``
(numpy increments the counter before each block). A trial's
draws therefore depend only on ``(master_seed, sweep_index, k)``, so any
chunking or parallel split of the trial range reproduces serial results
bit for bit.

Words are mapped to doubles in the open interval (0, 1) as
``((w >> 11) + 0.5) * 2**-53``.
"""

from __future__ import annotations

import numpy as np

WORDS_PER_TRIAL = 4
_U64 = (1 << 64) - 1


class TrialStream:
    """Random stream addressed by trial index.

    Parameters
    ----------
    master_seed : int
        Unsigned 64-bit seed.
    sweep_index : int
        Second key word, one per sweep point.
    """

    def __init__(self, master_seed: int, sweep_index: int = 0):
        for name, v in (("master_seed", master_seed), ("sweep_index", sweep_index)):
            if not (0 <= int(v) <= _U64):
                raise ValueError(f"{name} must be an unsigned 64-bit integer")
        self.master_seed = int(master_seed)
        self.sweep_index = int(sweep_index)
        self._key = np.array([self.master_seed, self.sweep_index], dtype=np.uint64)

    def raw(self, start: int, n: int) -> np.ndarray:
        """Raw words for trials ``start .. start+n-1``, shape (n, 4)."""
        bitgen = np.random.Philox(key=self._key, counter=int(start))
        return bitgen.random_raw(WORDS_PER_TRIAL * int(n)).reshape(int(n), WORDS_PER_TRIAL)

    def uniforms(self, start: int, n: int) -> np.ndarray:
        w = self.raw(start, n)
        return ((w >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53

    def trial(self, index: int) -> np.ndarray:
        return self.uniforms(index, 1)[0]

    def spawn(self, sweep_index: int) -> TrialStream:
        return TrialStream(self.master_seed, sweep_index)

    def __repr__(self):
        return f"TrialStream(master_seed={self.master_seed}, sweep_index={self.sweep_index})"
