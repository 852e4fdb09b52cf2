"""xorshift64* PRNG, pinned for cross-implementation reproducibility.

Every seeded decision in the engine (descriptor sampling pattern, RANSAC
sampling) draws from this generator so independent implementations agree
bit for bit.
"""

_MASK = (1 << 64) - 1
_MULT = 2685821657736338717
# xorshift64* has an absorbing zero state; remap seed 0 to this constant.
DEFAULT_SEED = 0x9E3779B97F4A7C15


class XorShift64Star:
    def __init__(self, seed: int):
        self._state = seed & _MASK
        if self._state == 0:
            self._state = DEFAULT_SEED

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self._state = x
        return (x * _MULT) & _MASK

    def below(self, n: int) -> int:
        """Draw an integer in [0, n) as next_u64() mod n."""
        return self.next_u64() % n

    def sample_distinct(self, k: int, n: int) -> list[int]:
        """Draw k distinct integers in [0, n) by rejection, in draw order."""
        picked: list[int] = []
        while len(picked) < k:
            r = self.below(n)
            if r not in picked:
                picked.append(r)
        return picked
