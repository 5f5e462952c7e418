"""Portable 64-bit linear congruential generator.

Splits and the mock LLM grammar draw from this generator instead of
:mod:`random` so that shuffles are reproducible across implementations.

Constants (Knuth, MMIX)::

    state <- (6364136223846793005 * state + 1442695040888963407) mod 2**64

The initial state is ``seed mod 2**64`` followed by one discarded step.
:meth:`Lcg.below` maps the high 32 bits of the next state onto ``[0, n)`` by
multiply-shift, so ``n`` must be below ``2**32``.
"""
import hashlib

MULTIPLIER = 6364136223846793005
INCREMENT = 1442695040888963407
MASK = (1 << 64) - 1


def derive_seed(*parts):
    """Fold arbitrary printable parts into a 64-bit seed (SHA-256 based)."""
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class Lcg:
    def __init__(self, seed):
        self.state = seed & MASK
        self.next()

    def next(self):
        self.state = (MULTIPLIER * self.state + INCREMENT) & MASK
        return self.state

    def below(self, n):
        if n <= 0 or n >= 1 << 32:
            raise ValueError(f"bound out of range: {n}")
        return ((self.next() >> 32) * n) >> 32

    def random(self):
        """Uniform float in [0, 1) from the top 53 bits."""
        return (self.next() >> 11) / float(1 << 53)

    def choice(self, seq):
        return seq[self.below(len(seq))]

    def shuffle(self, items):
        """In-place Fisher-Yates, from the last position down."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def sample(self, seq, k):
        pool = list(seq)
        self.shuffle(pool)
        return pool[:k]
