"""xorshift64* generator (Vigna's variant: shifts 12, 25, 27; multiplier
0x2545F4914F6CDD1D), so sampled sweeps reproduce across implementations."""

_MASK = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D


class XorShift64Star:
    def __init__(self, seed=0):
        # splitmix64 scramble keeps small seeds away from the zero state
        z = (int(seed) + 0x9E3779B97F4A7C15) & _MASK
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        z ^= z >> 31
        self.state = z or 0x9E3779B97F4A7C15

    def next_u64(self):
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self.state = x
        return (x * _MULT) & _MASK

    def below(self, n):
        """Uniform integer in [0, n) by rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = _MASK - (_MASK % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def sample(self, n, k):
        """k distinct integers from range(n), in draw order."""
        if k > n:
            raise ValueError("sample larger than population")
        pool = list(range(n))
        out = []
        for i in range(k):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
            out.append(pool[i])
        return out

    def pairs(self, n, k, distinct=True):
        out = []
        while len(out) < k:
            a, b = self.below(n), self.below(n)
            if distinct and a == b:
                continue
            out.append((a, b))
        return out
