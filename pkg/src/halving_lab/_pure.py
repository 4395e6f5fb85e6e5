"""Pure Python/numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_speedups.pyx``.
The two must agree bit for bit; ``tests/test_kernels.py`` checks that.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

_GOLDEN_U = np.uint64(GOLDEN)
_MIX1_U = np.uint64(MIX1)
_MIX2_U = np.uint64(MIX2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_ONE = np.uint64(1)

# int64 products below this bound cannot overflow
SAFE_PRODUCT = 1 << 62


def mix64(seed: int, n: int) -> int:
    """SplitMix64 finaliser applied to ``seed + GOLDEN * (n + 1)``."""
    z = (seed + GOLDEN * (n + 1)) & MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def _mix_array(seed: int, idx: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = np.uint64(seed & MASK64) + _GOLDEN_U * (idx.astype(np.uint64) + _ONE)
        z = (z ^ (z >> _S30)) * _MIX1_U
        z = (z ^ (z >> _S27)) * _MIX2_U
        return z ^ (z >> _S31)


def seeded_bits(seed: int, start: int, stop: int) -> np.ndarray:
    if stop <= start:
        return np.zeros(0, dtype=np.uint8)
    idx = np.arange(start, stop, dtype=np.uint64)
    return (_mix_array(seed, idx) & _ONE).astype(np.uint8)


def seeded_bits_at(seed: int, positions: np.ndarray) -> np.ndarray:
    positions = np.asarray(positions, dtype=np.int64)
    if positions.size == 0:
        return np.zeros(0, dtype=np.uint8)
    return (_mix_array(seed, positions) & _ONE).astype(np.uint8)


def walk_hits(bits: np.ndarray) -> np.ndarray:
    """Steps n >= 1 at which the first n bits contain exactly n/2 ones."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size == 0:
        return np.zeros(0, dtype=np.int64)
    ones = np.cumsum(bits)
    steps = np.arange(1, bits.size + 1, dtype=np.int64)
    return steps[2 * ones == steps]


def recurrence_trials(seed: int, positions: np.ndarray, trials: int) -> int:
    positions = np.asarray(positions, dtype=np.int64)
    successes = 0
    for t in range(trials):
        bits = seeded_bits_at(mix64(seed, t), positions)
        if walk_hits(bits).size:
            successes += 1
    return successes


def lln_trials(seed: int, positions: np.ndarray, trials: int, eps_num: int, eps_den: int) -> int:
    """Trials whose ones-count c over ``k`` positions has ``|c/k - 1/2| < eps``."""
    positions = np.asarray(positions, dtype=np.int64)
    k = positions.size
    successes = 0
    for t in range(trials):
        c = int(seeded_bits_at(mix64(seed, t), positions).sum())
        # |2c - k| / 2k < num/den
        if abs(2 * c - k) * eps_den < 2 * k * eps_num:
            successes += 1
    return successes


def fail_trials(seed: int, k_total: int, k_min: int, n: int, trials: int) -> int:
    """Trials where some prefix length k in [k_min, k_total] has ones/k - 1/2 > 1/(2n)."""
    successes = 0
    ks = np.arange(1, k_total + 1, dtype=np.int64)
    for t in range(trials):
        bits = seeded_bits(mix64(seed, t), 0, k_total).astype(np.int64)
        ones = np.cumsum(bits)
        # ones/k - 1/2 > 1/(2n)  <=>  n * (2 * ones - k) > k
        bad = n * (2 * ones - ks) > ks
        if bad[k_min - 1:].any():
            successes += 1
    return successes


def d5_first_violation(
    sig: np.ndarray, mask: int, val: int, d: int, num: int, den: int, lo: int, hi: int
) -> int:
    """First i in [lo, hi] with ``| c_i / i - 2^-d | >= num/den``, or -1.

    ``c_i`` counts j < i with ``sig[j] & mask == val``.  Requires ``lo >= 1``
    and ``hi <= len(sig)``.
    """
    sig = np.asarray(sig, dtype=np.uint32)
    hit = ((sig[:hi] & np.uint32(mask)) == np.uint32(val)).astype(np.int64)
    cum = np.concatenate(([0], np.cumsum(hit)))
    i = np.arange(lo, hi + 1, dtype=np.int64)
    c = cum[lo:hi + 1]
    scale = 1 << d
    if (hi + 1) * scale * max(num, den, 1) < SAFE_PRODUCT:
        lhs = np.abs(c * scale - i) * den
        rhs = num * i * scale
        bad = np.nonzero(lhs >= rhs)[0]
        return int(i[bad[0]]) if bad.size else -1
    for ii, cc in zip(i.tolist(), c.tolist()):
        if abs(cc * scale - ii) * den >= num * ii * scale:
            return ii
    return -1
