"""Counter-based random bits: every draw is a hash of (seed, stream, time, site).

No generator state is carried between calls, so a trajectory is reproduced
bit-exactly whatever the window, chunking or thread schedule. Replicas are
bit-sliced: bit ``b`` of word ``w`` belongs to replica ``64 * w + b``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

MASK64 = (1 << 64) - 1
EPS_DIGITS = 32

_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB
_GOLDEN = 0x9E3779B97F4A7C15

NOISE = 0x6E6F697365  # stream tags
GENERAL = 0x67656E6572
SITES = 0x7369746573


def mix_int(x: int) -> int:
    """splitmix64 finaliser on a Python int."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _C1) & MASK64
    x = ((x ^ (x >> 27)) * _C2) & MASK64
    return x ^ (x >> 31)


def mix(a: np.ndarray) -> np.ndarray:
    """Vectorised splitmix64 finaliser (uint64 wraps silently)."""
    a = a ^ (a >> np.uint64(30))
    a *= np.uint64(_C1)
    a ^= a >> np.uint64(27)
    a *= np.uint64(_C2)
    a ^= a >> np.uint64(31)
    return a


def stream_key(seed: int, tag: int, time: int, digit: int) -> int:
    h = mix_int(seed ^ _GOLDEN)
    for v in (tag, time, digit):
        h = mix_int(h ^ (v & MASK64) ^ _GOLDEN)
    return h


def word_keys(seed: int, tag: int, time: int, digit: int, words: Sequence[int]) -> np.ndarray:
    """One key per replica word for the stream (seed, tag, time, digit)."""
    w = np.asarray(words, dtype=np.uint64)
    return mix(w ^ np.uint64(stream_key(seed, tag, time, digit) ^ _GOLDEN))


def site_hashes(lower: Sequence[int], shape: Sequence[int]) -> np.ndarray:
    """Per-site hash grid for the box starting at ``lower``; depends only on coordinates."""
    d = len(shape)
    h = np.full(tuple(shape), SITES, dtype=np.uint64)
    for k in range(d):
        coords = (np.arange(shape[k], dtype=np.int64) + lower[k]).astype(np.uint64)
        view = [1] * d
        view[k] = shape[k]
        h = mix(h ^ coords.reshape(view) ^ np.uint64(_GOLDEN))
    return h


def epsilon_digits(eps: float) -> list[int]:
    """Binary digits (first = 1/2) of eps truncated to EPS_DIGITS places."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"probability out of range: {eps}")
    q = int(eps * (1 << EPS_DIGITS))
    return [(q >> (EPS_DIGITS - 1 - j)) & 1 for j in range(EPS_DIGITS)]


def effective_epsilon(eps: float) -> float:
    """The probability actually realised by :func:`bernoulli_words`."""
    if eps >= 1.0:
        return 1.0
    return int(eps * (1 << EPS_DIGITS)) / (1 << EPS_DIGITS)


def bernoulli_words(
    sites: np.ndarray, seed: int, time: int, words: Sequence[int], eps: float
) -> np.ndarray:
    """Words of independent Bernoulli(eps) bits, shape ``sites.shape + (len(words),)``.

    Digit ``j`` of eps always consumes the same random word, so for a fixed seed the
    bits are monotone in eps (a bit is 1 iff a fixed uniform lies below eps).
    """
    shape = sites.shape + (len(words),)
    if eps >= 1.0:
        return np.full(shape, MASK64, dtype=np.uint64)
    digits = epsilon_digits(eps)
    if not any(digits):
        return np.zeros(shape, dtype=np.uint64)
    last = max(j for j, b in enumerate(digits) if b)
    base = sites[..., None]
    out = None
    for j in range(last, -1, -1):
        r = mix(base ^ word_keys(seed, NOISE, time, j, words))
        if out is None:
            out = r
        elif digits[j]:
            out |= r
        else:
            out &= r
    return out


def replica_bits(sites: np.ndarray, seed: int, time: int, replica: int, eps: float) -> np.ndarray:
    """The Bernoulli bit of one replica at every site (boolean array)."""
    word, bit = divmod(replica, 64)
    w = bernoulli_words(sites, seed, time, [word], eps)[..., 0]
    return ((w >> np.uint64(bit)) & np.uint64(1)).astype(bool)


def uniforms(sites: np.ndarray, seed: int, time: int, replica: int) -> np.ndarray:
    """Uniform [0, 1) doubles, one per site, for general stochastic rules."""
    key = word_keys(seed, GENERAL, time, 0, [replica])[0]
    return (mix(sites ^ key) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def popcount(words: np.ndarray) -> int:
    return int(np.bitwise_count(words).sum())
