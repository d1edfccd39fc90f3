"""Seeded chunk hashes, the permutation bank, and the statistics built on them.

Hashes are a keyed pseudorandom function (splitmix64 mixing of the master
seed, chunk index, seed word and chunk value), not stored tables. Digest
digit j depends only on (key, j), so a shorter range is always a prefix
of a longer one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from listfb.channel import as_word

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TAG_INDEX = np.uint64(0xD6E8FEB86659FD93)
_TAG_SEED = np.uint64(0xA0761D6478BD642F)
_TAG_DIGIT = np.uint64(0xE7037ED1A0B428DB)

MAX_BALL = 1 << 24


def _mix(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def word_value(words: np.ndarray, q: int) -> np.ndarray:
    """Base-q integer value of each row (most significant digit first)."""
    words = np.atleast_2d(np.asarray(words, dtype=np.int64))
    out = np.zeros(words.shape[0], dtype=np.uint64)
    for j in range(words.shape[1]):
        out = out * np.uint64(q) + words[:, j].astype(np.uint64)
    return out


class HashFamily:
    """h(chunk, seed, chunk_index) -> q-ary digest of up to chunk_len digits."""

    def __init__(self, master_seed: int, chunk_len: int, q: int):
        if chunk_len * math.log2(q) > 64:
            raise ValueError("chunk must fit in 64 bits")
        self.master_seed, self.chunk_len, self.q = int(master_seed), chunk_len, q
        self.full_range_len = chunk_len
        self._master = _mix(np.array([self.master_seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
        self._bits = int(math.log2(q)) if q & (q - 1) == 0 else 0

    @property
    def seed_len(self) -> int:
        return math.isqrt(self.chunk_len)

    def _keys(self, values, seed_value, chunk_index) -> np.ndarray:
        with np.errstate(over="ignore"):
            idx = np.asarray(chunk_index, dtype=np.uint64)
            seed = np.asarray(seed_value, dtype=np.uint64)
            k = self._master ^ _mix(idx ^ _TAG_INDEX)
            k = _mix(k ^ _mix(seed ^ _TAG_SEED))
            return _mix(np.asarray(values, dtype=np.uint64) ^ k)

    def digest_values(self, values, seed_value, chunk_index, range_len: int) -> np.ndarray:
        """Packed digests of chunks given by integer value; seeds and chunk
        indices broadcast against ``values``.

        Two chunks have the same packed value iff their digests agree.
        """
        if not 0 <= range_len <= self.chunk_len:
            raise ValueError(f"range_len must be in [0, {self.chunk_len}]")
        values = np.asarray(values, dtype=np.uint64)
        if range_len == 0:
            return np.zeros(np.broadcast(values, np.asarray(seed_value), np.asarray(chunk_index)).shape,
                            dtype=np.uint64)
        with np.errstate(over="ignore"):
            keys = self._keys(values, seed_value, chunk_index)
            if self._bits:
                # digit j = bits [j*b, (j+1)*b) of one more mixing round
                return _mix(keys ^ _TAG_DIGIT) & np.uint64((1 << (range_len * self._bits)) - 1)
            out = np.zeros(keys.shape, dtype=np.uint64)
            for j in range(range_len):
                d = _mix(keys + _TAG_DIGIT * np.uint64(j + 1)) % np.uint64(self.q)
                out = out * np.uint64(self.q) + d
            return out

    def unpack(self, packed: int, range_len: int) -> np.ndarray:
        """Digit list of a packed digest (digit 0 first)."""
        packed = int(packed)
        if self._bits:
            mask = (1 << self._bits) - 1
            return np.array([(packed >> (j * self._bits)) & mask for j in range(range_len)], dtype=np.int64)
        digits = []
        for _ in range(range_len):
            packed, d = divmod(packed, self.q)
            digits.append(d)
        return np.array(digits[::-1], dtype=np.int64)

    def pack(self, digits) -> int:
        digits = [int(d) for d in digits]
        if self._bits:
            return sum(d << (j * self._bits) for j, d in enumerate(digits))
        v = 0
        for d in digits:
            v = v * self.q + d
        return v

    def hash_eval(self, chunk, seed_r, chunk_index: int, range_len: int) -> np.ndarray:
        chunk = as_word(chunk, self.q)
        seed_r = as_word(seed_r, self.q)
        if chunk.size != self.chunk_len:
            raise ValueError(f"chunk must have {self.chunk_len} symbols")
        if seed_r.size != self.seed_len:
            raise ValueError(f"seed must have {self.seed_len} symbols")
        value = word_value(chunk, self.q)
        seed_value = int(word_value(seed_r, self.q)[0]) if seed_r.size else 0
        packed = self.digest_values(value, seed_value, chunk_index, range_len)[0]
        return self.unpack(packed, range_len)


def hash_eval(family: HashFamily, chunk, seed_r, chunk_index: int, range_len: int) -> np.ndarray:
    return family.hash_eval(chunk, seed_r, chunk_index, range_len)


# --- Hamming balls ------------------------------------------------------------


def ball_size(length: int, radius: int, q: int) -> int:
    return sum(math.comb(length, w) * (q - 1) ** w for w in range(radius + 1))


@lru_cache(maxsize=256)
def ball_offsets(length: int, radius: int, q: int) -> tuple:
    """(error words, weights) for every pattern of weight <= radius, lightest first."""
    if ball_size(length, radius, q) > MAX_BALL:
        raise ValueError("Hamming ball too large to enumerate")
    rows, weights = [np.zeros(length, dtype=np.int64)], [0]
    for w in range(1, radius + 1):
        for support in itertools.combinations(range(length), w):
            for vals in itertools.product(range(1, q), repeat=w):
                e = np.zeros(length, dtype=np.int64)
                e[list(support)] = vals
                rows.append(e)
                weights.append(w)
    return np.array(rows, dtype=np.int64), np.array(weights, dtype=np.int64)


def ball_values(center_value: np.ndarray, length: int, radius: int, q: int):
    """Integer values of all words within ``radius`` of each center, shape (centers, ball)."""
    offsets, weights = ball_offsets(length, radius, q)
    centers = np.asarray(center_value, dtype=np.uint64).reshape(-1)
    if q == 2:
        masks = word_value(offsets, 2)
        return centers[:, None] ^ masks[None, :], weights
    place = np.uint64(q) ** np.arange(length - 1, -1, -1, dtype=np.uint64)
    digits = (centers[:, None] // place[None, :]) % np.uint64(q)
    words = (digits[:, None, :] + offsets[None, :, :].astype(np.uint64)) % np.uint64(q)
    return (words * place).sum(axis=2, dtype=np.uint64), weights


# --- bad seeds ----------------------------------------------------------------


@dataclass(frozen=True)
class BadSeedStat:
    x: tuple
    s: tuple
    bad: int
    total: int


def count_bad_seeds(family: HashFamily, x, s, radius: int, range_len: int, chunk_index: int = 0) -> BadSeedStat:
    """Exact count of seeds under which some other word near y = x + s shares x's digest."""
    q, L = family.q, family.chunk_len
    x, s = as_word(x, q), as_word(s, q)
    if np.count_nonzero(s) > radius:
        raise ValueError("error weight exceeds the radius")
    y = (x + s) % q
    x_val = word_value(x, q)[0]
    ball, _ = ball_values(word_value(y, q), L, radius, q)
    rivals = ball[0][ball[0] != x_val]
    total = q**family.seed_len
    bad = 0
    for seed_value in range(total):
        dx = family.digest_values(np.array([x_val]), seed_value, chunk_index, range_len)[0]
        if rivals.size and np.any(family.digest_values(rivals, seed_value, chunk_index, range_len) == dx):
            bad += 1
    return BadSeedStat(tuple(x.tolist()), tuple(s.tolist()), bad, total)


# --- permutations ---------------------------------------------------------------


class PermBank:
    """P = n**C_p seeded uniform permutations of [n], built on demand."""

    def __init__(self, master_seed: int, n: int, c_p: int, cache_size: int = 64):
        self.master_seed, self.n, self.c_p = int(master_seed), n, c_p
        self.size = n**c_p
        self._get = lru_cache(maxsize=cache_size)(self._build)

    def _build(self, j: int, length: int) -> np.ndarray:
        seq = np.random.SeedSequence([self.master_seed, length, j & 0xFFFFFFFF, j >> 32])
        perm = np.random.Generator(np.random.PCG64(seq)).permutation(length)
        perm.flags.writeable = False
        return perm

    def get(self, j: int, length: int = None) -> np.ndarray:
        """Permutation j of [length] (default [n]); stages shorter than n
        draw from the same index set."""
        if not 0 <= j < self.size:
            raise IndexError(f"permutation index {j} outside [0, {self.size})")
        return self._get(int(j), self.n if length is None else int(length))

    def storage_symbols(self) -> int:
        """Bookkeeping size of the full bank: P * n * ceil(log2 n)."""
        return self.size * self.n * max(1, math.ceil(math.log2(self.n)))


def perm_get(bank: PermBank, j: int) -> np.ndarray:
    return bank.get(j)


def perm_apply(perm: np.ndarray, word: np.ndarray) -> np.ndarray:
    """Output symbol i is input symbol perm[i]."""
    return np.asarray(word)[perm]


def perm_invert(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv


def chunk_types(word: np.ndarray, chunk_len: int, q: int) -> np.ndarray:
    """Empirical symbol distribution of each full chunk, shape (chunks, q)."""
    word = np.asarray(word, dtype=np.int64)
    full = word.size // chunk_len
    chunks = word[: full * chunk_len].reshape(full, chunk_len)
    return np.stack([(chunks == a).mean(axis=1) for a in range(q)], axis=1)


def quasi_uniform_fraction(s, perm, chunk_len: int, eps_t: float, q: int = None) -> float:
    """Share of chunks of perm(s) whose type is within eps_t (l-inf) of the type of s.

    A trailing partial chunk is ignored.
    """
    s = np.asarray(s, dtype=np.int64)
    q = q if q is not None else int(s.max()) + 1 if s.size else 2
    q = max(q, 2)
    permuted = perm_apply(perm, s)
    global_type = np.array([(s == a).mean() for a in range(q)])
    types = chunk_types(permuted, chunk_len, q)
    if types.shape[0] == 0:
        return 1.0
    gap = np.abs(types - global_type[None, :]).max(axis=1)
    return float(np.mean(gap <= eps_t + 1e-12))
