"""Enumerative indexing of low-weight error patterns.

A pattern of length l and weight <= w_max is mapped to an integer in
[0, pattern_count(l, w_max, q)), ordered first by weight, then by support
(combinatorial number system), then by the nonzero values read as a base
(q-1) number. The index is written as a fixed number of base-q digits,
most significant first.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from listfb.qary import digits_needed


class WeightOutOfRange(ValueError):
    """The pattern is heavier than the weight its index length allows."""


@lru_cache(maxsize=4096)
def _weight_offsets(length: int, w_max: int, q: int) -> tuple:
    """offsets[w] = number of patterns of weight < w, for w = 0..w_max+1."""
    out = [0]
    term = 1
    for w in range(w_max + 1):
        out.append(out[-1] + term)
        term = term * (length - w) * (q - 1) // (w + 1)
    return tuple(out)


def index_count(length: int, w_max: int, q: int) -> int:
    return _weight_offsets(length, w_max, q)[-1]


def weight_cap(length: int, p_hat) -> int:
    """ceil(length * p_hat) computed exactly, clipped to the length."""
    return min(length, math.ceil(Fraction(p_hat) * length))


@lru_cache(maxsize=4096)
def index_length(length: int, w_max: int, q: int) -> int:
    """Digits needed to write any index for (length, w_max)."""
    return digits_needed(index_count(length, w_max, q), q)


def rank(pattern: np.ndarray, w_max: int, q: int) -> int:
    pattern = np.asarray(pattern, dtype=np.int64)
    length = pattern.size
    support = np.flatnonzero(pattern)
    w = support.size
    if w > w_max:
        raise WeightOutOfRange(f"pattern weight {w} exceeds cap {w_max}")
    comb_rank = 0
    for i, c in enumerate(support.tolist(), start=1):
        comb_rank += math.comb(c, i)
    value_rank = 0
    if q > 2:
        for v in pattern[support].tolist():
            value_rank = value_rank * (q - 1) + (v - 1)
    return _weight_offsets(length, w_max, q)[w] + comb_rank * (q - 1) ** w + value_rank


def unrank(index: int, length: int, w_max: int, q: int) -> np.ndarray:
    offsets = _weight_offsets(length, w_max, q)
    if not 0 <= index < offsets[-1]:
        raise ValueError(f"index {index} outside [0, {offsets[-1]})")
    w = 0
    while offsets[w + 1] <= index:
        w += 1
    rest = index - offsets[w]
    comb_rank, value_rank = divmod(rest, (q - 1) ** w)

    support = []
    if w:
        # walk c downward keeping val = C(c, k) updated incrementally
        k, c = w, length - 1
        val = math.comb(c, k)
        while k > 0:
            while val > comb_rank:
                # C(c-1, k) = C(c, k) * (c - k) / c
                val = val * (c - k) // c
                c -= 1
            support.append(c)
            comb_rank -= val
            if k == 1:
                break
            # C(c-1, k-1) = C(c, k) * k / c
            val = val * k // c
            c -= 1
            k -= 1
        support.reverse()

    out = np.zeros(length, dtype=np.int64)
    if w:
        if q == 2:
            out[support] = 1
        else:
            vals = []
            for _ in range(w):
                value_rank, d = divmod(value_rank, q - 1)
                vals.append(d + 1)
            out[support] = vals[::-1]
    return out


def int_to_digits(value: int, width: int, q: int) -> np.ndarray:
    """Fixed-width base-q digits of a non-negative integer, most significant first."""
    if value < 0 or value >= q**width:
        raise ValueError(f"{value} does not fit in {width} base-{q} digits")
    if q == 2:
        if width == 0:
            return np.zeros(0, dtype=np.int64)
        bits = np.unpackbits(np.frombuffer(value.to_bytes((width + 7) // 8, "big"), dtype=np.uint8))
        return bits[-width:].astype(np.int64)
    out = np.zeros(width, dtype=np.int64)
    pos = width
    # peel several digits per big-int division
    per = max(1, int(60 / math.log2(q)))
    base = q**per
    while value and pos > 0:
        value, chunk = divmod(value, base)
        for _ in range(per):
            if pos == 0:
                break
            chunk, d = divmod(chunk, q)
            pos -= 1
            out[pos] = d
    return out


def digits_to_int(digits: np.ndarray, q: int) -> int:
    digits = np.asarray(digits, dtype=np.int64)
    if q == 2:
        if digits.size == 0:
            return 0
        return int.from_bytes(np.packbits(digits.astype(np.uint8), bitorder="big").tobytes(), "big") >> ((-digits.size) % 8)
    value = 0
    for d in digits.tolist():
        value = value * q + d
    return value


def error_index_encode(pattern: np.ndarray, p_hat, q: int) -> np.ndarray:
    """Index digits for an error pattern whose weight is at most ceil(l * p_hat)."""
    pattern = np.asarray(pattern, dtype=np.int64)
    w_max = weight_cap(pattern.size, p_hat)
    return int_to_digits(rank(pattern, w_max, q), index_length(pattern.size, w_max, q), q)


def error_index_decode(digits: np.ndarray, length: int, p_hat, q: int):
    """Inverse of error_index_encode; None when the digits name no valid pattern."""
    w_max = weight_cap(length, p_hat)
    if len(digits) != index_length(length, w_max, q):
        raise ValueError("index has the wrong number of digits")
    value = digits_to_int(digits, q)
    if value >= index_count(length, w_max, q):
        return None
    return unrank(value, length, w_max, q)
