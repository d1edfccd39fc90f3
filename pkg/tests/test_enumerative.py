import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from listfb.enumerative import (
    WeightOutOfRange,
    digits_to_int,
    error_index_decode,
    error_index_encode,
    index_count,
    index_length,
    int_to_digits,
    rank,
    unrank,
    weight_cap,
)
from listfb.qary import pattern_count


def _brute_order(length, w_max, q):
    """All patterns of weight <= w_max sorted by weight, colex support, then values."""
    words = [np.array(w) for w in itertools.product(range(q), repeat=length)
             if sum(1 for x in w if x) <= w_max]

    def key(w):
        support = np.flatnonzero(w).tolist()
        return (len(support), sorted(support, reverse=True), w[support].tolist())

    return sorted(words, key=key)


@pytest.mark.parametrize("length,w_max,q", [(6, 2, 2), (7, 7, 2), (5, 3, 3), (4, 4, 4)])
def test_rank_matches_brute_force_order(length, w_max, q):
    for idx, word in enumerate(_brute_order(length, w_max, q)):
        assert rank(word, w_max, q) == idx
        assert np.array_equal(unrank(idx, length, w_max, q), word)


def test_frozen_lengths():
    # sum_{w<=4} C(64, w) = 679121 -> 20 bits; sum_{w<=6} C(30, w) 2^w = 43034553 -> 16 ternary digits
    assert index_count(64, 4, 2) == 679121
    assert index_length(64, 4, 2) == 20
    assert index_length(30, 6, 3) == 16


def test_weight_cap_is_exact():
    assert weight_cap(10, Fraction(3, 10)) == 3
    assert weight_cap(10, Fraction(31, 100)) == 4
    assert weight_cap(10, 1) == 10
    assert weight_cap(7, 0) == 0


def test_heavy_pattern_rejected():
    with pytest.raises(WeightOutOfRange):
        rank(np.array([1, 1, 1, 0]), 2, 2)


def test_out_of_range_index_decodes_to_none():
    # 5 patterns of length 4 with weight <= 1 need 3 bits; 5..7 name nothing
    assert error_index_decode(np.array([1, 0, 1]), 4, Fraction(1, 4), 2) is None
    with pytest.raises(ValueError):
        error_index_decode(np.array([1, 0]), 4, Fraction(1, 4), 2)


@pytest.mark.parametrize("q", [2, 3])
def test_exhaustive_round_trip_with_loose_cap(q):
    for length in range(1, 8):
        for w in itertools.product(range(q), repeat=length):
            s = np.array(w)
            back = error_index_decode(error_index_encode(s, 1, q), length, 1, q)
            assert np.array_equal(back, s)


@settings(max_examples=200)
@given(st.sampled_from([2, 3, 4, 7]), st.integers(1, 200), st.data())
def test_round_trip(q, length, data):
    k = data.draw(st.integers(0, 16))
    p_hat = Fraction(k, 16)
    w_max = weight_cap(length, p_hat)
    support = data.draw(st.lists(st.integers(0, length - 1), max_size=w_max, unique=True))
    s = np.zeros(length, dtype=np.int64)
    for i in support:
        s[i] = data.draw(st.integers(1, q - 1))
    digits = error_index_encode(s, p_hat, q)
    assert digits.size == index_length(length, w_max, q)
    assert np.array_equal(error_index_decode(digits, length, p_hat, q), s)


@given(st.sampled_from([2, 3, 5, 16]), st.integers(0, 120), st.data())
def test_digit_conversion_round_trip(q, width, data):
    value = data.draw(st.integers(0, q**width - 1)) if width else 0
    d = int_to_digits(value, width, q)
    assert d.size == width and (d < q).all()
    assert digits_to_int(d, q) == value


@given(st.integers(0, 60), st.integers(0, 60), st.sampled_from([2, 3, 4]))
def test_index_count_is_pattern_count(length, w, q):
    w = min(w, length)
    assert index_count(length, w, q) == pattern_count(length, w, q)
