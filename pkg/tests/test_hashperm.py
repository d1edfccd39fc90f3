import itertools

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from listfb.hashperm import (
    HashFamily,
    PermBank,
    ball_size,
    ball_values,
    count_bad_seeds,
    perm_apply,
    perm_invert,
    quasi_uniform_fraction,
    word_value,
)
from listfb.rng import derive_rng


@settings(max_examples=100)
@given(st.sampled_from([(2, 16), (3, 10), (4, 8), (5, 6)]), st.integers(0, 2**40), st.integers(0, 50),
       st.data())
def test_short_digest_is_prefix_of_long(shape, seed, index, data):
    q, L = shape
    fam = HashFamily(seed, L, q)
    value = data.draw(st.integers(0, q**L - 1))
    long = fam.unpack(fam.digest_values(np.uint64(value), 3, index, L), L)
    for r in (1, L // 2, L - 1):
        short = fam.unpack(fam.digest_values(np.uint64(value), 3, index, r), r)
        assert np.array_equal(short, long[:r])
        assert fam.pack(short) == int(fam.digest_values(np.uint64(value), 3, index, r))


def test_hash_eval_checks_shapes_and_is_deterministic():
    fam = HashFamily(9, 9, 3)
    chunk = np.arange(9) % 3
    a = fam.hash_eval(chunk, [1, 2, 0], 4, 5)
    assert np.array_equal(a, HashFamily(9, 9, 3).hash_eval(chunk, [1, 2, 0], 4, 5))
    assert not np.array_equal(a, fam.hash_eval(chunk, [1, 2, 1], 4, 5))
    with pytest.raises(ValueError):
        fam.hash_eval(chunk[:5], [1, 2, 0], 4, 5)
    with pytest.raises(ValueError):
        fam.hash_eval(chunk, [1], 4, 5)


def _chi_square_p(counts):
    expected = counts.sum() / counts.size
    stat = float(((counts - expected) ** 2 / expected).sum())
    return float(mpmath.gammainc((counts.size - 1) / 2, stat / 2, mpmath.inf, regularized=True))


def test_digests_look_uniform_and_seed_independent():
    fam = HashFamily(2026, 20, 2)
    rng = derive_rng(2026, "chi")
    values = rng.choice(2**20, size=100_000, replace=False).astype(np.uint64)
    d1 = fam.digest_values(values, 1, 0, 6).astype(np.int64)
    d2 = fam.digest_values(values, 2, 0, 6).astype(np.int64)
    assert _chi_square_p(np.bincount(d1, minlength=64)) > 1e-3
    # joint table of two seeds: independence means uniform over 64 * 64 cells
    assert _chi_square_p(np.bincount(d1 * 64 + d2, minlength=4096)) > 1e-3


def test_ball_values_match_brute_force():
    for q, L, r in [(2, 6, 2), (3, 4, 2)]:
        center = np.array([1, 0, 2, 1][:L] + [0] * (L - 4)) % q
        vals, weights = ball_values(word_value(center, q), L, r, q)
        expected = sorted(
            int(word_value(np.array(w), q)[0])
            for w in itertools.product(range(q), repeat=L)
            if np.count_nonzero(np.array(w) != center) <= r
        )
        assert sorted(vals[0].tolist()) == expected
        assert vals.shape[1] == ball_size(L, r, q)
        assert weights.max() == r


def test_bad_seed_count_matches_direct_enumeration():
    fam = HashFamily(5, 4, 2)
    x = np.array([1, 0, 1, 1])
    s = np.array([0, 1, 0, 0])
    stat = count_bad_seeds(fam, x, s, radius=1, range_len=2)
    y = (x + s) % 2
    rivals = [np.array(w) for w in itertools.product(range(2), repeat=4)
              if np.count_nonzero(np.array(w) != y) <= 1 and not np.array_equal(w, x)]
    bad = 0
    for seed in itertools.product(range(2), repeat=fam.seed_len):
        hx = fam.hash_eval(x, seed, 0, 2)
        bad += any(np.array_equal(fam.hash_eval(w, seed, 0, 2), hx) for w in rivals)
    assert stat.bad == bad and stat.total == 2**fam.seed_len


def test_perm_bank():
    bank = PermBank(0, 16, 2)
    assert bank.size == 256
    assert bank.storage_symbols() == 256 * 16 * 4
    p = bank.get(7)
    assert sorted(p.tolist()) == list(range(16))
    assert np.array_equal(p, PermBank(0, 16, 2).get(7))
    assert not np.array_equal(p, bank.get(8))
    assert bank.get(7, 10).size == 10
    with pytest.raises(IndexError):
        bank.get(256)


@given(st.integers(1, 200), st.integers(0, 2**32))
def test_inverse_permutation(n, seed):
    perm = np.random.default_rng(seed).permutation(n)
    w = np.arange(n) * 3
    assert np.array_equal(perm_apply(perm_invert(perm), perm_apply(perm, w)), w)


def test_quasi_uniformity_extremes():
    n, L = 1400, 14
    periodic = np.zeros(n, dtype=np.int64)
    periodic[::10] = 1
    identity = np.arange(n)
    burst = np.zeros(n, dtype=np.int64)
    burst[:140] = 1
    # unshuffled, every chunk is all-error or error-free
    assert quasi_uniform_fraction(burst, identity, L, 0.05, 2) == 0.0
    shuffled = np.random.default_rng(1).permutation(n)
    assert quasi_uniform_fraction(burst, shuffled, L, 0.25, 2) > 0.95
    assert quasi_uniform_fraction(periodic, identity, L, 0.1, 2) == 1.0
