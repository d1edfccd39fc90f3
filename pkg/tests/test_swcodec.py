from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from listfb.hashperm import HashFamily, PermBank
from listfb.rng import derive_rng
from listfb.swcodec import (
    ChunkCodecParams,
    StagePayload,
    digest_length,
    dkw_bound,
    estimate_noise,
    jointly_typical,
    parity_from_formula,
    sw_decode_chunked,
    sw_decode_monolithic,
    sw_encode_chunked,
    sw_encode_monolithic,
    symmetric_joint,
)


def test_frozen_values():
    assert dkw_bound(64, 0.1) == pytest.approx(1.4522980741473819)
    # 12 * (H(0.1) + 0.3) = 9.23 -> 10 digits
    assert digest_length(12, 0.1, 0.3, 2) == 10
    assert digest_length(16, Fraction(1, 16), 0.75, 2) == 16


def test_estimate_noise():
    x = np.zeros(10, dtype=np.int64)
    assert estimate_noise(x, [0, 3, 5, 9], [0, 1, 1, 0]) == 0.5
    with pytest.raises(ValueError):
        estimate_noise(x, [], [])


def test_symmetric_joint_is_a_distribution():
    P = symmetric_joint(0.2, 3)
    assert P.sum() == pytest.approx(1.0)
    assert P.sum(axis=1) == pytest.approx(np.full(3, 1 / 3))
    assert np.trace(P) == pytest.approx(0.8)


def test_joint_typicality_accepts_the_exact_type():
    y = np.array([0, 0, 0, 1, 1, 1, 0, 1, 0, 1])
    u = y.copy()
    u[:2] ^= 1  # two zeros of y become ones in u
    P = np.array([[0.3, 0.0], [0.2, 0.5]])
    assert jointly_typical(u, y, P, 1e-9)[0]
    assert not jointly_typical(y, y, P, 0.05)[0]


def test_parity_formula():
    # K / (1 - (4 * 2^-4 + 2 / 64^3)) = 133.4... -> 34 parity chunks
    assert parity_from_formula(100, 64, 1 / 64**3, 2) == 34
    # at 16 symbols the loss term 4 * 2^-2 already reaches 1
    assert parity_from_formula(100, 16, 1 / 4096, 2) is None


def test_params_reject_bad_slack():
    with pytest.raises(ValueError, match="eps_h > eps_d"):
        ChunkCodecParams(12, 2, 0.1, 0.2, 4)
    with pytest.raises(ValueError, match="slack constraints"):
        ChunkCodecParams(12, 2, 0.3, 0.1, 4, eps_t=0.5, strict=True)


def test_monolithic_round_trip():
    # balanced words, so the joint type sits close to the uniform-input law
    rng = derive_rng(4, "mono")
    for _ in range(40):
        x = rng.permutation(np.repeat([0, 1], 7))
        y = x.copy()
        y[rng.integers(14)] ^= 1
        z = sw_encode_monolithic(x, 1 / 14, 0.3, 2, master_seed=3)
        out = sw_decode_monolithic(y, z, 1 / 14, 0.05, 2, master_seed=3)
        assert out is not None and np.array_equal(out, x)


def _one_error_per_chunk(x, perm, L, rng):
    """Errors placed so that each permuted chunk has at most one of them."""
    s = np.zeros(perm.size, dtype=np.int64)
    for c in range(perm.size // L):
        if rng.random() < 0.5:
            s[perm[c * L + rng.integers(L)]] = 1
    return s[: x.size]


@pytest.mark.parametrize("seed", range(6))
def test_chunked_round_trip_with_permutation_and_seeds(seed):
    L, N = 12, 600
    params = ChunkCodecParams(L, 2, eps_h=0.3, eps_d=0.1, parity=10)
    fam = HashFamily(seed, L, 2)
    rng = derive_rng(seed, "chunked")
    perm = PermBank(seed, N, 2).get(int(rng.integers(0, N * N)), params.chunks(N) * L)
    seeds = rng.integers(0, 2, params.seeds_needed(N))
    x = rng.integers(0, 2, N)
    y = (x + _one_error_per_chunk(x, perm, L, rng)) % 2
    p_hat = Fraction(1, 16)
    payload = sw_encode_chunked(x, params, p_hat, fam, perm=perm, seeds=seeds)
    assert payload.z.size == params.payload_length(N, p_hat)
    rep = sw_decode_chunked(y, payload, params, p_hat, fam, perm=perm, seeds=seeds)
    assert rep.ok and np.array_equal(rep.x_hat, x)


def test_wrong_length_received_word():
    params = ChunkCodecParams(8, 2, 0.3, 0.1, 2)
    fam = HashFamily(0, 8, 2)
    payload = sw_encode_chunked(np.zeros(40, dtype=np.int64), params, 0.1, fam)
    with pytest.raises(ValueError):
        sw_decode_chunked(np.zeros(39, dtype=np.int64), payload, params, 0.1, fam)


@settings(max_examples=50)
@given(st.integers(1, 50), st.integers(1, 16), st.integers(0, 5), st.sampled_from([2, 3, 256, 300]),
       st.data())
def test_payload_bytes_round_trip(K, L, parity, q, data):
    z = np.array(data.draw(st.lists(st.integers(0, q - 1), max_size=60)), dtype=np.int64)
    pad = data.draw(st.integers(0, L - 1))
    p = StagePayload(K * L - pad, L, K, K + parity, data.draw(st.integers(0, 64)), pad, 5, q, z)
    back = StagePayload.from_bytes(p.to_bytes())
    assert (back.N, back.chunk_len, back.K, back.K_prime, back.p_index, back.pad, back.digest_len, back.q) == \
        (p.N, p.chunk_len, p.K, p.K_prime, p.p_index, p.pad, p.digest_len, p.q)
    assert np.array_equal(back.z, z)
