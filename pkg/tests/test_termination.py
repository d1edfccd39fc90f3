import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from listfb.rng import derive_rng
from listfb.termination import (
    InnerCode,
    TerminationCode,
    certified_radius,
    design_termination,
    inner_code,
)


def brute_radius(N, K, d, tau):
    """Min total errors over (a over-radius blocks, b erased blocks) with 2a + b >= N - K + 1."""
    units = N - K + 1
    best = None
    for a in range(N + 1):
        for b in range(N + 1 - a):
            if b and 2 * tau < d:
                continue
            if 2 * a + b >= units:
                cost = a * (tau + 1) + b * (d - tau)
                best = cost if best is None else min(best, cost)
    return best - 1


@pytest.mark.parametrize("N,K,d,tau", [(15, 7, 3, 1), (15, 7, 3, 2), (31, 20, 4, 2), (20, 5, 5, 4),
                                       (10, 10, 2, 0), (12, 3, 6, 3)])
def test_certified_radius_matches_brute_force(N, K, d, tau):
    assert certified_radius(N, K, d, tau) == brute_radius(N, K, d, tau)


def test_inner_code_distance_is_true_minimum():
    code = inner_code(2, 12, 5, 0)
    w = np.count_nonzero(code.codebook[1:], axis=1)
    assert code.distance == w.min()
    # linear: the codebook is closed under addition
    a, b = code.codebook[3], code.codebook[17]
    s = (a + b) % 2
    assert (code.codebook == s).all(axis=1).any()


def test_inner_list_decode_matches_distances():
    code = InnerCode(3, 6, 2, 4)
    rng = derive_rng(1, "blocks")
    blocks = rng.integers(0, 3, (20, 6))
    lists = code.list_decode(blocks, 2)
    for blk, lst in zip(blocks, lists):
        expected = [i for i, cw in enumerate(code.codebook) if np.count_nonzero(cw != blk) <= 2]
        assert lst.tolist() == expected


def test_design_fits_and_reaches_target():
    d = design_termination(2, 500, 1200, target_radius=20)
    assert d is not None and d.radius >= 20
    assert d.used_length <= d.n_avail
    assert d.K * d.k_in >= d.k_msg


def test_empty_residual():
    tc = TerminationCode.build(2, 0, 50)
    assert tc.list_decode(np.ones(50, dtype=np.int64))[0].size == 0


def test_no_design_for_impossible_length():
    assert design_termination(2, 100, 50) is None
    with pytest.raises(ValueError):
        TerminationCode.build(2, 100, 50)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(2, 200, 480), (3, 60, 200), (2, 64, 300)]), st.integers(0, 10**6),
       st.booleans())
def test_list_contains_residual_within_radius(shape, seed, clustered):
    q, k, n_avail = shape
    tc = TerminationCode.build(q, k, n_avail, target_radius=10**6)
    rng = derive_rng(seed, "tc")
    msg = rng.integers(0, q, k)
    cw = tc.encode(msg)
    r = tc.radius
    if clustered:
        # fill whole inner blocks first, the expensive pattern for the outer decoder
        n_in = tc.design.n_in
        order = np.concatenate([b * n_in + rng.permutation(n_in) for b in rng.permutation(tc.design.N)])
        pos = order[:r]
    else:
        pos = rng.choice(n_avail, size=r, replace=False)
    y = cw.copy()
    y[pos] = (y[pos] + rng.integers(1, q, size=pos.size)) % q
    out = tc.list_decode(y)
    assert len(out) <= tc.design.list_cap
    assert any(np.array_equal(m, msg) for m in out)
