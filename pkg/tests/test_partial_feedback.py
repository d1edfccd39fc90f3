from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from listfb.channel import make_adversary
from listfb.partial_feedback import (
    FeedbackSource,
    feedback_formula,
    packet_symbols,
    run_partial_feedback,
    storage_symbols,
)
from listfb.rng import derive_rng
from listfb.scheme import SchemeParams


def small_params(**kw):
    base = dict(q=2, n=4096, rho=0.002, eps=0.55, gamma=0.4, delta=Fraction(1, 64), kappa=Fraction(1, 8),
                stage_cap=1, parity_fraction=0.05, min_parity=8, eps_h=0.6)
    base.update(kw)
    return SchemeParams(**base)


def _run(params, spec, seed, **kw):
    msg = derive_rng(seed, "message").integers(0, params.q, params.message_length)
    return msg, run_partial_feedback(msg, make_adversary(spec), params, derive_rng(seed, "adversary"),
                                     derive_rng(seed, "bob"), **kw)


def test_packet_size_matches_closed_form():
    p = small_params()
    # 90 samples * (9 index bits + 1 value) + 24 selector bits + 256 chunks * 4 seed bits
    assert packet_symbols(p) == 1948
    assert feedback_formula(p) == pytest.approx(8 * 1948, abs=1e-9)
    assert storage_symbols(p) == 4096**2 * 4096 * 12


def test_packets_sample_without_replacement():
    p = small_params()
    src = FeedbackSource(p, derive_rng(0, "bob"))
    y = derive_rng(1, "y").integers(0, 2, p.block_len)
    pkt = src.packet(0, y)
    assert pkt.T.size == p.sample_size == np.unique(pkt.T).size
    assert np.array_equal(pkt.F_b, y[pkt.T])
    assert pkt.F_c.size == p.selector_len and pkt.F_d.size == p.seed_symbols


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(["null", "burst_front", "stage_greedy", {"name": "uniform_iid", "p": 0.001}]),
       st.integers(0, 10**6))
def test_message_in_list_and_feedback_accounting(spec, seed):
    p = small_params()
    _, run = _run(p, spec, seed)
    assert run.ok
    assert run.trace["feedback_symbols"] == 8 * packet_symbols(p)
    assert len(run.transcript.feedback) == p.n // p.block_len
    assert np.count_nonzero(run.transcript.s) <= p.budget


def test_burst_in_first_block_does_not_inflate_the_estimate():
    # every error lands in the first feedback block; the estimate must still track the stage
    p = small_params()
    _, run = _run(p, "burst_front", 3)
    stage = run.transcript.stage_boundaries[0]
    assert Fraction(stage["p_hat"]) <= Fraction(2, 64)
    assert stage["samples"] > p.sample_size


def test_block_length_must_divide_n():
    p = small_params(kappa=Fraction(1, 3))  # blocks of 1366 do not tile 4096
    with pytest.raises(ValueError, match="divide"):
        _run(p, "null", 0)


def test_oracle_sync_single_guess():
    p = small_params()
    _, run = _run(p, "burst_front", 5, oracle_sync=True)
    assert run.ok and run.guesses == 1
