from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from listfb.channel import make_adversary
from listfb.enumerative import error_index_encode
from listfb.full_feedback import (
    DecodeList,
    backward_decode,
    list_size_bound,
    run_full_feedback,
    worst_case_adversary,
    worst_case_sequence,
)
from listfb.rng import derive_rng
from listfb.scheme import SchemeParams
from listfb.sync import GuessPath

ADVERSARIES = ["null", "burst_front", "stage_greedy", {"name": "stage_greedy", "fraction": 0.9},
               {"name": "uniform_iid", "p": 0.02}, {"name": "targeted_symbol", "target": 1}]


def small_params(**kw):
    base = dict(q=2, n=1024, rho=0.03, eps=0.2, gamma=0.3, delta=Fraction(1, 16), stage_cap=3)
    base.update(kw)
    return SchemeParams(**base)


def _run(params, spec, seed, **kw):
    msg = derive_rng(seed, "message").integers(0, params.q, params.message_length)
    adv = worst_case_adversary(params) if spec == "worst" else make_adversary(spec)
    return msg, run_full_feedback(msg, adv, params, derive_rng(seed, "adversary"), **kw)


def test_list_size_bound():
    assert list_size_bound(small_params()) == 16**3 * 16


def test_decode_list_counts_distinct_messages():
    dl = DecodeList()
    dl.add(np.array([1, 0]), (Fraction(0),))
    dl.add(np.array([1, 0]), (Fraction(1, 16),))
    dl.add(np.array([0, 0]), (Fraction(0),))
    assert dl.size == 2 and dl.contains([0, 0]) and not dl.contains([1, 1])


def test_worst_case_sequence_is_budget_feasible():
    p = small_params()
    seq = worst_case_sequence(p)
    assert 1 <= len(seq) <= p.lam
    adv = worst_case_adversary(p)
    assert adv.termination_errors >= 0


def test_backward_decode_undoes_one_stage():
    q, ell = 2, 40
    rng = derive_rng(9, "bd")
    msg = rng.integers(0, 2, ell)
    errors = np.zeros(ell, dtype=np.int64)
    errors[[3, 17]] = 1
    y = np.concatenate([(msg + errors) % q, np.zeros(30, dtype=np.int64)])
    p_hat = Fraction(1, 16)
    residual = error_index_encode(errors, p_hat, q)
    path = GuessPath((p_hat,), (ell, residual.size), (0, ell), None)
    assert np.array_equal(backward_decode(y, path, residual, q), msg)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(ADVERSARIES + ["worst"]), st.integers(0, 10**6))
def test_message_always_in_list(spec, seed):
    p = small_params()
    msg, run = _run(p, spec, seed)
    assert run.ok
    assert run.decoded.size <= list_size_bound(p)
    assert np.count_nonzero(run.transcript.s) <= p.budget
    assert sum(run.stage_lengths[:-1]) + run.termination.design.n_avail == p.n


@pytest.mark.parametrize("q", [3, 4])
def test_larger_alphabets(q):
    p = small_params(q=q, n=600, rho=0.05, gamma=0.3, eps=0.25)
    for seed in range(3):
        _, run = _run(p, "stage_greedy", seed)
        assert run.ok


def test_oracle_sync_tries_one_path_and_agrees():
    p = small_params()
    msg, full = _run(p, "stage_greedy", 4)
    _, oracle = _run(p, "stage_greedy", 4, oracle_sync=True)
    assert oracle.guesses == 1 < full.guesses
    assert oracle.ok and oracle.decoded.size <= full.decoded.size
    # the sender's own guess is among the entries that produced the message
    assert any(np.array_equal(m, msg) and g == full.sender_path for m, g in full.decoded.entries)


def test_runs_are_reproducible():
    p = small_params()
    _, a = _run(p, "stage_greedy", 11)
    _, b = _run(p, "stage_greedy", 11)
    assert np.array_equal(a.transcript.s, b.transcript.s)
    assert a.decoded.messages == b.decoded.messages


def test_wrong_message_length():
    p = small_params()
    with pytest.raises(ValueError):
        run_full_feedback(np.zeros(3, dtype=np.int64), make_adversary("null"), p, derive_rng(0, "a"))
