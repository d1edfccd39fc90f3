"""Weldon-type scheme with full feedback.

Stage 1 carries the message uncoded. Because Bob echoes every symbol,
Alice sees each stage's error pattern exactly and sends its enumerative
index next, sized by the error fraction rounded up to the delta grid.
Once the public termination rule fires, the current residual goes into
the termination code. Bob list-decodes the termination stage and undoes
the stages backwards, once per guessed grid vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from listfb.channel import Adversary, Channel, GridExtremal, Transcript
from listfb.enumerative import error_index_decode, error_index_encode
from listfb.planner import round_up_to_grid
from listfb.scheme import SchemeParams, TerminationDecision, build_termination, min_spend, termination_decision
from listfb.sync import GuessPath, enumerate_guesses, full_feedback_next_len


@dataclass
class DecodeList:
    entries: list = field(default_factory=list)  # (message, p_hat vector)

    def add(self, message: np.ndarray, guess: tuple) -> None:
        self.entries.append((message, guess))

    @property
    def messages(self) -> set:
        return {m.tobytes() for m, _ in self.entries}

    @property
    def size(self) -> int:
        return len(self.messages)

    def contains(self, message: np.ndarray) -> bool:
        return np.asarray(message, dtype=np.int64).tobytes() in self.messages


@dataclass
class SchemeRun:
    decoded: DecodeList
    transcript: Transcript
    sender_path: tuple  # Alice's p_hat vector
    stage_lengths: tuple
    termination: TerminationDecision
    guesses: int
    ok: bool
    trace: dict = field(default_factory=dict)


def list_size_bound(params: SchemeParams) -> int:
    """(1/delta)^lambda * L."""
    return int(round(1 / params.delta)) ** params.lam * params.list_cap


def worst_case_sequence(params: SchemeParams) -> tuple:
    """Per-stage error fractions that keep the scheme busiest for the least budget.

    Each stage plays the fewest errors that still round up to its grid value,
    so every budget-feasible guess path is reachable exactly. The longest
    path wins; ties go to the one that leaves the most budget for the end.
    """
    best, best_key = (), None
    for path in enumerate_guesses(params, params.message_length, lambda e: e,
                                  full_feedback_next_len(params), lambda s, e: e):
        counts = [min_spend(ell, p, params.delta) for p, ell in zip(path.p_hats, path.lengths)]
        key = (len(counts), -sum(counts), path.p_hats)
        if best_key is None or key > best_key:
            best = tuple(Fraction(c, ell) for c, ell in zip(counts, path.lengths))
            best_key = key
    return best


def worst_case_adversary(params: SchemeParams) -> GridExtremal:
    """grid_extremal playing worst_case_sequence, then the rest of the budget on termination."""
    seq = worst_case_sequence(params)
    spent = 0
    ell = params.message_length
    next_len = full_feedback_next_len(params)
    for p in seq:
        spent += round(p * ell)
        ell = next_len(ell, round_up_to_grid(p, params.delta))
    return GridExtremal(seq, termination_errors=params.budget - spent)


def backward_decode(y: np.ndarray, path: GuessPath, residual: np.ndarray, q: int) -> Optional[np.ndarray]:
    """Peel stages from the last raw stage to the first; None if an index is invalid."""
    content = residual
    for j in range(len(path.p_hats) - 1, -1, -1):
        ell, start = path.lengths[j], path.starts[j]
        errors = error_index_decode(content, ell, path.p_hats[j], q)
        if errors is None:
            return None
        content = (y[start:start + ell] - errors) % q
    return content


def decode_path(y: np.ndarray, path: GuessPath, q: int) -> list:
    tc = build_termination(path.decision)
    if tc is None:
        return []
    start = path.starts[-1]
    out = []
    for residual in tc.list_decode(y[start:]):
        m = backward_decode(y, path, residual, q)
        if m is not None:
            out.append(m)
    return out


def run_full_feedback(message, adversary: Adversary, params: SchemeParams, rng: np.random.Generator,
                      oracle_sync: bool = False, omniscient: bool = False) -> SchemeRun:
    q, n = params.q, params.n
    message = np.asarray(message, dtype=np.int64)
    if message.size != params.message_length:
        raise ValueError(f"message must have {params.message_length} symbols")
    ch = Channel(n, q, params.rho, adversary, rng, message=message, omniscient=omniscient)
    total = ch.budget.total

    # --- Alice ---
    content, pos, spent_bound = message, 0, 0
    p_hats, lengths = [], []
    while True:
        ell = content.size
        dec = termination_decision(params, ell, n - pos, total - spent_bound, len(p_hats), ell)
        if dec.ready:
            break
        ch.begin_stage(len(p_hats), ell)
        y_stage = ch.transmit(content)
        errors = (y_stage - content) % q
        p = Fraction(int(np.count_nonzero(errors)), ell)
        p_hat = round_up_to_grid(p, params.delta)
        ch.annotate_stage(p=p, p_hat=p_hat)
        spent_bound += min_spend(ell, p_hat, params.delta)
        p_hats.append(p_hat)
        lengths.append(ell)
        pos += ell
        content = error_index_encode(errors, p_hat, q)
    tc = build_termination(dec)
    if tc is not None:
        ch.begin_stage(len(p_hats), n - pos, kind="termination")
        ch.transmit(tc.encode(content))
        ch.annotate_stage(reason=dec.reason, radius=tc.radius)
    transcript = ch.transcript()
    y = transcript.y

    # --- Bob ---
    decoded = DecodeList()
    guesses = 0
    sender = tuple(p_hats)
    if oracle_sync:
        paths = [p for p in enumerate_guesses(params, params.message_length, lambda e: e,
                                              full_feedback_next_len(params), lambda s, e: e)
                 if p.p_hats == sender]
    else:
        paths = enumerate_guesses(params, params.message_length, lambda e: e,
                                  full_feedback_next_len(params), lambda s, e: e)
    for path in paths:
        guesses += 1
        for m in decode_path(y, path, q):
            decoded.add(m, path.p_hats)
    return SchemeRun(decoded, transcript, sender, tuple(lengths) + (content.size,), dec, guesses,
                     decoded.contains(message),
                     {"forced": dec.forced, "reason": dec.reason,
                      "tc": None if tc is None else tc.design.descriptor()})
