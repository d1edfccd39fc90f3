"""Receiver-side enumeration of stage-boundary guesses.

Bob never learns the grid values p_hat_i directly. Every vector of grid
values fixes all stage lengths, so he replays the sender's public
termination rule along each vector and decodes every leaf. A prefix is
dropped once the fewest errors it implies exceed the budget; stage
lengths can never overrun n because the rule forces termination first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

from listfb.enumerative import index_length, weight_cap
from listfb.scheme import SchemeParams, TerminationDecision, min_spend, termination_decision


@dataclass(frozen=True)
class GuessPath:
    p_hats: tuple
    lengths: tuple  # content lengths of the raw stages, then the residual
    starts: tuple  # start of each raw stage, then of the termination stage
    decision: TerminationDecision


def enumerate_guesses(params: SchemeParams, first_len: int, stage_span: Callable[[int], int],
                      next_len: Callable[[int, object], int],
                      observed_count: Callable[[int, int], int]) -> Iterator[GuessPath]:
    """Depth-first walk over grid vectors.

    stage_span(ell): channel symbols a raw stage of ell content symbols uses.
    next_len(ell, p_hat): content length of the following stage.
    observed_count(start, ell): positions whose errors the grid value was computed from.
    """
    total = params.budget
    grid = params.grid

    def walk(pos, ell, p_hats, lengths, starts, spent):
        span = stage_span(ell)
        dec = termination_decision(params, ell, params.n - pos, total - spent, len(p_hats), span)
        if dec.ready:
            yield GuessPath(tuple(p_hats), tuple(lengths) + (ell,), tuple(starts) + (pos,), dec)
            return
        count = observed_count(pos, ell)
        for p_hat in grid:
            s = spent + min_spend(count, p_hat, params.delta)
            if s > total:
                break
            yield from walk(pos + span, next_len(ell, p_hat), p_hats + [p_hat], lengths + [ell],
                            starts + [pos], s)

    yield from walk(0, first_len, [], [], [], 0)


def full_feedback_next_len(params: SchemeParams):
    def next_len(ell, p_hat):
        return index_length(ell, weight_cap(ell, p_hat), params.q)

    return next_len


def guess_stage_boundaries(params: SchemeParams) -> Iterator[tuple]:
    """Grid vectors the full-feedback receiver tries, in search order."""
    for path in enumerate_guesses(params, params.message_length, lambda ell: ell,
                                  full_feedback_next_len(params), lambda start, ell: ell):
        yield path.p_hats
