"""Weldon-type scheme with sparse feedback.

The block length n is cut into feedback blocks of ceil(n * kappa) symbols.
After each block Bob publishes one packet: a random sample of positions
with the symbols he received there, the digits of a permutation index and
a batch of hash-seed digits. Stages are zero-padded to whole blocks.

Alice estimates a stage's noise from the samples of all its blocks (she
encodes only once the stage is over), rounds up to the delta grid and sends a chunked Slepian-Wolf description
of the stage, using the permutation and seeds of the stage's last packet.
Termination works as with full feedback. Bob replays the public rule over
every grid vector, list-decodes the termination stage and undoes the
Slepian-Wolf stages backwards; a branch whose stage decode fails is dropped.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional

import numpy as np

from listfb.channel import Adversary, Channel, FeedbackPacket
from listfb.enumerative import digits_to_int
from listfb.full_feedback import DecodeList, SchemeRun
from listfb.hashperm import HashFamily, PermBank
from listfb.planner import round_up_to_grid
from listfb.scheme import SchemeParams, build_termination, min_spend, termination_decision
from listfb.qary import digits_needed
from listfb.swcodec import StagePayload, digest_length, sw_decode_chunked, sw_encode_chunked
from listfb.sync import GuessPath, enumerate_guesses


def feedback_formula(params: SchemeParams) -> float:
    """Closed-form feedback total over the whole block length.

    (1/kappa) * (C_e log(n kappa) + C_e log^2(n kappa) + C_p log n + n / sqrt(C_c log n)),
    logs base q, with C_c = chunk_len / log n.
    """
    q, n = params.q, params.n
    log_n = math.log(n, q)
    log_b = math.log(n * params.kappa, q)
    c_c = params.chunk_len / log_n
    per_block = params.C_e * log_b + params.C_e * log_b**2 + params.C_p * log_n + n / math.sqrt(c_c * log_n)
    return float(1 / params.kappa) * per_block


def packet_symbols(params: SchemeParams) -> int:
    """Symbols in one packet as actually built."""
    return params.sample_size * (digits_needed(params.block_len, params.q) + 1) + params.selector_len + params.seed_symbols


def storage_symbols(params: SchemeParams) -> int:
    return PermBank(params.perm_seed, params.n, params.C_p).storage_symbols()


class FeedbackSource:
    """Bob's packet generator; everything it emits is public."""

    def __init__(self, params: SchemeParams, rng: np.random.Generator):
        self.params, self.rng = params, rng

    def packet(self, block_index: int, y_block: np.ndarray) -> FeedbackPacket:
        p, rng = self.params, self.rng
        B = p.block_len
        T = np.sort(rng.choice(B, size=min(p.sample_size, B), replace=False)).astype(np.int64)
        return FeedbackPacket(block_index, T, np.asarray(y_block)[T].copy(),
                              rng.integers(0, p.q, p.selector_len, dtype=np.int64),
                              rng.integers(0, p.q, p.seed_symbols, dtype=np.int64), B, p.q)


class _Shared:
    """Per-run public objects: hash family, permutation bank, the packets."""

    def __init__(self, params: SchemeParams, packets: list):
        self.params = params
        self.family = HashFamily(params.hash_seed, params.chunk_len, params.q)
        self.bank = PermBank(params.perm_seed, params.n, params.C_p)
        self.packets = packets

    def span(self, ell: int) -> int:
        B = self.params.block_len
        return max(1, -(-ell // B)) * B

    def next_len(self, ell: int, p_hat) -> int:
        return self.params.codec_for(ell).payload_length(ell, p_hat)

    def content_samples(self, start: int, ell: int) -> np.ndarray:
        """Stage offsets sampled by any of the stage's packets that fall on content."""
        B = self.params.block_len
        first = start // B
        T = np.concatenate([self.packets[first + b].T + b * B for b in range(self.span(ell) // B)])
        return T[T < ell]

    def observed_count(self, start: int, ell: int) -> int:
        return int(self.content_samples(start, ell).size)

    def stage_keys(self, start: int, ell: int):
        """(permutation, seed digits) from the stage's last packet."""
        p = self.params
        last = self.packets[(start + self.span(ell)) // p.block_len - 1]
        codec = p.codec_for(ell)
        j = digits_to_int(last.F_c, p.q) % self.bank.size
        perm = self.bank.get(j, codec.chunks(ell) * p.chunk_len)
        return perm, last.F_d


def _grid_index(p_hat, delta) -> int:
    return int(Fraction(p_hat) / delta)


def _stage_payload(params: SchemeParams, ell: int, p_hat, z: np.ndarray) -> Optional[StagePayload]:
    codec = params.codec_for(ell)
    K = codec.chunks(ell)
    L = params.chunk_len
    if z.size != codec.payload_length(ell, p_hat):
        return None
    return StagePayload(ell, L, K, K + codec.parity, _grid_index(p_hat, params.delta), K * L - ell,
                        digest_length(L, p_hat, codec.eps_h, params.q), params.q, z)


def decode_path(y: np.ndarray, path: GuessPath, shared: _Shared) -> list:
    params = shared.params
    tc = build_termination(path.decision)
    if tc is None:
        return []
    out = []
    for residual in tc.list_decode(y[path.starts[-1]:]):
        content = residual
        for j in range(len(path.p_hats) - 1, -1, -1):
            ell, start, p_hat = path.lengths[j], path.starts[j], path.p_hats[j]
            payload = _stage_payload(params, ell, p_hat, content)
            if payload is None:
                content = None
                break
            perm, seeds = shared.stage_keys(start, ell)
            rep = sw_decode_chunked(y[start:start + ell], payload, params.codec_for(ell), p_hat,
                                    shared.family, perm=perm, seeds=seeds)
            if not rep.ok:
                content = None
                break
            content = rep.x_hat
        if content is not None:
            out.append(content)
    return out


def run_partial_feedback(message, adversary: Adversary, params: SchemeParams, rng: np.random.Generator,
                         feedback_rng: Optional[np.random.Generator] = None,
                         oracle_sync: bool = False, omniscient: bool = False) -> SchemeRun:
    q, n, B = params.q, params.n, params.block_len
    if n % B:
        raise ValueError("the feedback block length must divide n")
    message = np.asarray(message, dtype=np.int64)
    if message.size != params.message_length:
        raise ValueError(f"message must have {params.message_length} symbols")
    if feedback_rng is None:
        feedback_rng = np.random.default_rng(int(rng.integers(0, 2**63)))
    ch = Channel(n, q, params.rho, adversary, rng, message=message, omniscient=omniscient)
    source = FeedbackSource(params, feedback_rng)
    packets: list = []
    shared = _Shared(params, packets)
    total = ch.budget.total

    def send(word):
        """Transmit block by block, with Bob's packet after each block."""
        out = []
        for a in range(0, word.size, B):
            y_block = ch.transmit(word[a:a + B])
            packet = source.packet(len(packets), y_block)
            packets.append(packet)
            ch.send_feedback(packet)
            out.append(y_block)
        return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)

    # --- Alice ---
    content, pos, spent_bound = message, 0, 0
    p_hats, lengths, estimates = [], [], []
    while True:
        ell = content.size
        span = shared.span(ell)
        dec = termination_decision(params, ell, n - pos, total - spent_bound, len(p_hats), span)
        if dec.ready:
            break
        ch.begin_stage(len(p_hats), span)
        word = np.zeros(span, dtype=np.int64)
        word[:ell] = content
        y_stage = send(word)
        T = shared.content_samples(pos, ell)
        errors = int(np.count_nonzero(y_stage[T] != content[T]))
        p_tilde = Fraction(errors, T.size) if T.size else Fraction(0)
        p_hat = round_up_to_grid(p_tilde, params.delta)
        perm, seeds = shared.stage_keys(pos, ell)
        payload = sw_encode_chunked(content, params.codec_for(ell), p_hat, shared.family, perm=perm,
                                    seeds=seeds, p_index=_grid_index(p_hat, params.delta))
        ch.annotate_stage(content=ell, samples=int(T.size), p_tilde=p_tilde, p_hat=p_hat,
                          p=Fraction(int(np.count_nonzero(ch.s[pos:pos + ell])), ell))
        spent_bound += min_spend(T.size, p_hat, params.delta)
        estimates.append(p_tilde)
        p_hats.append(p_hat)
        lengths.append(ell)
        pos += span
        content = payload.z
    tc = build_termination(dec)
    ch.begin_stage(len(p_hats), n - pos, kind="termination")
    send(tc.encode(content) if tc is not None else np.zeros(n - pos, dtype=np.int64))
    ch.annotate_stage(reason=dec.reason, radius=None if tc is None else tc.radius)
    transcript = ch.transcript()
    y = transcript.y

    # --- Bob ---
    decoded = DecodeList()
    sender = tuple(p_hats)
    guesses = 0
    paths = enumerate_guesses(params, params.message_length, shared.span, shared.next_len,
                              shared.observed_count)
    for path in paths:
        if oracle_sync and path.p_hats != sender:
            continue
        guesses += 1
        for m in decode_path(y, path, shared):
            decoded.add(m, path.p_hats)
    fb = transcript.feedback_symbols()
    return SchemeRun(decoded, transcript, sender, tuple(lengths) + (content.size,), dec, guesses,
                     decoded.contains(message),
                     {"forced": dec.forced, "reason": dec.reason,
                      "tc": None if tc is None else tc.design.descriptor(),
                      "estimates": [str(e) for e in estimates],
                      "feedback_symbols": fb, "feedback_formula": feedback_formula(params),
                      "storage_symbols": storage_symbols(params)})
