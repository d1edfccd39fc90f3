"""Slepian-Wolf compression of a stage given the receiver's noisy copy.

Three codecs share the same hash family:

* ``sw_encode_monolithic`` / ``sw_decode_monolithic``: one digest of the
  whole (short) word, exhaustive decoding.
* Chunked codecs: the word is cut into chunks of ``chunk_len`` symbols;
  each systematic chunk is replaced by a digest and a systematic RS code
  over GF(q^chunk_len) adds raw parity chunks. The random-noise variant
  uses joint-type typicality and no seeds; the adversarial variant first
  permutes the word, uses per-chunk seeds from feedback and a Hamming
  distance window.

Bob treats a chunk with zero or several surviving candidates as an
erasure for the RS decoder.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from listfb.channel import as_word
from listfb.gf import get_field
from listfb.hashperm import HashFamily, ball_values, perm_apply, perm_invert, word_value
from listfb.qary import capped_entropy_q
from listfb.rs import RSCode


# --- noise estimate ----------------------------------------------------------------


def estimate_noise(x, T, y_T) -> float:
    """Fraction of sampled positions where y_T differs from x."""
    T = np.asarray(T, dtype=np.int64)
    y_T = np.asarray(y_T, dtype=np.int64)
    if T.size != y_T.size:
        raise ValueError("sample positions and values differ in length")
    if T.size == 0:
        raise ValueError("empty sample")
    return float(np.mean(np.asarray(x, dtype=np.int64)[T] != y_T))


def dkw_bound(sample_size: int, eps: float) -> float:
    """2 exp(-|T| eps^2 / 2)."""
    return 2.0 * math.exp(-sample_size * eps * eps / 2.0)


# --- joint statistics -------------------------------------------------------------


def symmetric_joint(p: float, q: int) -> np.ndarray:
    """Joint law of (x, y) for uniform x through a q-ary symmetric channel."""
    P = np.full((q, q), p / (q * (q - 1)) if q > 1 else 0.0)
    np.fill_diagonal(P, (1.0 - p) / q)
    return P


def jointly_typical(candidates: np.ndarray, y: np.ndarray, P: np.ndarray, eps: float) -> np.ndarray:
    """Rows u of ``candidates`` whose joint type with y is within eps of P (l-inf)."""
    candidates = np.atleast_2d(candidates)
    y = np.asarray(y)
    q = P.shape[0]
    L = y.size
    ok = np.ones(candidates.shape[0], dtype=bool)
    for b in range(q):
        yb = (y == b)[None, :]
        for a in range(q):
            freq = np.count_nonzero((candidates == a) & yb, axis=1) / L
            ok &= np.abs(freq - P[a, b]) <= eps + 1e-12
    return ok


def digest_length(chunk_len: int, p, eps_h: float, q: int) -> int:
    """ceil(chunk_len * (H_q(p) + eps_h)), at most chunk_len."""
    return min(chunk_len, math.ceil(chunk_len * (capped_entropy_q(float(p), q) + eps_h) - 1e-9))


def _digits_of(values, width, q):
    values = np.asarray(values, dtype=np.int64).reshape(-1)
    place = q ** np.arange(width - 1, -1, -1, dtype=np.int64)
    return (values[:, None] // place[None, :]) % q


# --- monolithic -----------------------------------------------------------------------


@lru_cache(maxsize=8)
def _all_digests(master_seed: int, length: int, q: int, range_len: int) -> np.ndarray:
    fam = HashFamily(master_seed, length, q)
    return fam.digest_values(np.arange(q**length, dtype=np.uint64), 0, 0, range_len)


def sw_encode_monolithic(x, p: float, eps_h: float, q: int, master_seed: int = 0) -> np.ndarray:
    x = as_word(x, q)
    fam = HashFamily(master_seed, x.size, q)
    rl = digest_length(x.size, p, eps_h, q)
    return fam.unpack(fam.digest_values(word_value(x, q), 0, 0, rl)[0], rl)


def sw_decode_monolithic(y, z, p: float, eps_d: float, q: int, master_seed: int = 0) -> Optional[np.ndarray]:
    """The unique hash-matching, jointly typical word, or None."""
    y = as_word(y, q)
    if q**y.size > 1 << 24:
        raise ValueError("word too long for exhaustive decoding")
    fam = HashFamily(master_seed, y.size, q)
    target = fam.pack(z)
    digests = _all_digests(master_seed, y.size, q, len(z))
    matches = np.flatnonzero(digests == np.uint64(target))
    if matches.size == 0:
        return None
    words = _digits_of(matches, y.size, q)
    keep = words[jointly_typical(words, y, symmetric_joint(p, q), eps_d)]
    return keep[0].copy() if keep.shape[0] == 1 else None


# --- chunked ----------------------------------------------------------------------------


@dataclass
class ChunkCodecParams:
    chunk_len: int
    q: int
    eps_h: float
    eps_d: float
    parity: int
    eps_e: float = 0.0
    eps_t: float = 0.0
    eps_n: float = 0.0
    adversarial: bool = True
    strict: bool = False
    violations: list = field(default_factory=list)

    def __post_init__(self):
        if self.chunk_len * math.log2(self.q) > 24:
            raise ValueError("chunk search space exceeds 2^24 words")
        if self.eps_h <= self.eps_d:
            raise ValueError("hash slack must exceed the decoding slack (eps_h > eps_d)")
        if self.parity < 0:
            raise ValueError("parity chunk count must be >= 0")
        self.violations = []
        if abs(self.eps_h - 2 * self.eps_d) > 1e-12:
            self.violations.append("eps_h != 2 eps_d")
        if self.adversarial and self.eps_d + 1e-12 < self.eps_t + self.eps_e + 2.0 / self.chunk_len:
            self.violations.append("eps_d < eps_T + eps_e + 2/chunk_len")
        if self.strict and self.violations:
            raise ValueError("slack constraints violated: " + "; ".join(self.violations))

    @property
    def eps_H(self) -> float:
        return self.eps_h / 3.0

    @property
    def seed_len(self) -> int:
        return math.isqrt(self.chunk_len)

    def chunks(self, N: int) -> int:
        return -(-N // self.chunk_len)

    def window(self, p) -> tuple:
        """Integer Hamming-distance window [lo, hi] for a chunk."""
        lo = max(0, math.ceil(self.chunk_len * (float(p) - self.eps_d) - 1e-9))
        hi = min(self.chunk_len, math.floor(self.chunk_len * (float(p) + self.eps_d) + 1e-9))
        return lo, hi

    def payload_length(self, N: int, p) -> int:
        K = self.chunks(N)
        return K * digest_length(self.chunk_len, p, self.eps_h, self.q) + self.parity * self.chunk_len

    def seeds_needed(self, N: int) -> int:
        return self.chunks(N) * self.seed_len


def parity_from_formula(K: int, chunk_len: int, eps_n: float, q: int) -> Optional[int]:
    """K' - K with K' = K / (1 - (4 q^(-sqrt(l)/2) + 2 eps_N)); None if the denominator is not positive."""
    loss = 4.0 * q ** (-math.sqrt(chunk_len) / 2.0) + 2.0 * eps_n
    if loss >= 1.0:
        return None
    return math.ceil(K / (1.0 - loss)) - K


_HEADER = struct.Struct(">IHIIIH")


@dataclass
class StagePayload:
    """Digests of the systematic chunks followed by the raw parity chunks."""

    N: int
    chunk_len: int
    K: int
    K_prime: int
    p_index: int
    pad: int
    digest_len: int
    q: int
    z: np.ndarray

    def to_bytes(self) -> bytes:
        """Header (N, chunk_len, K, K', p-index, pad) then one byte per symbol (two if q > 256)."""
        head = _HEADER.pack(self.N, self.chunk_len, self.K, self.K_prime, self.p_index, self.pad)
        body = self.z.astype(">u1" if self.q <= 256 else ">u2").tobytes()
        return head + struct.pack(">HH", self.digest_len, self.q) + body

    @classmethod
    def from_bytes(cls, blob: bytes) -> "StagePayload":
        N, L, K, Kp, pidx, pad = _HEADER.unpack_from(blob, 0)
        dl, q = struct.unpack_from(">HH", blob, _HEADER.size)
        body = np.frombuffer(blob[_HEADER.size + 4:], dtype=">u1" if q <= 256 else ">u2").astype(np.int64)
        return cls(N, L, K, Kp, pidx, pad, dl, q, body)


def _rs(params: ChunkCodecParams, K: int) -> RSCode:
    return _rs_cached(params.q ** params.chunk_len, K, K + params.parity)


@lru_cache(maxsize=256)
def _rs_cached(order, K, K_prime):
    return RSCode(get_field(order), K, K_prime)


def _seed_values(seeds, K, params):
    if seeds is None:
        return np.zeros(K, dtype=np.uint64)
    seeds = np.asarray(seeds, dtype=np.int64)
    need = K * params.seed_len
    if seeds.size < need:
        raise ValueError(f"need {need} seed symbols, got {seeds.size}")
    if params.seed_len == 0:
        return np.zeros(K, dtype=np.uint64)
    return word_value(seeds[:need].reshape(K, params.seed_len), params.q)


def _prepare(word, params, perm):
    L = params.chunk_len
    N = word.size
    K = params.chunks(N)
    padded = np.zeros(K * L, dtype=np.int64)
    padded[:N] = word
    if perm is not None:
        if perm.size != padded.size:
            raise ValueError("permutation length must equal the padded stage length")
        padded = perm_apply(perm, padded)
    return padded.reshape(K, L), K, K * L - N


def sw_encode_chunked(x, params: ChunkCodecParams, p, family: HashFamily, perm=None, seeds=None,
                      p_index: int = 0) -> StagePayload:
    x = as_word(x, params.q)
    q, L = params.q, params.chunk_len
    chunks, K, pad = _prepare(x, params, perm)
    values = word_value(chunks, q)
    dl = digest_length(L, p, params.eps_h, q)
    digests = family.digest_values(values, _seed_values(seeds, K, params), np.arange(K, dtype=np.uint64), dl)
    parts = [np.concatenate([family.unpack(v, dl) for v in digests.tolist()]) if dl else np.zeros(0, np.int64)]
    if params.parity:
        code = _rs(params, K)
        parity = code.encode(values.astype(np.int64))[K:]
        parts.append(_digits_of(parity, L, q).reshape(-1))
    z = np.concatenate(parts).astype(np.int64)
    return StagePayload(x.size, L, K, K + params.parity, p_index, pad, dl, q, z)


@dataclass
class ChunkDecodeReport:
    x_hat: Optional[np.ndarray]
    chunk_status: np.ndarray  # 1 unique candidate, 0 none, 2 several
    chunk_values: np.ndarray
    rs_ok: bool

    @property
    def ok(self) -> bool:
        return self.x_hat is not None


def decode_chunks(y_chunks: np.ndarray, digests: np.ndarray, params: ChunkCodecParams, p, family,
                  seed_values, dl: int, stats: Optional[np.ndarray] = None):
    """Per-chunk candidate search; returns (values, status)."""
    q, L = params.q, params.chunk_len
    K = y_chunks.shape[0]
    centers = word_value(y_chunks, q)
    if stats is None:
        lo, hi = params.window(p)
    else:
        lo, hi = 0, min(L, math.floor(L * (float(p) + q * (q - 1) * params.eps_d) + 1e-9))
    cand, weights = ball_values(centers, L, hi, q)
    in_window = weights >= lo
    cand = cand[:, in_window]
    d = family.digest_values(cand, seed_values[:, None], np.arange(K, dtype=np.uint64)[:, None], dl)
    match = d == digests[:, None]
    if stats is not None and match.any():
        rows, cols = np.nonzero(match)
        words = _digits_of(cand[rows, cols].astype(np.int64), L, q)
        for k in range(rows.size):
            if not jointly_typical(words[k:k + 1], y_chunks[rows[k]], stats, params.eps_d)[0]:
                match[rows[k], cols[k]] = False
    counts = match.sum(axis=1)
    first = np.argmax(match, axis=1)
    values = np.where(counts == 1, cand[np.arange(K), first], 0).astype(np.int64)
    status = np.where(counts == 1, 1, np.where(counts == 0, 0, 2))
    return values, status


def sw_decode_chunked(y, payload: StagePayload, params: ChunkCodecParams, p, family: HashFamily,
                      perm=None, seeds=None, stats: Optional[np.ndarray] = None) -> ChunkDecodeReport:
    """Recover x from y and the payload; ``stats`` selects joint-type typicality."""
    q, L = params.q, params.chunk_len
    y = as_word(y, q)
    if y.size != payload.N:
        raise ValueError("received word has the wrong length")
    # padding positions are known zeros, so y is padded exactly like x
    y_chunks, K, _ = _prepare(y, params, perm)
    dl = payload.digest_len
    z = np.asarray(payload.z, dtype=np.int64)
    if z.size != K * dl + params.parity * L:
        raise ValueError("payload length does not match the parameters")
    digests = np.array([family.pack(z[i * dl:(i + 1) * dl]) for i in range(K)], dtype=np.uint64)
    values, status = decode_chunks(y_chunks, digests, params, p, family, _seed_values(seeds, K, params), dl,
                                   stats)
    if params.parity:
        parity = word_value(z[K * dl:].reshape(params.parity, L), q).astype(np.int64)
        word = np.concatenate([values, parity])
        res = _rs(params, K).decode(word, np.flatnonzero(status != 1).tolist())
        if not res.ok:
            return ChunkDecodeReport(None, status, values, False)
        values = res.data
    elif np.any(status != 1):
        return ChunkDecodeReport(None, status, values, False)
    flat = _digits_of(values, L, q).reshape(-1)
    if perm is not None:
        flat = perm_apply(perm_invert(perm), flat)
    return ChunkDecodeReport(flat[: payload.N].copy(), status, values, True)
