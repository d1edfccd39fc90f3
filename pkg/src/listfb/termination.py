"""The termination stage: a concatenated code with exhaustive list decoding.

The inner code is a random linear [n_in, k_in] code over GF(q), decoded by
listing every codeword within distance tau of each received block. The
outer code is Reed-Solomon over GF(q^k_in); its symbols are the inner
message indices. Outer list recovery enumerates selections from the inner
lists (up to ``list_cap`` of them) and runs errors-and-erasures RS decoding
on each.

Certified radius. Let U = N - K + 1. For the true codeword to be missed,
the selection that agrees with it on every branched block must still see
2*errors + erasures >= U. A block with more than tau errors costs at most
2 of those units and needs tau + 1 errors; a block whose list holds the
true codeword but was erased to respect the cap costs 1 unit and needs at
least d - tau errors (another codeword is then within tau of it). The
certified radius is one less than the cheapest way to buy U units.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from listfb.gf import get_field
from listfb.rng import derive_rng
from listfb.rs import RSCode

MAX_INNER_CODEWORDS = {2: 4096}
DEFAULT_MAX_INNER_CODEWORDS = 1024
MAX_INNER_LENGTH = 48
DEFAULT_LIST_CAP = 16


class InnerCode:
    """Random linear [n, k] code over GF(q) with its full codebook in memory."""

    def __init__(self, q: int, n: int, k: int, seed: int):
        self.q, self.n, self.k, self.seed = q, n, k, seed
        self.size = q**k
        rng = derive_rng(seed, "inner", q, n, k)
        messages = _all_words(q, k)
        for _attempt in range(64):
            G = rng.integers(0, q, size=(k, n))
            book = _multiply(messages, G, q)
            weights = np.count_nonzero(book[1:], axis=1)
            if weights.size == 0 or weights.min() > 0:
                break
        else:
            raise RuntimeError(f"no full-rank generator found for [{n}, {k}]_{q}")
        self.generator = G
        self.codebook = book
        self.distance = int(weights.min()) if weights.size else n
        self._packed = _pack_bits(book) if q == 2 and n <= 63 else None

    def distances(self, blocks: np.ndarray) -> np.ndarray:
        """Hamming distances, shape (len(blocks), codebook size)."""
        blocks = np.asarray(blocks, dtype=np.int64)
        if self._packed is not None:
            packed = _pack_bits(blocks)
            return np.bitwise_count(packed[:, None] ^ self._packed[None, :]).astype(np.int64)
        out = np.empty((blocks.shape[0], self.size), dtype=np.int64)
        step = max(1, (1 << 22) // max(1, self.size * self.n))
        for a in range(0, blocks.shape[0], step):
            b = blocks[a:a + step]
            out[a:a + step] = np.count_nonzero(b[:, None, :] != self.codebook[None, :, :], axis=2)
        return out

    def list_decode(self, blocks: np.ndarray, tau: int) -> list:
        dist = self.distances(blocks)
        return [np.flatnonzero(row <= tau) for row in dist]


def _all_words(q, k):
    """All q-ary words of length k, row r holding the base-q digits of r (msd first)."""
    r = np.arange(q**k, dtype=np.int64)
    return np.stack([(r // q ** (k - 1 - j)) % q for j in range(k)], axis=1) if k else np.zeros((1, 0), dtype=np.int64)


def _multiply(M, G, q):
    p = get_field(q).p if q > 1 else q
    if p == q:
        return (M @ G) % q
    f = get_field(q)
    out = np.zeros((M.shape[0], G.shape[1]), dtype=np.int64)
    for j in range(G.shape[0]):
        out = f.add_vec(out, f.mul_vec(M[:, j:j + 1], G[j:j + 1, :]))
    return out


def _pack_bits(rows):
    rows = np.asarray(rows, dtype=np.uint64)
    weights = np.left_shift(np.uint64(1), np.arange(rows.shape[1], dtype=np.uint64))
    return (rows * weights).sum(axis=1, dtype=np.uint64)


@lru_cache(maxsize=2048)
def inner_code(q: int, n: int, k: int, seed: int) -> InnerCode:
    return InnerCode(q, n, k, seed)


def certified_radius(N: int, K: int, d: int, tau: int) -> int:
    """Largest error count that cannot push 2*errors + erasures past N - K."""
    units = N - K + 1
    cost_error = tau + 1
    cost_erasure = d - tau if 2 * tau >= d else None
    if cost_erasure is None:
        cheapest = -(-units // 2) * cost_error
    elif 2 * cost_erasure <= cost_error:
        cheapest = units * cost_erasure
    else:
        cheapest = (units // 2) * cost_error + (units % 2) * min(cost_error, cost_erasure)
    return cheapest - 1


@dataclass(frozen=True)
class TerminationDesign:
    q: int
    k_msg: int
    n_avail: int
    k_in: int
    n_in: int
    inner_distance: int
    tau: int
    N: int
    K: int
    radius: int
    list_cap: int
    seed: int

    @property
    def rate(self) -> float:
        return self.k_msg / self.n_avail if self.n_avail else 0.0

    @property
    def used_length(self) -> int:
        return self.N * self.n_in

    def descriptor(self) -> dict:
        d = dict(self.__dict__)
        d["inner_rate"] = self.k_in / self.n_in if self.n_in else 0.0
        d["outer_rate"] = self.K / self.N if self.N else 0.0
        return d


def _cost(N, Q, nsym):
    return N * Q + 4 * nsym * nsym


@lru_cache(maxsize=4096)
def design_termination(q: int, k_msg: int, n_avail: int, target_radius: int = 0,
                       seed: int = 0, list_cap: int = DEFAULT_LIST_CAP) -> Optional[TerminationDesign]:
    """Pick inner/outer parameters for a k_msg-symbol residual in n_avail symbols.

    Among designs reaching ``target_radius`` the cheapest to decode wins;
    if none reaches it, the one with the largest radius. None if no
    concatenated code fits at all.
    """
    if k_msg == 0:
        return TerminationDesign(q, 0, n_avail, 0, 0, 0, 0, 0, 0, n_avail, 1, seed)
    q_cap = MAX_INNER_CODEWORDS.get(q, DEFAULT_MAX_INNER_CODEWORDS)
    best_ok, best_ok_key = None, None
    best_any, best_any_key = None, None
    k_in = 1
    while q**k_in <= q_cap:
        Q = q**k_in
        K = math.ceil(k_msg / k_in)
        if K <= Q - 1 and K * (k_in + 1) <= n_avail:
            for n_in in range(k_in + 1, min(MAX_INNER_LENGTH, n_avail // K) + 1):
                N_max = min(n_avail // n_in, Q - 1)
                if N_max < K:
                    continue
                code = inner_code(q, n_in, k_in, seed)
                d = code.distance
                for tau in range((d - 1) // 2, d):
                    r_max = certified_radius(N_max, K, d, tau)
                    any_key = (r_max, -_cost(N_max, Q, N_max - K))
                    if best_any is None or any_key > best_any_key:
                        best_any_key = any_key
                        best_any = TerminationDesign(q, k_msg, n_avail, k_in, n_in, d, tau, N_max, K,
                                                     r_max, list_cap, seed)
                    if r_max < target_radius:
                        continue
                    lo, hi = K, N_max
                    while lo < hi:
                        mid = (lo + hi) // 2
                        if certified_radius(mid, K, d, tau) >= target_radius:
                            hi = mid
                        else:
                            lo = mid + 1
                    N = lo
                    key = (-_cost(N, Q, N - K), -tau, -n_in)
                    if best_ok is None or key > best_ok_key:
                        best_ok_key = key
                        best_ok = TerminationDesign(q, k_msg, n_avail, k_in, n_in, d, tau, N, K,
                                                    certified_radius(N, K, d, tau), list_cap, seed)
        k_in += 1
    return best_ok if best_ok is not None else best_any


class TerminationCode:
    def __init__(self, design: TerminationDesign):
        self.design = design
        self.q = design.q
        if design.k_msg:
            self.inner = inner_code(design.q, design.n_in, design.k_in, design.seed)
            self.field = get_field(design.q**design.k_in)
            self.outer = RSCode(self.field, design.K, design.N)

    @classmethod
    def build(cls, q, k_msg, n_avail, target_radius=0, seed=0, list_cap=DEFAULT_LIST_CAP):
        design = design_termination(q, k_msg, n_avail, target_radius, seed, list_cap)
        if design is None:
            raise ValueError(f"no termination code carries {k_msg} symbols in {n_avail}")
        return cls(design)

    @property
    def radius(self) -> int:
        return self.design.radius

    def _outer_symbols(self, residual):
        d = self.design
        padded = np.zeros(d.K * d.k_in, dtype=np.int64)
        padded[: d.k_msg] = residual
        weights = self.q ** np.arange(d.k_in - 1, -1, -1, dtype=np.int64)
        return padded.reshape(d.K, d.k_in) @ weights

    def _residual_from_symbols(self, symbols):
        d = self.design
        digits = _all_words(self.q, d.k_in)[np.asarray(symbols, dtype=np.int64)].reshape(-1)
        if np.any(digits[d.k_msg:]):
            return None
        return digits[: d.k_msg]

    def encode(self, residual) -> np.ndarray:
        d = self.design
        residual = np.asarray(residual, dtype=np.int64)
        if residual.shape != (d.k_msg,):
            raise ValueError(f"expected a residual of {d.k_msg} symbols")
        out = np.zeros(d.n_avail, dtype=np.int64)
        if d.k_msg == 0:
            return out
        outer = self.outer.encode(self._outer_symbols(residual))
        out[: d.used_length] = self.inner.codebook[outer].reshape(-1)
        return out

    def list_decode(self, received) -> list:
        """All residuals recovered by any enumerated selection (at most list_cap)."""
        d = self.design
        received = np.asarray(received, dtype=np.int64)
        if received.shape != (d.n_avail,):
            raise ValueError(f"expected {d.n_avail} received symbols")
        if d.k_msg == 0:
            return [np.zeros(0, dtype=np.int64)]
        blocks = received[: d.used_length].reshape(d.N, d.n_in)
        lists = self.inner.list_decode(blocks, d.tau)

        base = np.zeros(d.N, dtype=np.int64)
        erasures = []
        multi = []
        for j, cand in enumerate(lists):
            if cand.size == 0:
                erasures.append(j)
            elif cand.size == 1:
                base[j] = cand[0]
            else:
                multi.append(j)
        # erase the longest lists until the product fits under the cap
        multi.sort(key=lambda j: (-lists[j].size, j))
        total = math.prod(lists[j].size for j in multi)
        while multi and total > d.list_cap:
            j = multi.pop(0)
            total //= lists[j].size
            erasures.append(j)
        multi.sort()

        out, seen = [], set()
        for choice in itertools.product(*(lists[j].tolist() for j in multi)):
            word = base.copy()
            word[multi] = choice
            res = self.outer.decode(word, erasures)
            if not res.ok:
                continue
            residual = self._residual_from_symbols(res.data)
            if residual is None:
                continue
            key = residual.tobytes()
            if key not in seen:
                seen.add(key)
                out.append(residual)
        return out


def terminate_encode(residual, tc: TerminationCode) -> np.ndarray:
    return tc.encode(residual)


def terminate_list_decode(received, tc: TerminationCode) -> list:
    return tc.list_decode(received)
