"""Systematic Reed-Solomon codes with error-and-erasure decoding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from listfb.gf import GaloisField


@dataclass
class RSResult:
    """Outcome of a decode; ``data`` is None when decoding failed."""

    data: Optional[np.ndarray]
    errors: int = 0
    erasures: int = 0
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.data is not None


class RSCode:
    """Narrow-sense RS code of length K_prime and dimension K over a field.

    Codeword symbol i is the coefficient of x^(K_prime-1-i); the first K
    symbols are the data and the last K_prime-K the parity. The generator
    polynomial has roots alpha^1, ..., alpha^(K_prime-K).
    """

    def __init__(self, field: GaloisField, K: int, K_prime: int):
        if not 0 < K <= K_prime <= field.order - 1:
            raise ValueError(
                f"need 0 < K <= K' <= Q-1, got K={K}, K'={K_prime}, Q={field.order}"
            )
        self.field, self.K, self.K_prime = field, K, K_prime
        self.nsym = K_prime - K
        # generator, highest degree first (monic)
        g = [1]
        for j in range(1, self.nsym + 1):
            root = field.alpha_pow(j)
            nxt = g + [0]
            for i in range(len(g)):
                nxt[i + 1] = field.sub(nxt[i + 1], field.mul(g[i], root))
            g = nxt
        self.generator = g
        self._g_tail = np.array(g[1:], dtype=np.int64)
        self._degrees = np.arange(K_prime - 1, -1, -1, dtype=np.int64)

    def descriptor(self) -> dict:
        return {"K": self.K, "K_prime": self.K_prime, "field": self.field.descriptor(),
                "generator": list(self.generator)}

    def encode(self, data: Sequence[int]) -> np.ndarray:
        data = np.asarray(data, dtype=np.int64)
        if data.shape != (self.K,):
            raise ValueError(f"expected {self.K} data symbols, got {data.shape}")
        if self.nsym == 0:
            return data.copy()
        f = self.field
        reg = np.zeros(self.nsym, dtype=np.int64)
        for d in data.tolist():
            fb = f.add(d, int(reg[0]))
            reg[:-1] = reg[1:]
            reg[-1] = 0
            if fb:
                reg = f.sub_vec(reg, f.mul_vec(self._g_tail, fb))
        return np.concatenate([data, f.neg_vec(reg)])

    def syndromes(self, word: np.ndarray) -> list:
        f = self.field
        j = np.arange(1, self.nsym + 1, dtype=np.int64)[:, None]
        terms = f.mul_alpha_pow_vec(np.broadcast_to(word, (self.nsym, self.K_prime)), j * self._degrees[None, :])
        return f.sum_vec(terms, axis=1).tolist()

    def decode(self, received: Sequence[int], erasures: Sequence[int] = ()) -> RSResult:
        """Correct any pattern with 2*errors + erasures <= K' - K."""
        f = self.field
        word = np.array(received, dtype=np.int64)
        if word.shape != (self.K_prime,):
            raise ValueError(f"expected {self.K_prime} received symbols, got {word.shape}")
        eras = sorted(set(int(e) for e in erasures))
        if any(not 0 <= e < self.K_prime for e in eras):
            raise ValueError("erasure position out of range")
        if len(eras) > self.nsym:
            return RSResult(None, 0, len(eras), "too many erasures")
        word[eras] = 0
        if self.nsym == 0:
            return RSResult(word[: self.K].copy(), 0, 0)
        S = self.syndromes(word)
        if not any(S):
            return RSResult(word[: self.K].copy(), 0, len(eras))

        # erasure locator Gamma(x) = prod (1 - X_k x), lowest degree first
        gamma = [1]
        for e in eras:
            X = f.alpha_pow(self.K_prime - 1 - e)
            nxt = gamma + [0]
            for i in range(len(gamma)):
                nxt[i + 1] = f.sub(nxt[i + 1], f.mul(gamma[i], X))
            gamma = nxt

        # Berlekamp-Massey started from the erasure locator
        if f.p == 2:
            lam, L = _massey_binary(f, S, gamma, len(eras), self.nsym)
        else:
            lam, L = _massey(f, S, gamma, len(eras), self.nsym)
        while len(lam) > 1 and lam[-1] == 0:
            lam.pop()
        n_err = L - len(eras)
        if len(lam) - 1 != L or 2 * n_err + len(eras) > self.nsym:
            return RSResult(None, n_err, len(eras), "locator degree out of range")

        # Chien search over the actual positions
        inv_deg = -self._degrees
        val = np.zeros(self.K_prime, dtype=np.int64)
        for k, c in enumerate(lam):
            if c:
                val = f.add_vec(val, f.mul_alpha_pow_vec(np.full(self.K_prime, c), k * inv_deg))
        roots = np.nonzero(val == 0)[0].tolist()
        if len(roots) != L:
            return RSResult(None, n_err, len(eras), "locator roots do not match its degree")

        # Forney: e = -Omega(X^-1) / Lambda'(X^-1), Omega = S*Lambda mod x^nsym
        omega = [0] * self.nsym
        for i, c in enumerate(lam):
            if c:
                for j in range(self.nsym - i):
                    omega[i + j] = f.add(omega[i + j], f.mul(c, S[j]))
        dlam = [f.scale(c, k) for k, c in enumerate(lam)][1:]
        pos = np.array(roots, dtype=np.int64)
        xinv = f.exp_np[(pos - (self.K_prime - 1)) % (f.order - 1)]
        num = _poly_eval_vec(f, omega, xinv)
        den = _poly_eval_vec(f, dlam, xinv)
        if np.any(den == 0):
            return RSResult(None, n_err, len(eras), "zero derivative in Forney step")
        nz = num != 0
        mag = np.zeros_like(num)
        mag[nz] = f.exp_np[(f.log_np[num[nz]] - f.log_np[den[nz]]) % (f.order - 1)]
        word[pos] = f.add_vec(word[pos], mag)
        if any(self.syndromes(word)):
            return RSResult(None, n_err, len(eras), "residual syndrome after correction")
        return RSResult(word[: self.K].copy(), n_err, len(eras))


def _poly_sub(f, a, b):
    n = max(len(a), len(b))
    a = a + [0] * (n - len(a))
    b = b + [0] * (n - len(b))
    return [f.sub(x, y) for x, y in zip(a, b)]


def _poly_eval_vec(f, coeffs, xs):
    acc = np.zeros_like(xs)
    for c in reversed(coeffs):
        acc = f.add_vec(f.mul_vec(acc, xs), c)
    return acc


def _massey(f, S, gamma, n_eras, nsym):
    lam, B, L = list(gamma), list(gamma), n_eras
    for r in range(n_eras + 1, nsym + 1):
        delta = 0
        for j in range(min(len(lam), r)):
            delta = f.add(delta, f.mul(lam[j], S[r - 1 - j]))
        xB = [0] + B
        if delta == 0:
            B = xB
            continue
        T = _poly_sub(f, lam, [f.mul(delta, c) for c in xB])
        if 2 * L <= r - 1 + n_eras:
            dinv = f.inv(delta)
            B = [f.mul(dinv, c) for c in lam]
            L = r - L + n_eras
        else:
            B = xB
        lam = T
    return lam, L


def _massey_binary(f, S, gamma, n_eras, nsym):
    """Same recursion with inlined table lookups for characteristic 2."""
    exp, log = f.exp_table, f.log_table
    period = f.order - 1
    lam, B, L = list(gamma), list(gamma), n_eras
    for r in range(n_eras + 1, nsym + 1):
        delta = 0
        for j in range(min(len(lam), r)):
            a, b = lam[j], S[r - 1 - j]
            if a and b:
                delta ^= exp[log[a] + log[b]]
        xB = [0] + B
        if delta == 0:
            B = xB
            continue
        ld = log[delta]
        T = lam + [0] * (len(xB) - len(lam)) if len(xB) > len(lam) else list(lam)
        for i, c in enumerate(xB):
            if c:
                T[i] ^= exp[ld + log[c]]
        if 2 * L <= r - 1 + n_eras:
            li = period - ld
            B = [exp[li + log[c]] if c else 0 for c in lam]
            L = r - L + n_eras
        else:
            B = xB
        lam = T
    return lam, L
