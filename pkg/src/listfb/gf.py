"""Finite fields GF(p^m) with exp/log tables.

Elements are integers in [0, p^m). The integer's base-p digits are the
coefficients of the element as a polynomial in the primitive root alpha,
lowest degree first.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# Primitive polynomials over GF(2), bit i = coefficient of x^i.
_BINARY_PRIMITIVE = {
    1: 0x3, 2: 0x7, 3: 0xB, 4: 0x13, 5: 0x25, 6: 0x43, 7: 0x89, 8: 0x11D,
    9: 0x211, 10: 0x409, 11: 0x805, 12: 0x1053, 13: 0x201B, 14: 0x4443,
    15: 0x8003, 16: 0x1100B, 17: 0x20009, 18: 0x40081, 19: 0x80027,
    20: 0x100009, 21: 0x200005, 22: 0x400003,
}

MAX_TABLE_ORDER = 1 << 22


def _is_prime(p):
    return p >= 2 and all(p % d for d in range(2, int(p**0.5) + 1))


def prime_power(q: int):
    """(p, m) with q = p**m, or ValueError if q is not a prime power."""
    for p in range(2, q + 1):
        if q % p == 0:
            if not _is_prime(p):
                break
            m, rest = 0, q
            while rest % p == 0:
                rest //= p
                m += 1
            if rest == 1:
                return p, m
            break
    raise ValueError(f"{q} is not a prime power")


def _digits(x, p, m):
    out = []
    for _ in range(m):
        out.append(x % p)
        x //= p
    return out


def _undigits(ds, p):
    x = 0
    for d in reversed(ds):
        x = x * p + d
    return x


class GaloisField:
    """GF(p^m) with multiplication through exp/log tables."""

    def __init__(self, p: int, m: int, poly=None):
        if not _is_prime(p):
            raise ValueError(f"characteristic {p} is not prime")
        if m < 1:
            raise ValueError("degree must be >= 1")
        self.p, self.m = p, m
        self.order = p**m
        if self.order > MAX_TABLE_ORDER:
            raise ValueError(f"GF({p}^{m}) is too large for table arithmetic")
        self.poly = self._pick_poly() if poly is None else list(poly)
        self._build_tables()

    def __repr__(self):
        return f"GaloisField(p={self.p}, m={self.m}, poly={self.poly})"

    def descriptor(self) -> dict:
        return {"p": self.p, "m": self.m, "poly": list(self.poly)}

    # --- construction -----------------------------------------------------
    def _pick_poly(self):
        p, m = self.p, self.m
        if p == 2 and m in _BINARY_PRIMITIVE:
            code = _BINARY_PRIMITIVE[m]
            return [(code >> i) & 1 for i in range(m + 1)]
        # monic polynomials in increasing order of their low coefficients
        for low in range(1, p**m):
            cand = _digits(low, p, m) + [1]
            if cand[0] == 0:
                continue
            if self._cycle_length(cand) == self.order - 1:
                return cand
        raise ValueError(f"no primitive polynomial found for GF({p}^{m})")

    def _times_alpha(self, x, poly):
        p, m = self.p, self.m
        if p == 2:
            x <<= 1
            if x >> m:
                x ^= _undigits(poly, 2)
            return x
        ds = [0] + _digits(x, p, m)
        lead = ds.pop()
        if lead:
            ds = [(d - lead * c) % p for d, c in zip(ds, poly[:m])]
        return _undigits(ds, p)

    def _cycle_length(self, poly):
        x, k = 1, 0
        while True:
            x = self._times_alpha(x, poly)
            k += 1
            if x == 1 or x == 0 or k > self.order:
                return k if x == 1 else -1

    def _build_tables(self):
        n = self.order - 1
        exp = [0] * (2 * n)
        log = [0] * self.order
        x = 1
        for i in range(n):
            exp[i] = x
            if i and x == 1:
                raise ValueError(f"polynomial {self.poly} is not primitive")
            log[x] = i
            x = self._times_alpha(x, self.poly)
        if x != 1:
            raise ValueError(f"polynomial {self.poly} is not primitive")
        exp[n:] = exp[:n]
        self.exp_table, self.log_table = exp, log
        self.exp_np = np.array(exp, dtype=np.int64)
        self.log_np = np.array(log, dtype=np.int64)

    # --- scalar arithmetic ------------------------------------------------
    def add(self, a: int, b: int) -> int:
        if self.p == 2:
            return a ^ b
        p = self.p
        out, place = 0, 1
        while a or b:
            out += ((a % p + b % p) % p) * place
            a //= p
            b //= p
            place *= p
        return out

    def neg(self, a: int) -> int:
        if self.p == 2:
            return a
        p = self.p
        out, place = 0, 1
        while a:
            out += ((-(a % p)) % p) * place
            a //= p
            place *= p
        return out

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self.exp_table[self.log_table[a] + self.log_table[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no inverse")
        return self.exp_table[(self.order - 1 - self.log_table[a]) % (self.order - 1)]

    def div(self, a: int, b: int) -> int:
        if b == 0:
            raise ZeroDivisionError("division by zero")
        if a == 0:
            return 0
        return self.exp_table[(self.log_table[a] - self.log_table[b]) % (self.order - 1)]

    def pow(self, a: int, k: int) -> int:
        if a == 0:
            return 0 if k > 0 else 1
        return self.exp_table[(self.log_table[a] * k) % (self.order - 1)]

    def alpha_pow(self, k: int) -> int:
        return self.exp_table[k % (self.order - 1)]

    def scale(self, a: int, k: int) -> int:
        """The integer multiple k*a (repeated addition)."""
        k %= self.p
        if k == 0 or a == 0:
            return 0
        if self.p == 2:
            return a
        p = self.p
        out, place = 0, 1
        while a:
            out += ((a % p) * k % p) * place
            a //= p
            place *= p
        return out

    # --- vector arithmetic ------------------------------------------------
    def add_vec(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.p == 2:
            return a ^ b
        p = self.p
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        place = 1
        for _ in range(self.m):
            out += ((a // place % p + b // place % p) % p) * place
            place *= p
        return out

    def neg_vec(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if self.p == 2:
            return a
        p = self.p
        out = np.zeros_like(a)
        place = 1
        for _ in range(self.m):
            out += ((-(a // place % p)) % p) * place
            place *= p
        return out

    def sub_vec(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.add_vec(a, self.neg_vec(b))

    def sum_vec(self, a: np.ndarray, axis=-1) -> np.ndarray:
        """Field sum along an axis."""
        a = np.asarray(a, dtype=np.int64)
        if self.p == 2:
            return np.bitwise_xor.reduce(a, axis=axis)
        p = self.p
        out = 0
        place = 1
        for _ in range(self.m):
            out = out + (np.sum(a // place % p, axis=axis) % p) * place
            place *= p
        return np.asarray(out, dtype=np.int64)

    def mul_vec(self, a: np.ndarray, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        prod = self.exp_np[self.log_np[a] + self.log_np[b]]
        return np.where((a == 0) | (b == 0), 0, prod)

    def mul_alpha_pow_vec(self, a: np.ndarray, k: np.ndarray) -> np.ndarray:
        """a * alpha**k elementwise (k may be any integers)."""
        a = np.asarray(a, dtype=np.int64)
        idx = (self.log_np[a] + np.asarray(k, dtype=np.int64)) % (self.order - 1)
        return np.where(a == 0, 0, self.exp_np[idx])


@lru_cache(maxsize=32)
def get_field(order: int) -> GaloisField:
    """Shared field instance for a prime-power order."""
    p, m = prime_power(order)
    return GaloisField(p, m)
