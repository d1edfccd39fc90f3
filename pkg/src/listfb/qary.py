"""q-ary information measures used by the planner and the codecs.

All logarithms are taken base q unless a name says otherwise, so rates and
entropies count q-ary symbols.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

# Integer c in the stage-length slack eps_s = c * log_q(l) / l. It is the
# smallest c for which digits_needed(pattern_count(l, ceil(l*p), q), q) <= ceil(l*(H(p) + eps_s))
# over the grids checked in tests/test_qary.py.
SLACK_CONSTANT = 2

_BISECT_TOL = 1e-12
_BISECT_CAP = 200


def _check_q(q):
    if int(q) != q or q < 2:
        raise ValueError(f"alphabet size must be an integer >= 2, got {q}")


def entropy_q(p: float, q: int) -> float:
    """q-ary entropy H_q(p) in base-q units, with 0*log(0) taken as 0."""
    _check_q(q)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"entropy argument {p} outside [0, 1]")
    lq = math.log(q)
    h = p * math.log(q - 1) / lq if p > 0 else 0.0
    if 0.0 < p:
        h -= p * math.log(p) / lq
    if p < 1.0:
        h -= (1.0 - p) * math.log1p(-p) / lq
    return h


def capped_entropy_q(p: float, q: int) -> float:
    """Entropy on the increasing branch only: H_q(min(p, 1 - 1/q)).

    This is the exponent of the number of words of relative weight at most
    p, which is what stage lengths are made of.
    """
    return entropy_q(min(p, 1.0 - 1.0 / q), q)


def inv_entropy_q(y: float, q: int) -> float:
    """Unique p in [0, 1 - 1/q] with H_q(p) = y, found by bisection."""
    _check_q(q)
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"inverse entropy argument {y} outside [0, 1]")
    lo, hi = 0.0, 1.0 - 1.0 / q
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return hi
    for _ in range(_BISECT_CAP):
        mid = 0.5 * (lo + hi)
        if entropy_q(mid, q) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo < _BISECT_TOL:
            break
    return 0.5 * (lo + hi)


def _entropy_array(p: np.ndarray, q: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    inner = (p > 0) & (p < 1)
    pi = p[inner]
    out[inner] = (pi * math.log(q - 1) - pi * np.log(pi) - (1 - pi) * np.log1p(-pi)) / math.log(q)
    out[p == 1] = math.log(q - 1) / math.log(q)
    return out


def _inv_entropy_array(y: np.ndarray, q: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    lo = np.zeros_like(y)
    hi = np.full_like(y, 1.0 - 1.0 / q)
    for _ in range(_BISECT_CAP):
        mid = 0.5 * (lo + hi)
        below = _entropy_array(mid, q) < y
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) < _BISECT_TOL:
            break
    return 0.5 * (lo + hi)


def capacity_gap_lower_bound(gamma: float, q: int) -> float:
    """Pinsker-type floor gamma^2 / (2 ln q) on 1 - H_q(1 - 1/q - gamma)."""
    _check_q(q)
    if not 0.0 <= gamma <= 1.0 - 1.0 / q:
        raise ValueError(f"gamma={gamma} outside [0, 1 - 1/q]")
    return gamma * gamma / (2.0 * math.log(q))


def zyablov_objective(r, rho: float, eps_z: float, q: int):
    """r * (1 - rho / (H_q^{-1}(1 - r) - eps_z)), vectorized over r."""
    r = np.asarray(r, dtype=float)
    radius = _inv_entropy_array(1.0 - r, q) - eps_z
    return r * (1.0 - rho / radius)


@lru_cache(maxsize=65536)
def zyablov_rate(rho: float, eps_z: float, q: int) -> float:
    """Best concatenated-code rate for list-decoding radius rho.

    Maximizes the Zyablov objective over inner rates 0 < r < 1 - H_q(rho + eps_z).
    The search runs over the inner radius x = H_q^{-1}(1 - r) instead, where
    the objective reads (1 - H_q(x)) * (1 - rho / (x - eps_z)) and needs no
    inverse entropy: a 1000-point grid on (rho + eps_z, 1 - 1/q), then a
    golden-section refinement around the best grid point. ``rho = 0`` is
    accepted (the objective is then r itself).
    """
    _check_q(q)
    cap = 1.0 - 1.0 / q
    if rho < 0 or eps_z <= 0:
        raise ValueError(f"need rho >= 0 and eps_z > 0, got rho={rho}, eps_z={eps_z}")
    if rho + eps_z >= cap:
        raise ValueError(
            f"infeasible Zyablov parameters: rho + eps_z = {rho + eps_z} >= 1 - 1/q = {cap}"
        )
    x_lo = rho + eps_z
    grid = np.linspace(x_lo, cap, 1002)[1:-1]
    values = (1.0 - _entropy_array(grid, q)) * (1.0 - rho / (grid - eps_z))
    best = int(np.argmax(values))
    lo = grid[best - 1] if best > 0 else x_lo
    hi = grid[best + 1] if best + 1 < len(grid) else cap

    def f(x):
        return (1.0 - entropy_q(x, q)) * (1.0 - rho / (x - eps_z))

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(80):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
        if b - a < 1e-13:
            break
    return max(float(values[best]), fc, fd, 0.0)


def pattern_count(length: int, w_max: int, q: int) -> int:
    """Number of q-ary words of the given length with Hamming weight <= w_max."""
    _check_q(q)
    if not 0 <= w_max <= length:
        raise ValueError(f"need 0 <= w_max <= length, got w_max={w_max}, length={length}")
    return sum(math.comb(length, w) * (q - 1) ** w for w in range(w_max + 1))


def digits_needed(count: int, q: int) -> int:
    """Smallest L with q**L >= count, i.e. ceil(log_q(count)) computed exactly."""
    if count < 1:
        raise ValueError("count must be positive")
    length, cap = 0, 1
    while cap < count:
        cap *= q
        length += 1
    return length


def stage_slack(length: int, q: int, c: int = SLACK_CONSTANT) -> float:
    """eps_s = c * log_q(length) / length (zero for length <= 1)."""
    if length <= 1:
        return 0.0
    return c * math.log(length) / (math.log(q) * length)
