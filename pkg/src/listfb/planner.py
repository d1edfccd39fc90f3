"""Residual rate/budget recursion for multi-stage feedback schemes.

Lengths, rates and budgets are exact ``Fraction`` values so that budget
conservation can be checked with equality. Entropies are floats converted
exactly to fractions before they enter the recursion.
"""

from __future__ import annotations

import math
from decimal import Context, Decimal, localcontext
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from listfb.qary import capped_entropy_q, inv_entropy_q, zyablov_rate


class BudgetViolation(ValueError):
    """A stage asked the adversary to spend more than its residual budget."""


class StageOverflow(ValueError):
    """A padded stage would consume the whole residual block."""


class InfeasiblePlan(ValueError):
    """No parameter choice satisfies the requested inequalities."""


def as_fraction(x) -> Fraction:
    """Exact rational from int/Fraction, or from a float via its shortest repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def entropy_fraction(p: Fraction, q: int) -> Fraction:
    """The float entropy of p, as an exact fraction (rounding slop ~1e-16)."""
    return Fraction(capped_entropy_q(float(p), q))


@dataclass(frozen=True)
class PlannerState:
    """Residual block length, stage length, rate and budget before a stage."""

    n: Fraction
    ell: Fraction
    rate: Fraction
    rho: Fraction
    q: int

    @property
    def gap(self) -> float:
        return 1.0 - capped_entropy_q(float(self.rho), self.q) - float(self.rate)

    @classmethod
    def start(cls, n, rate, rho, q: int) -> "PlannerState":
        n, rate, rho = as_fraction(n), as_fraction(rate), as_fraction(rho)
        if n <= 0 or not 0 <= rate <= 1 or not 0 <= rho <= 1 - Fraction(1, q):
            raise ValueError(f"invalid start state n={n}, rate={rate}, rho={rho}, q={q}")
        return cls(n=n, ell=rate * n, rate=rate, rho=rho, q=q)


def _check_step(state: PlannerState, p: Fraction, rate: Fraction):
    if not 0 <= p <= 1:
        raise ValueError(f"stage error fraction {p} outside [0, 1]")
    if rate >= 1:
        raise ValueError("residual rate must be < 1 to take a step")
    if rate * p > state.rho:
        raise BudgetViolation(f"stage spend {rate * p} exceeds residual budget {state.rho}")


def step_clean(state: PlannerState, p) -> PlannerState:
    """One stage with exact knowledge of the stage error fraction p."""
    p = as_fraction(p)
    R = state.rate
    _check_step(state, p, R)
    n_next = state.n - state.ell
    r_next = R * entropy_fraction(p, state.q) / (1 - R)
    rho_next = (state.rho - R * p) / (1 - R)
    return PlannerState(n=n_next, ell=r_next * n_next, rate=r_next, rho=rho_next, q=state.q)


def round_up_to_grid(p, delta) -> Fraction:
    """Smallest multiple of delta that is >= p, capped at 1."""
    p, delta = as_fraction(p), as_fraction(delta)
    if delta <= 0:
        raise ValueError("grid step must be positive")
    return min(Fraction(1), math.ceil(p / delta) * delta)


def step_delta(state: PlannerState, p, delta) -> PlannerState:
    """Like step_clean, but the next length uses p rounded up to the delta grid."""
    p = as_fraction(p)
    p_hat = round_up_to_grid(p, delta)
    R = state.rate
    _check_step(state, p, R)
    n_next = state.n - state.ell
    r_next = R * entropy_fraction(p_hat, state.q) / (1 - R)
    rho_next = (state.rho - R * p) / (1 - R)
    return PlannerState(n=n_next, ell=r_next * n_next, rate=r_next, rho=rho_next, q=state.q)


def padded_length(ell, block) -> Fraction:
    """ell rounded up to a multiple of the block length."""
    ell, block = as_fraction(ell), as_fraction(block)
    return math.ceil(ell / block) * block


def step_kappa(state: PlannerState, p, kappa, n, eps_t) -> PlannerState:
    """Stage padded to a multiple of n*kappa; p is the error fraction of the padded stage."""
    p, kappa, n, eps_t = (as_fraction(v) for v in (p, kappa, n, eps_t))
    ell_hat = padded_length(state.ell, n * kappa)
    if ell_hat >= state.n:
        raise StageOverflow(f"padded stage {ell_hat} does not fit in residual {state.n}")
    r_hat = ell_hat / state.n
    _check_step(state, p, r_hat)
    n_next = state.n - ell_hat
    ell_next = ell_hat * (entropy_fraction(p, state.q) + eps_t)
    rho_next = (state.rho - r_hat * p) / (1 - r_hat)
    return PlannerState(n=n_next, ell=ell_next, rate=ell_next / n_next, rho=rho_next, q=state.q)


def lambda_tilde(eps: float, gamma: float, q: int, denominator: Optional[float] = None) -> int:
    """Stage count ceil(ln(eps)/ln(1 - gamma^3/D) + 1), with D = 64 ln q by default.

    ``denominator`` replaces 64 ln q (toy-constants mode).
    """
    if not 0 < eps <= 1:
        raise ValueError(f"eps={eps} outside (0, 1]")
    if gamma <= 0:
        raise ValueError(f"gamma={gamma} must be positive")
    d = 64.0 * math.log(q) if denominator is None else float(denominator)
    floor_rate = gamma**3 / d
    if not 0 < floor_rate < 1:
        raise ValueError(f"rate floor gamma^3/D = {floor_rate} outside (0, 1)")
    if eps == 1:
        return 1
    return math.ceil(math.log(eps) / math.log1p(-floor_rate) + 1)


def gamma_floor(eps: float, q: int) -> float:
    """sqrt(2 ln(q) eps): budgets below 1 - 1/q - gamma leave capacity >= eps."""
    if not 0 < eps < 1:
        raise ValueError(f"eps={eps} outside (0, 1)")
    return math.sqrt(2.0 * math.log(q) * eps)


def delta_choice(eps: float, lam: int, q: int) -> Fraction:
    """Coarsest grid step 1/k with (lam - 1) * H_q(1/k) <= eps / 2."""
    if lam < 2:
        raise ValueError("delta is only constrained for at least two stages")
    if not 0 < eps <= 1:
        raise ValueError(f"eps={eps} outside (0, 1]")
    target = inv_entropy_q(eps / (2 * (lam - 1)), q)
    k = max(1, math.ceil(1.0 / target))
    while (lam - 1) * capped_entropy_q(1.0 / k, q) > eps / 2:
        k += 1
    return Fraction(1, k)


@dataclass
class KappaPlanRecord:
    """Block-size plan for the minimal-feedback scheme.

    Quantities such as kappa = M * b**lam underflow a float for realistic
    lam, so everything here is a ``Decimal``.
    """

    eps: Decimal
    lam: int
    u_min: Decimal
    eps_t: Decimal
    b: Decimal
    M: Decimal
    kappa: Decimal
    c_min: Decimal
    A: Decimal
    R_gamma: Decimal
    S_lambda: Decimal
    u: list = field(default_factory=list)
    c: list = field(default_factory=list)
    beta: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)


_DEC = Context(prec=60, Emin=-10**9, Emax=10**9)


def kappa_plan(eps: float, gamma: float, q: int, denominator: Optional[float] = None) -> KappaPlanRecord:
    """Choose kappa = M * b**lam and verify the inequalities it must satisfy."""
    lam = lambda_tilde(eps, gamma, q, denominator)
    with localcontext(_DEC):
        d = Decimal(64) * Decimal(q).ln() if denominator is None else Decimal(repr(float(denominator)))
        e = Decimal(repr(float(eps)))
        u_min, eps_t = e / 16, e / 32
        b = u_min + eps_t
        r_gamma = Decimal(repr(float(gamma))) ** 3 / d
        A = 1 / (1 - r_gamma)
        S = sum((A ** (lam - 1 - j) for j in range(1, lam)), Decimal(0))
        u1 = e - eps_t
        M = Decimal(1) / 16
        if S > 0:
            M = min(M, (A ** (lam - 1) * u1 - u_min) / (2 * b * S))
        if M <= 0:
            raise InfeasiblePlan(f"no admissible M at eps={eps}, gamma={gamma}: unrolled u-bound is {M}")
        kappa = M * b**lam
        c_min = b ** (lam - 1) / 2
        rec = KappaPlanRecord(e, lam, u_min, eps_t, b, M, kappa, c_min, A, r_gamma, S)

        # lower-bound recursion started from u_1 = eps - eps_t, c_1 = 1
        u, c = u1, Decimal(1)
        for _ in range(lam):
            rec.u.append(u)
            rec.c.append(c)
            rec.beta.append(kappa / (c * u))
            u, c = A * (u - kappa / c), c * (u + eps_t) - kappa

        rec.checks = {
            "kappa_le_half_b_pow": kappa <= b ** (lam - 1) / 2,
            "kappa_over_cmin_le_2Mb": kappa / c_min <= 2 * M * b * (1 + Decimal("1e-40")),
            "kappa_over_cmin_le_half_umin": kappa / c_min <= u_min / 2,
            "kappa_from_u": S == 0 or kappa <= c_min / S * (A ** (lam - 1) * u1 - u_min),
            "beta_pessimistic_le_half": kappa / (c_min * u_min) <= Decimal("0.5"),
            "beta_trajectory_le_half": all(x <= Decimal("0.5") for x in rec.beta),
            "M_le_1_16": M <= Decimal(1) / 16,
        }
    return rec


@dataclass(frozen=True)
class PlannerParams:
    """Inputs of a trajectory simulation."""

    q: int
    n: Fraction
    rate: Fraction
    rho: Fraction
    gamma: float
    stage_cap: int
    delta: Optional[Fraction] = None
    kappa: Optional[Fraction] = None
    eps_t: Fraction = Fraction(0)


@dataclass
class StageRecord:
    index: int
    state: PlannerState
    p: Optional[Fraction] = None
    p_hat: Optional[Fraction] = None
    ell_hat: Optional[Fraction] = None


@dataclass
class GapTrajectory:
    stages: list
    terminated_at: Optional[int]
    termination_reason: str

    @property
    def transmitted(self) -> Fraction:
        return sum((s.ell_hat for s in self.stages if s.ell_hat is not None), Fraction(0))


def termination_ready(state: PlannerState, gamma: float) -> bool:
    """R_i <= R_Z(rho_i) with eps_Z = gamma/4 (always true once nothing is left)."""
    if state.rate == 0:
        return True
    eps_z = gamma / 4
    if float(state.rho) + eps_z >= 1 - 1 / state.q:
        return False
    return float(state.rate) <= zyablov_rate(float(state.rho), eps_z, state.q)


def simulate_trajectory(params: PlannerParams, p_sequence: Sequence, mode: str = "clean") -> GapTrajectory:
    """Run the recursion until the Zyablov trigger fires or the stage cap is hit.

    Stages beyond the end of ``p_sequence`` are played with p = 0.
    """
    if mode not in ("clean", "delta", "kappa"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "delta" and params.delta is None:
        raise ValueError("delta mode needs params.delta")
    if mode == "kappa" and params.kappa is None:
        raise ValueError("kappa mode needs params.kappa")
    state = PlannerState.start(params.n, params.rate, params.rho, params.q)
    stages = []
    ps = [as_fraction(p) for p in p_sequence]
    for i in range(1, params.stage_cap + 1):
        rec = StageRecord(index=i, state=state)
        stages.append(rec)
        if termination_ready(state, params.gamma):
            reason = "budget-exhausted" if state.rho == 0 and state.rate > 0 else "zyablov"
            return GapTrajectory(stages, i, reason)
        if i == params.stage_cap:
            break
        p = ps[i - 1] if i - 1 < len(ps) else Fraction(0)
        rec.p = p
        if mode == "clean":
            rec.p_hat, rec.ell_hat = p, state.ell
            state = step_clean(state, p)
        elif mode == "delta":
            rec.p_hat, rec.ell_hat = round_up_to_grid(p, params.delta), state.ell
            state = step_delta(state, p, params.delta)
        else:
            rec.p_hat = p
            rec.ell_hat = padded_length(state.ell, params.n * params.kappa)
            state = step_kappa(state, p, params.kappa, params.n, params.eps_t)
    return GapTrajectory(stages, None, "stage-cap")


def grid_sequences(
    params: PlannerParams, grid: Iterable, max_len: int, mode: str = "clean"
) -> Iterable[tuple]:
    """All budget-feasible sequences of grid fractions up to max_len stages.

    Sequences are extended only while the trajectory has not terminated, so
    each yielded sequence ends at a terminated or capped trajectory.
    """
    grid = [as_fraction(g) for g in grid]
    start = PlannerState.start(params.n, params.rate, params.rho, params.q)

    def advance(state, p):
        if mode == "clean":
            return step_clean(state, p)
        if mode == "delta":
            return step_delta(state, p, params.delta)
        return step_kappa(state, p, params.kappa, params.n, params.eps_t)

    def walk(state, prefix):
        if termination_ready(state, params.gamma) or len(prefix) >= max_len:
            yield tuple(prefix)
            return
        for p in grid:
            spend = state.rate if mode != "kappa" else padded_length(state.ell, params.n * params.kappa) / state.n
            if spend * p > state.rho:
                continue
            try:
                nxt = advance(state, p)
            except StageOverflow:
                yield tuple(prefix + [p])
                continue
            yield from walk(nxt, prefix + [p])

    yield from walk(start, [])
