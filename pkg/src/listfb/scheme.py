"""Run parameters shared by the two feedback schemes, and the public
termination rule both parties evaluate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Optional

from listfb.channel import budget_total
from listfb.planner import (
    InfeasiblePlan,
    PlannerState,
    as_fraction,
    kappa_plan,
    lambda_tilde,
    termination_ready,
)
from listfb.qary import digits_needed, entropy_q
from listfb.swcodec import ChunkCodecParams, parity_from_formula
from listfb.termination import DEFAULT_LIST_CAP, TerminationCode, design_termination


@dataclass
class SchemeParams:
    q: int
    n: int
    rho: float
    eps: float
    gamma: float
    delta: Fraction
    stage_cap: Optional[int] = None
    denominator: Optional[float] = None
    kappa: Fraction = Fraction(1)
    eta: float = 0.5
    eps_t: float = 0.0
    toy: bool = True
    tc_seed: int = 0
    list_cap: int = DEFAULT_LIST_CAP
    # chunked Slepian-Wolf layer (minimal feedback)
    chunk_len: int = 16
    eps_h: float = 0.75
    eps_d: float = 0.0625
    eps_e: Optional[float] = None
    eps_T: Optional[float] = None
    eps_N: Optional[float] = None
    parity_fraction: Optional[float] = None
    min_parity: int = 0
    C_e: float = 10.0
    C_p: int = 2
    eps_p: float = 1.0
    hash_seed: int = 0
    perm_seed: int = 0
    issues: list = field(default_factory=list, compare=False)

    def __post_init__(self):
        self.delta = as_fraction(self.delta)
        self.kappa = as_fraction(self.kappa)
        if self.eps_e is None:
            self.eps_e = float(self.delta) / 2
        if self.eps_T is None:
            self.eps_T = math.sqrt(6 * math.log(self.chunk_len) / self.chunk_len)
        if self.eps_N is None:
            self.eps_N = 1.0 / self.chunk_len**3
        self.validate()

    # --- derived quantities ---------------------------------------------------
    @property
    def rate(self) -> float:
        return 1.0 - entropy_q(self.rho, self.q) - self.eps

    @property
    def message_length(self) -> int:
        return math.floor(self.n * self.rate)

    @property
    def budget(self) -> int:
        return budget_total(self.n, self.rho)

    @property
    def lam(self) -> int:
        if self.stage_cap is not None:
            return self.stage_cap
        return lambda_tilde(self.eps, self.gamma, self.q, self.denominator)

    @property
    def block_len(self) -> int:
        return math.ceil(self.n * self.kappa)

    @property
    def grid(self) -> list:
        steps = round(1 / self.delta)
        return [self.delta * k for k in range(steps + 1)]

    @property
    def sample_size(self) -> int:
        """|T| = ceil(C_e log_q(block length))."""
        return math.ceil(self.C_e * math.log(self.block_len) / math.log(self.q) - 1e-9)

    @property
    def selector_len(self) -> int:
        """|F_c| = ceil(C_p log_q n): enough digits to name any of n**C_p permutations."""
        return digits_needed(self.n**self.C_p, self.q)

    @property
    def seed_symbols(self) -> int:
        """|F_d|: one seed of floor(sqrt(chunk_len)) symbols per chunk of an n-symbol stage."""
        return -(-self.n // self.chunk_len) * math.isqrt(self.chunk_len)

    def parity_for(self, K: int) -> int:
        if self.parity_fraction is not None:
            return max(self.min_parity, math.ceil(self.parity_fraction * K))
        parity = parity_from_formula(K, self.chunk_len, self.eps_N, self.q)
        if parity is None:
            raise InfeasiblePlan("K' formula has a non-positive denominator; set parity_fraction")
        return max(self.min_parity, parity)

    def codec_for(self, N: int) -> ChunkCodecParams:
        K = -(-N // self.chunk_len)
        return ChunkCodecParams(self.chunk_len, self.q, self.eps_h, self.eps_d, self.parity_for(K),
                                eps_e=self.eps_e, eps_t=self.eps_T, eps_n=self.eps_N,
                                adversarial=True, strict=not self.toy)

    # --- validation --------------------------------------------------------------
    def validate(self) -> None:
        issues = []
        q = self.q
        if q < 2:
            raise ValueError("q must be >= 2")
        if self.rate <= 0:
            raise ValueError(f"rate 1 - H(rho) - eps = {self.rate} is not positive")
        if not self.rho < 1 - 1 / q - self.gamma:
            raise ValueError("need rho < 1 - 1/q - gamma")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.delta <= 0 or self.delta > 1 or self.delta.numerator != 1:
            raise ValueError("delta must be 1/k for a positive integer k")
        if not 0 < self.kappa <= 1:
            raise ValueError("kappa must lie in (0, 1]")
        if not self.C_p > self.eps_p > self.eta > 0:
            raise ValueError("need C_p > eps_p > eta > 0")
        if self.lam < 1:
            raise ValueError("stage cap must be >= 1")
        if not 0 < self.eps < 1:
            raise ValueError(f"eps = {self.eps} must lie in (0, 1)")
        for name in ("eps_h", "eps_d", "eps_e"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} = {v} must lie in (0, 1]")
        if self.chunk_len < 2:
            raise ValueError("chunk_len must be >= 2")
        if self.parity_fraction is not None and not 0 < self.parity_fraction < 1:
            raise ValueError(f"parity_fraction = {self.parity_fraction} must lie in (0, 1)")
        if self.C_e <= 0 or self.list_cap < 1 or self.min_parity < 0:
            raise ValueError("need C_e > 0, list_cap >= 1 and min_parity >= 0")
        if not self.toy:
            if abs(self.eps_d - 2 * float(self.delta)) > 1e-12:
                raise ValueError("strict mode needs eps_d = 2 delta")
            if abs(self.eps_e - float(self.delta) / 2) > 1e-12:
                raise ValueError("strict mode needs eps_e = delta / 2")
            if abs(self.eps_h - 2 * self.eps_d) > 1e-12:
                raise ValueError("strict mode needs eps_h = 2 eps_d")
        else:
            if abs(self.eps_d - 2 * float(self.delta)) > 1e-12:
                issues.append("eps_d != 2 delta (toy)")
            if abs(self.eps_h - 2 * self.eps_d) > 1e-12:
                issues.append("eps_h != 2 eps_d (toy)")
            if self.eps_d + 1e-12 < self.eps_T + self.eps_e + 2 / self.chunk_len:
                issues.append("eps_d < eps_T + eps_e + 2/chunk_len (toy)")
        try:
            rec = kappa_plan(self.eps, self.gamma, q, self.denominator)
            if not all(rec.checks.values()):
                issues.append("kappa plan checks fail")
        except (ValueError, ArithmeticError) as exc:
            if not self.toy:
                raise
            issues.append(f"kappa plan infeasible: {exc}")
        self.issues = issues

    # --- serialization --------------------------------------------------------------
    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            if f.name == "issues":
                continue
            v = getattr(self, f.name)
            d[f.name] = str(v) if isinstance(v, Fraction) else v
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SchemeParams":
        known = {f.name for f in fields(cls)} - {"issues"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown scheme parameters: {sorted(unknown)}")
        kw = dict(d)
        for key in ("delta", "kappa"):
            if key in kw and isinstance(kw[key], str):
                kw[key] = Fraction(kw[key])
        return cls(**kw)


# --- public termination rule ---------------------------------------------------------


def min_spend(count: int, p_hat: Fraction, delta: Fraction) -> int:
    """Fewest errors consistent with a grid value p_hat over ``count`` observed positions.

    p_hat = ceil(p / delta) * delta > 0 forces p > p_hat - delta.
    """
    if p_hat == 0:
        return 0
    return math.floor((p_hat - delta) * count) + 1


@dataclass(frozen=True)
class TerminationDecision:
    ready: bool
    forced: bool
    design: Optional[object]
    reason: str


def termination_decision(params: SchemeParams, ell: int, n_rem: int, remaining_bound: int,
                         raw_stages: int, next_raw_len: Optional[int] = None) -> TerminationDecision:
    """Whether a residual of ``ell`` symbols goes into the termination code now.

    Depends only on public quantities, so the receiver can replay it for
    every guess. Ready means the residual rate is under the Zyablov rate
    for the pessimistic remaining budget and the concrete code certifies a
    radius at least that budget. Termination is forced at the stage cap or
    when another raw stage would not fit.
    """
    if ell == 0:
        return TerminationDecision(True, False, design_termination(params.q, 0, n_rem, 0, params.tc_seed,
                                                                    params.list_cap), "empty")
    if n_rem <= 0:
        return TerminationDecision(True, True, None, "no room")
    remaining_bound = max(0, remaining_bound)
    state = PlannerState(n=Fraction(n_rem), ell=Fraction(ell), rate=Fraction(ell, n_rem),
                         rho=Fraction(remaining_bound, n_rem), q=params.q)
    if termination_ready(state, params.gamma):
        design = design_termination(params.q, ell, n_rem, remaining_bound, params.tc_seed, params.list_cap)
        if design is not None and design.radius >= remaining_bound:
            return TerminationDecision(True, False, design, "zyablov")
    raw_len = ell if next_raw_len is None else next_raw_len
    if raw_stages >= params.lam or raw_len >= n_rem:
        design = design_termination(params.q, ell, n_rem, remaining_bound, params.tc_seed, params.list_cap)
        return TerminationDecision(True, True, design, "stage-cap" if raw_stages >= params.lam else "no room")
    return TerminationDecision(False, False, None, "continue")


def build_termination(decision: TerminationDecision) -> Optional[TerminationCode]:
    return TerminationCode(decision.design) if decision.design is not None else None
