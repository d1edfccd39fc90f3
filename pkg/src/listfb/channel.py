"""The q-ary adversarial channel with public noiseless feedback.

Symbols are integers in [0, q) held in int64 numpy arrays; y = x + s mod q.
The adversary only ever sees the prefix of x sent so far, the feedback
issued so far and public stage information, which Bob and James can both
reconstruct from feedback in every scheme here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from listfb.planner import as_fraction
from listfb.qary import digits_needed
from listfb.rng import derive_rng


def as_word(symbols, q: int) -> np.ndarray:
    """Validate and copy a sequence of q-ary symbols."""
    word = np.array(symbols, dtype=np.int64).reshape(-1)
    if q < 2:
        raise ValueError("alphabet size must be >= 2")
    if word.size and (word.min() < 0 or word.max() >= q):
        raise ValueError(f"symbols must lie in [0, {q})")
    return word


def budget_total(n: int, rho) -> int:
    """floor(n * rho), computed exactly."""
    return math.floor(as_fraction(rho) * n)


@dataclass
class AdversaryBudget:
    total: int
    spent: int = 0

    @property
    def remaining(self) -> int:
        return self.total - self.spent

    def charge(self, k: int) -> None:
        if k > self.remaining:
            raise AssertionError("budget overrun")
        self.spent += k


@dataclass(frozen=True)
class StageInfo:
    """Public description of a stage about to be transmitted."""

    index: int
    start: int
    length: int
    kind: str = "raw"


@dataclass
class FeedbackPacket:
    """Bob's feedback at the end of one block (sampling, permutation and seed words)."""

    block_index: int
    T: np.ndarray
    F_b: np.ndarray
    F_c: np.ndarray
    F_d: np.ndarray
    block_len: int
    q: int

    def __post_init__(self):
        if len(self.T) != len(self.F_b):
            raise ValueError("sample values must match sample indices")
        if len(self.T) and (np.min(self.T) < 0 or np.max(self.T) >= self.block_len):
            raise ValueError("sample index out of range")

    def index_digits(self) -> int:
        return digits_needed(self.block_len, self.q)

    def symbol_count(self) -> int:
        return len(self.T) * self.index_digits() + len(self.F_b) + len(self.F_c) + len(self.F_d)


# --- adversaries ------------------------------------------------------------


class Adversary:
    """Base class. Oblivious strategies fill whole segments through ``plan``;
    causal ones (``oblivious = False``) answer one symbol at a time."""

    name = "adversary"
    oblivious = True

    def reset(self, n: int, q: int, total: int, rng: np.random.Generator, message=None) -> None:
        self.n, self.q, self.total, self.rng = n, q, total, rng
        self.message = message

    def begin_stage(self, info: StageInfo) -> None:
        pass

    def observe_feedback(self, packet: FeedbackPacket) -> None:
        pass

    def plan(self, start: int, stop: int) -> np.ndarray:
        return np.zeros(stop - start, dtype=np.int64)

    def choose(self, i: int, prefix: np.ndarray) -> int:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"name": self.name}


def _random_nonzero(rng, q, size):
    return rng.integers(1, q, size=size) if q > 2 else np.ones(size, dtype=np.int64)


class NullAdversary(Adversary):
    name = "null"


class UniformIID(Adversary):
    """Corrupts each symbol independently with probability p."""

    name = "uniform_iid"

    def __init__(self, p: float):
        if not 0 <= p <= 1:
            raise ValueError("p must be in [0, 1]")
        self.p = p

    def plan(self, start, stop):
        m = stop - start
        hit = self.rng.random(m) < self.p
        return np.where(hit, _random_nonzero(self.rng, self.q, m), 0)

    def describe(self):
        return {"name": self.name, "p": self.p}


class BurstFront(Adversary):
    """Spends the whole budget on the earliest symbols."""

    name = "burst_front"

    def plan(self, start, stop):
        pos = np.arange(start, stop)
        return np.where(pos < self.total, _random_nonzero(self.rng, self.q, stop - start), 0)


class _StagePlanned(Adversary):
    """Shared machinery for strategies that pick error positions per stage."""

    def reset(self, n, q, total, rng, message=None):
        super().reset(n, q, total, rng, message)
        self._planned = np.zeros(n, dtype=np.int64)
        self._used = 0

    def _place(self, info: StageInfo, count: int) -> None:
        count = max(0, min(count, info.length, self.total - self._used))
        if count:
            where = info.start + self.rng.choice(info.length, size=count, replace=False)
            self._planned[where] = _random_nonzero(self.rng, self.q, count)
            self._used += count

    def plan(self, start, stop):
        return self._planned[start:stop].copy()


class StageGreedy(_StagePlanned):
    """Puts a fixed fraction of what is left into every stage, everything into the last."""

    name = "stage_greedy"

    def __init__(self, fraction: float = 0.5):
        if not 0 < fraction <= 1:
            raise ValueError("fraction must be in (0, 1]")
        self.fraction = fraction

    def begin_stage(self, info):
        left = self.total - self._used
        count = left if info.kind == "termination" else math.ceil(self.fraction * left)
        self._place(info, count)

    def describe(self):
        return {"name": self.name, "fraction": self.fraction}


class GridExtremal(_StagePlanned):
    """Corrupts round(p_i * l_i) symbols of stage i, following a given sequence."""

    name = "grid_extremal"

    def __init__(self, p_sequence, termination_errors: int = 0):
        self.p_sequence = [as_fraction(p) for p in p_sequence]
        self.termination_errors = termination_errors

    def begin_stage(self, info):
        if info.kind == "termination":
            self._place(info, self.termination_errors)
        elif info.index < len(self.p_sequence):
            self._place(info, round(self.p_sequence[info.index] * info.length))

    def describe(self):
        return {"name": self.name, "p_sequence": [str(p) for p in self.p_sequence]}


class TargetedSymbol(Adversary):
    """Causal: corrupts a symbol with probability p when it equals ``target``."""

    name = "targeted_symbol"
    oblivious = False

    def __init__(self, target: int = 0, p: float = 1.0):
        self.target, self.p = target, p

    def choose(self, i, prefix):
        if prefix[-1] == self.target and self.rng.random() < self.p:
            return int(_random_nonzero(self.rng, self.q, 1)[0])
        return 0

    def describe(self):
        return {"name": self.name, "target": self.target, "p": self.p}


ADVERSARIES = {
    "null": NullAdversary,
    "uniform_iid": UniformIID,
    "burst_front": BurstFront,
    "stage_greedy": StageGreedy,
    "grid_extremal": GridExtremal,
    "targeted_symbol": TargetedSymbol,
}


def make_adversary(spec) -> Adversary:
    """Build a strategy from a name or a {"name": ..., **kwargs} mapping."""
    if isinstance(spec, Adversary):
        return spec
    if isinstance(spec, str):
        spec = {"name": spec}
    spec = dict(spec)
    name = spec.pop("name")
    if name not in ADVERSARIES:
        raise ValueError(f"unknown adversary {name!r}; choose from {sorted(ADVERSARIES)}")
    return ADVERSARIES[name](**spec)


# --- transcript and channel -------------------------------------------------


@dataclass
class Transcript:
    q: int
    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    budget_total: int
    feedback: list = field(default_factory=list)
    stage_boundaries: list = field(default_factory=list)
    adversary_name: str = ""
    prg_seeds: dict = field(default_factory=dict)
    clamp_log: list = field(default_factory=list)

    def check(self) -> None:
        if not np.array_equal(self.y, (self.x + self.s) % self.q):
            raise AssertionError("y != x + s")
        if np.count_nonzero(self.s) > self.budget_total:
            raise AssertionError("error weight exceeds the budget")

    def feedback_symbols(self) -> int:
        return sum(p.symbol_count() for p in self.feedback)

    def summary(self) -> dict:
        return {
            "q": self.q,
            "n": int(self.x.size),
            "error_weight": int(np.count_nonzero(self.s)),
            "budget_total": self.budget_total,
            "stages": self.stage_boundaries,
            "feedback_packets": len(self.feedback),
            "feedback_symbols": self.feedback_symbols(),
            "adversary": self.adversary_name,
            "prg_seeds": self.prg_seeds,
            "clamp_events": len(self.clamp_log),
        }

    def save(self, stem) -> None:
        """Write ``stem.npz`` (words) and ``stem.json`` (summary)."""
        stem = Path(stem)
        np.savez_compressed(stem.with_suffix(".npz"), x=self.x.astype(np.uint8 if self.q <= 256 else np.int64),
                            s=self.s.astype(np.uint8 if self.q <= 256 else np.int64))
        stem.with_suffix(".json").write_text(json.dumps(self.summary(), indent=2, default=str))


class Channel:
    """Stateful channel for one trial: tracks position, budget and transcript."""

    def __init__(self, n: int, q: int, rho, adversary: Adversary, rng: np.random.Generator,
                 message=None, omniscient: bool = False):
        self.n, self.q = n, q
        self.budget = AdversaryBudget(budget_total(n, rho))
        self.adversary = adversary
        adversary.reset(n, q, self.budget.total, rng, message if omniscient else None)
        self.x = np.zeros(n, dtype=np.int64)
        self.s = np.zeros(n, dtype=np.int64)
        self.pos = 0
        self.feedback: list = []
        self.stages: list = []
        self.clamp_log: list = []

    def begin_stage(self, index: int, length: int, kind: str = "raw") -> StageInfo:
        info = StageInfo(index, self.pos, length, kind)
        self.stages.append({"index": index, "start": self.pos, "end": self.pos + length, "kind": kind})
        self.adversary.begin_stage(info)
        return info

    def annotate_stage(self, **fields) -> None:
        self.stages[-1].update({k: str(v) if isinstance(v, Fraction) else v for k, v in fields.items()})

    def transmit(self, xs) -> np.ndarray:
        xs = as_word(xs, self.q)
        start, stop = self.pos, self.pos + xs.size
        if stop > self.n:
            raise ValueError(f"transmission overruns the block length ({stop} > {self.n})")
        self.x[start:stop] = xs
        if self.adversary.oblivious:
            errs = np.asarray(self.adversary.plan(start, stop), dtype=np.int64) % self.q
            nz = np.flatnonzero(errs)
            if nz.size > self.budget.remaining:
                cut = nz[self.budget.remaining:]
                self.clamp_log.append({"position": int(start + cut[0]), "requested": int(nz.size),
                                       "allowed": self.budget.remaining})
                errs[cut] = 0
            self.budget.charge(min(nz.size, self.budget.remaining))
        else:
            errs = np.zeros(xs.size, dtype=np.int64)
            for k in range(xs.size):
                i = start + k
                view = self.x[: i + 1]
                view.flags.writeable = False
                e = int(self.adversary.choose(i, view)) % self.q
                if e:
                    if self.budget.remaining == 0:
                        self.clamp_log.append({"position": i, "requested": 1, "allowed": 0})
                        e = 0
                    else:
                        self.budget.charge(1)
                errs[k] = e
        self.s[start:stop] = errs
        self.pos = stop
        return (xs + errs) % self.q

    def send_feedback(self, packet: FeedbackPacket) -> None:
        self.feedback.append(packet)
        self.adversary.observe_feedback(packet)

    def transcript(self, prg_seeds: Optional[dict] = None) -> Transcript:
        t = Transcript(self.q, self.x.copy(), self.s.copy(), (self.x + self.s) % self.q,
                       self.budget.total, list(self.feedback), list(self.stages),
                       self.adversary.name, dict(prg_seeds or {}), list(self.clamp_log))
        t.check()
        return t


def transmit(x, adversary: Adversary, budget: AdversaryBudget, q: int, rng=None, feedback_so_far=()):
    """One-shot transmission of a whole word; returns (y, s) and charges ``budget``."""
    x = as_word(x, q)
    rng = rng if rng is not None else derive_rng(0, "transmit")
    ch = Channel(x.size, q, 0, adversary, rng)
    ch.budget = AdversaryBudget(budget.remaining)
    adversary.total = budget.remaining
    for packet in feedback_so_far:
        adversary.observe_feedback(packet)
    y = ch.transmit(x)
    budget.charge(ch.budget.spent)
    return y, ch.s.copy()


def feedback_schedule(n: int, kappa) -> list:
    """Block ends at multiples of ceil(n * kappa), closing with n."""
    kappa = as_fraction(kappa)
    if not 0 < kappa <= 1:
        raise ValueError("kappa must lie in (0, 1]")
    block = math.ceil(n * kappa)
    ends = list(range(block, n, block))
    return ends + [n]
