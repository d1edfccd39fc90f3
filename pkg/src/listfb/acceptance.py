"""The thirteen acceptance checks, usable from pytest and from ``listfb --mode component-selftest``.

Each check returns a ``CriterionResult`` whose ``metrics`` are plain JSON
values; ``report_bytes`` serializes a list of results canonically, which
is what the determinism check compares.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from listfb.enumerative import (
    error_index_decode,
    error_index_encode,
    index_length,
    weight_cap,
)
from listfb.gf import get_field
from listfb.harness import RunConfig, cli_run, plan_table
from listfb.hashperm import HashFamily, PermBank, count_bad_seeds, quasi_uniform_fraction, word_value
from listfb.planner import (
    PlannerParams,
    PlannerState,
    grid_sequences,
    lambda_tilde,
    simulate_trajectory,
    step_clean,
)
from listfb.qary import capped_entropy_q, entropy_q, inv_entropy_q, pattern_count, stage_slack, zyablov_rate
from listfb.rng import derive_rng
from listfb.rs import RSCode
from listfb.scheme import SchemeParams
from listfb.swcodec import (
    ChunkCodecParams,
    decode_chunks,
    digest_length,
    dkw_bound,
    estimate_noise,
    symmetric_joint,
)

MASTER_SEED = 2026
GAP_TOLERANCE = 1e-12


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.title}"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed, "metrics": self.metrics}


def report_bytes(results) -> bytes:
    return json.dumps([r.to_dict() for r in results], sort_keys=True, indent=1).encode()


# --- configurations ------------------------------------------------------------------------


def full_feedback_params() -> SchemeParams:
    """n = 2^12 binary toy configuration used end to end."""
    return SchemeParams(q=2, n=4096, rho=0.03, eps=0.2, gamma=0.3, delta=Fraction(1, 16), stage_cap=4)


def partial_feedback_params() -> SchemeParams:
    """n = 2^14 binary toy configuration: one Slepian-Wolf stage, then termination."""
    return SchemeParams(q=2, n=2**14, rho=0.002, eps=0.55, gamma=0.4, delta=Fraction(1, 64),
                        kappa=Fraction(1, 16), stage_cap=1, parity_fraction=0.05, min_parity=8, eps_h=0.6)


def universality_params() -> PlannerParams:
    """q = 4 toy planner setting with a tight denominator, so four stages suffice."""
    q, rho, eps = 4, Fraction(1, 5), 0.3
    rate = Fraction(1 - entropy_q(float(rho), q) - eps)
    gamma = 1 - 1 / q - inv_entropy_q(1 - eps, q)
    return PlannerParams(q=q, n=Fraction(1), rate=rate, rho=rho, gamma=gamma, stage_cap=4,
                         delta=Fraction(1, 4))


UNIVERSALITY_DENOMINATOR = 0.2

# --- 1 --------------------------------------------------------------------------------------


def closed_form_stages(eps, gamma, q) -> int:
    """ceil(ln eps / ln(1 - gamma^3 / (64 ln q)) + 1), evaluated at 50 digits."""
    with mpmath.workdps(50):
        eps_m, g = mpmath.mpf(repr(eps)), mpmath.mpf(repr(gamma))
        if eps_m == 1:
            return 1
        val = mpmath.log(eps_m) / mpmath.log(1 - g**3 / (64 * mpmath.log(q))) + 1
        return int(mpmath.ceil(val))


def criterion_1(seed: int = MASTER_SEED) -> CriterionResult:
    eps_values = [0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0]
    gamma_values = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45]
    q_values = [2, 3, 4, 5, 7, 8, 16]
    t0 = time.perf_counter()
    table = plan_table(eps_values, gamma_values, q_values)
    elapsed = time.perf_counter() - t0
    mismatches = [r for r in table if r["lambda_tilde"] != closed_form_stages(r["eps"], r["gamma"], r["q"])]
    return CriterionResult(1, "planner stage count equals the closed form", not mismatches and elapsed < 1.0,
                           {"cells": len(table), "mismatches": len(mismatches), "under_one_second": elapsed < 1.0})


# --- 2 --------------------------------------------------------------------------------------


def criterion_2(seed: int = MASTER_SEED, pairs: int = 10_000) -> CriterionResult:
    rng = derive_rng(seed, "conservation")
    conservation_fail = gap_fail = 0
    for _ in range(pairs):
        q = int(rng.integers(2, 6))
        rate = Fraction(int(rng.integers(1, 999)), 1000)
        rho = Fraction(int(rng.integers(0, 1000)), 1000) * (1 - Fraction(1, q))
        p = Fraction(int(rng.integers(0, 1001)), 1000) * min(Fraction(1), rho / rate)
        state = PlannerState.start(Fraction(int(rng.integers(100, 10**6))), rate, rho, q)
        nxt = step_clean(state, p)
        if (1 - rate) * nxt.rho + rate * p != rho:
            conservation_fail += 1
        if nxt.gap < state.gap / (1 - float(rate)) - GAP_TOLERANCE:
            gap_fail += 1
    return CriterionResult(2, "budget conservation and gap law", conservation_fail == 0 and gap_fail == 0,
                           {"pairs": pairs, "conservation_violations": conservation_fail,
                            "gap_violations": gap_fail})


# --- 3 --------------------------------------------------------------------------------------


def criterion_3(seed: int = MASTER_SEED) -> CriterionResult:
    t0 = time.perf_counter()
    pp = universality_params()
    lam = lambda_tilde(0.3, pp.gamma, pp.q, UNIVERSALITY_DENOMINATOR)
    grid = [Fraction(k, 4) for k in range(5)]
    sequences = list(grid_sequences(pp, grid, pp.stage_cap, mode="delta"))
    bad, worst = 0, 0
    for seq in sequences:
        traj = simulate_trajectory(pp, seq, mode="delta")
        last = traj.stages[-1].state
        reached = traj.terminated_at is not None and traj.terminated_at <= lam
        reached = reached and float(last.rate) <= zyablov_rate(float(last.rho), pp.gamma / 4, pp.q)
        if not reached or traj.transmitted + last.ell > pp.n:
            bad += 1
        worst = max(worst, traj.terminated_at or pp.stage_cap + 1)
    elapsed = time.perf_counter() - t0
    return CriterionResult(3, "every delta-grid trajectory reaches the Zyablov trigger",
                           bad == 0 and elapsed < 60, {"sequences": len(sequences), "failing": bad,
                                                       "lambda_tilde": lam, "worst_stage": worst,
                                                       "under_one_minute": elapsed < 60})


# --- 4 --------------------------------------------------------------------------------------


def criterion_4(seed: int = MASTER_SEED) -> CriterionResult:
    violations = []
    cells = 0
    for q in (2, 3, 4, 5):
        for k in range(1, 10):
            gamma = k / 20
            cells += 1
            z = zyablov_rate(1 - 1 / q - gamma, gamma / 4, q)
            if z < gamma**3 / (64 * math.log(q)):
                violations.append((q, gamma))
    return CriterionResult(4, "Zyablov rate floor", not violations, {"cells": cells, "violations": len(violations)})


# --- 5 --------------------------------------------------------------------------------------

FULL_FEEDBACK_ADVERSARIES = ("null", "burst_front", {"name": "grid_extremal", "p_sequence": "worst_case"},
                             "stage_greedy")


def _adv_label(spec) -> str:
    return spec if isinstance(spec, str) else spec["name"]


def criterion_5(seed: int = MASTER_SEED, trials: int = 1000, progress=None) -> CriterionResult:
    from listfb.full_feedback import list_size_bound

    params = full_feedback_params()
    bound = list_size_bound(params)
    metrics, passed = {"list_size_bound": bound}, True
    for spec in FULL_FEEDBACK_ADVERSARIES:
        cfg = RunConfig(params=params, adversary=spec, trials=trials, seed=seed, mode="run-full-fb")
        agg = cli_run(cfg, progress).aggregates
        label = _adv_label(spec)
        metrics[label] = {"decoded": agg["trials"] - agg["failures"], "trials": agg["trials"],
                          "max_list_size": agg["max_list_size"], "max_stages": agg["max_stages"]}
        passed &= agg["failures"] == 0 and agg["max_list_size"] <= bound
    return CriterionResult(5, "full feedback: message always in the list", passed, metrics)


# --- 6 --------------------------------------------------------------------------------------


def _all_words(length, q):
    return np.array(list(itertools.product(range(q), repeat=length)), dtype=np.int64).reshape(-1, length)


def criterion_6(seed: int = MASTER_SEED, max_len: int = 12) -> CriterionResult:
    mismatches, words = 0, 0
    for q in (2, 3):
        for length in range(1, max_len + 1):
            for s in _all_words(length, q):
                # the tightest grid value for the word's weight
                p_hat = Fraction(int(np.count_nonzero(s)), length)
                back = error_index_decode(error_index_encode(s, p_hat, q), length, p_hat, q)
                words += 1
                if back is None or not np.array_equal(back, s):
                    mismatches += 1
    bound_fail, bound_cells = 0, 0
    grid = [Fraction(k, 16) for k in range(17)]
    for q in (2, 3, 4):
        for length in range(1, 65):
            for p_hat in grid:
                w = weight_cap(length, p_hat)
                got = index_length(length, w, q)
                oracle = math.ceil(math.log(pattern_count(length, w, q), q) - 1e-12)
                allowed = math.ceil(length * (capped_entropy_q(float(p_hat), q) + stage_slack(length, q)) - 1e-9)
                bound_cells += 1
                if got != oracle or got > allowed:
                    bound_fail += 1
    return CriterionResult(6, "enumerative coding round trip and length bound", mismatches == 0 and bound_fail == 0,
                           {"round_trips": words, "mismatches": mismatches, "bound_cells": bound_cells,
                            "bound_violations": bound_fail})


# --- 7 --------------------------------------------------------------------------------------


def criterion_7(seed: int = MASTER_SEED, trials: int = 10_000) -> CriterionResult:
    f = get_field(16)
    code = RSCode(f, 7, 15)
    rng = derive_rng(seed, "rs")
    data = rng.integers(0, 16, 7)
    cw = code.encode(data)
    exhaustive_fail, patterns = 0, 0
    for t in range(3):
        for pos in itertools.combinations(range(15), t):
            for vals in itertools.product(range(1, 16), repeat=t):
                word = cw.copy()
                for p_, v in zip(pos, vals):
                    word[p_] = f.add(int(word[p_]), v)
                res = code.decode(word)
                patterns += 1
                if not res.ok or not np.array_equal(res.data, data):
                    exhaustive_fail += 1
    sweep_fail = 0
    for _ in range(trials):
        data = rng.integers(0, 16, 7)
        cw = code.encode(data)
        t = int(rng.integers(0, 5))
        e = code.nsym - 2 * t
        order = rng.permutation(15)
        word = cw.copy()
        for p_ in order[:t]:
            word[p_] = f.add(int(word[p_]), int(rng.integers(1, 16)))
        erased = order[t:t + e]
        word[erased] = rng.integers(0, 16, e)
        res = code.decode(word, erased.tolist())
        if not res.ok or not np.array_equal(res.data, data):
            sweep_fail += 1
    return CriterionResult(7, "Reed-Solomon (15,7) over GF(16)", exhaustive_fail == 0 and sweep_fail == 0,
                           {"patterns": patterns, "exhaustive_failures": exhaustive_fail,
                            "boundary_trials": trials, "boundary_failures": sweep_fail})


# --- 8 --------------------------------------------------------------------------------------


def criterion_8(seed: int = MASTER_SEED, chunks: int = 10_000) -> CriterionResult:
    q, L, p, eps_h = 2, 12, 0.1, 0.3
    params = ChunkCodecParams(L, q, eps_h, eps_h / 2, 0, adversarial=False)
    family = HashFamily(derive_rng(seed, "chunk-hash").integers(0, 2**62), L, q)
    rng = derive_rng(seed, "chunk-noise")
    x = rng.integers(0, q, (chunks, L))
    flips = rng.random((chunks, L)) < p
    y = (x + flips * rng.integers(1, q, (chunks, L))) % q
    dl = digest_length(L, p, eps_h, q)
    batch = 500
    seeds = np.zeros(batch, dtype=np.uint64)
    failed = 0
    for a in range(0, chunks, batch):
        truth = word_value(x[a:a + batch], q)
        digests = family.digest_values(truth, seeds, np.arange(batch, dtype=np.uint64), dl)
        values, status = decode_chunks(y[a:a + batch], digests, params, p, family, seeds, dl,
                                       stats=symmetric_joint(p, q))
        failed += int(np.count_nonzero((status != 1) | (values != truth.astype(np.int64))))
    rate = failed / chunks
    bound = q ** (-L * params.eps_H)
    return CriterionResult(8, "chunk decoding error rate", rate <= 4 * bound,
                           {"chunks": chunks, "digest_len": dl, "failure_rate": rate, "bound": bound,
                            "ratio": rate / bound})


# --- 9 --------------------------------------------------------------------------------------


def criterion_9(seed: int = MASTER_SEED, trials: int = 10_000, length: int = 4096) -> CriterionResult:
    cells = []
    passed = True
    for p in (0.05, 0.2, 0.4):
        for size in (64, 256):
            rng = derive_rng(seed, "dkw", int(p * 100), size)
            x = np.zeros(length, dtype=np.int64)
            y = np.zeros(length, dtype=np.int64)
            y[: round(p * length)] = 1
            est = np.empty(trials)
            for t in range(trials):
                T = rng.choice(length, size=size, replace=False)
                est[t] = estimate_noise(x, T, y[T])
            for eps_e in (0.05, 0.1):
                freq = float(np.mean(np.abs(est - p) >= eps_e - 1e-12))
                bound = dkw_bound(size, eps_e)
                ok = freq <= bound
                passed &= ok
                cells.append({"p": p, "T": size, "eps_e": eps_e, "frequency": freq, "bound": bound})
    return CriterionResult(9, "noise estimate deviation law", passed, {"cells": cells})


# --- 10 -------------------------------------------------------------------------------------


def criterion_10(seed: int = MASTER_SEED, pairs: int = 100) -> CriterionResult:
    q, L = 2, 10
    radius = math.ceil(0.15 * L)
    family = HashFamily(derive_rng(seed, "bad-seed-hash").integers(0, 2**62), L, q)
    rng = derive_rng(seed, "bad-seed-pairs")
    threshold = q ** (math.sqrt(L) / 2)
    good, counts = 0, []
    for _ in range(pairs):
        x = rng.integers(0, q, L)
        s = np.zeros(L, dtype=np.int64)
        pos = rng.choice(L, size=radius, replace=False)
        s[pos] = rng.integers(1, q, radius)
        stat = count_bad_seeds(family, x, s, radius, L)
        counts.append(stat.bad)
        good += stat.bad <= threshold
    return CriterionResult(10, "few bad seeds", good >= 0.99 * pairs,
                           {"pairs": pairs, "within_threshold": good, "threshold": threshold,
                            "seeds_per_chunk": q**family.seed_len, "max_bad": max(counts)})


# --- 11 -------------------------------------------------------------------------------------


def criterion_11(seed: int = MASTER_SEED, perms: int = 1000) -> CriterionResult:
    n, L = 2**14, 14
    eps_t = math.sqrt(6 * math.log(L) / L)
    eps_n = 1 / L**3
    weight = round(0.1 * n)
    burst = np.zeros(n, dtype=np.int64)
    burst[:weight] = 1
    periodic = np.zeros(n, dtype=np.int64)
    periodic[np.arange(weight) * (n // weight)] = 1
    bank = PermBank(derive_rng(seed, "perm-bank").integers(0, 2**62), n, 2, cache_size=1)
    idx = derive_rng(seed, "perm-draws").integers(0, bank.size, perms)
    metrics, passed = {"eps_T": eps_t}, True
    for name, s in (("burst", burst), ("periodic", periodic)):
        good = sum(quasi_uniform_fraction(s, bank.get(int(j)), L, eps_t, 2) >= 1 - eps_n for j in idx)
        metrics[name] = good / perms
        passed &= good / perms >= 0.99
    return CriterionResult(11, "permutation quasi-uniformity", passed, metrics)


# --- 12 -------------------------------------------------------------------------------------


def criterion_12(seed: int = MASTER_SEED, trials: int = 1000, progress=None) -> CriterionResult:
    from listfb.partial_feedback import feedback_formula, storage_symbols

    params = partial_feedback_params()
    formula = feedback_formula(params)
    storage = storage_symbols(params)
    expected_storage = params.n**params.C_p * params.n * math.ceil(math.log2(params.n))
    metrics = {"feedback_formula": formula, "storage_symbols": storage, "storage_expected": expected_storage}
    passed = storage == expected_storage
    for spec in ({"name": "uniform_iid", "p": params.rho / 2}, "burst_front"):
        cfg = RunConfig(params=params, adversary=spec, trials=trials, seed=seed, mode="run-partial-fb")
        rep = cli_run(cfg, progress)
        agg = rep.aggregates
        exact = all(r["feedback_symbols"] == formula for r in rep.rows)
        label = _adv_label(spec)
        metrics[label] = {"failures": agg["failures"], "trials": agg["trials"],
                          "failure_rate": agg["failure_rate"], "feedback_exact": exact}
        passed &= agg["failure_rate"] <= 0.01 and exact
    return CriterionResult(12, "partial feedback failure rate and feedback accounting", passed, metrics)


# --- 13 -------------------------------------------------------------------------------------

DETERMINISM_TRIALS = 25


def criterion_13(seed: int = MASTER_SEED, checks=None) -> CriterionResult:
    """Re-run checks with the same seed and compare serialized reports byte for byte.

    The two end-to-end checks are re-run at DETERMINISM_TRIALS trials each.
    """
    if checks is None:
        checks = [criterion_2, criterion_3, criterion_4, criterion_7, criterion_8, criterion_9, criterion_10,
                  criterion_11, lambda s: criterion_5(s, DETERMINISM_TRIALS),
                  lambda s: criterion_12(s, DETERMINISM_TRIALS)]
    identical = 0
    for check in checks:
        a, b = report_bytes([check(seed)]), report_bytes([check(seed)])
        identical += a == b
    return CriterionResult(13, "same seed gives byte-identical reports", identical == len(checks),
                           {"checks": len(checks), "identical": identical})


ALL = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
       7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11, 12: criterion_12,
       13: criterion_13}
