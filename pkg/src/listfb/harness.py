"""Monte Carlo driver: configs, per-trial seeding, reports, sweeps, planner tables.

Every trial draws its streams from ``derive_rng(master_seed, trial, tag)``
with tags "message", "adversary" and "bob". The generator is numpy's PCG64
seeded through ``SeedSequence(master_seed, spawn_key=(trial, crc32(tag)))``,
which is what the report header records. Reports hold no timings, so two
runs with the same config are byte-identical.
"""

from __future__ import annotations

import copy
import csv
import io
import itertools
import json
import math
import statistics
import traceback
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from listfb import __version__
from listfb.channel import make_adversary
from listfb.full_feedback import list_size_bound, run_full_feedback, worst_case_adversary
from listfb.partial_feedback import feedback_formula, run_partial_feedback, storage_symbols
from listfb.planner import (
    InfeasiblePlan,
    PlannerParams,
    delta_choice,
    grid_sequences,
    kappa_plan,
    lambda_tilde,
    simulate_trajectory,
)
from listfb.rng import derive_rng
from listfb.scheme import SchemeParams

PRG_DESCRIPTION = "numpy PCG64 seeded by SeedSequence(master_seed, spawn_key=(trial, crc32(tag)))"
MODES = ("plan", "run-full-fb", "run-partial-fb", "component-selftest", "sweep")

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "listfb run configuration",
    "type": "object",
    "required": ["params"],
    "additionalProperties": False,
    "properties": {
        "mode": {"enum": list(MODES)},
        "params": {
            "type": "object",
            "description": "SchemeParams fields; delta and kappa may be strings such as '1/16'",
            "required": ["q", "n", "rho", "eps", "gamma", "delta"],
            "properties": {
                "q": {"type": "integer", "minimum": 2},
                "n": {"type": "integer", "minimum": 1},
                "rho": {"type": "number", "minimum": 0},
                "eps": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "delta": {"type": ["string", "number"]},
                "kappa": {"type": ["string", "number"]},
                "stage_cap": {"type": ["integer", "null"], "minimum": 1},
                "denominator": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "toy": {"type": "boolean"},
            },
        },
        "adversary": {
            "description": "name, or an object with 'name' plus knobs; "
                           "{'name': 'grid_extremal', 'p_sequence': 'worst_case'} plays the planner worst case",
            "oneOf": [{"type": "string"},
                      {"type": "object", "required": ["name"], "properties": {"name": {"type": "string"}}}],
        },
        "trials": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "out": {"type": ["string", "null"]},
        "oracle_sync": {"type": "boolean"},
        "omniscient": {"type": "boolean"},
        "grid": {
            "type": "object",
            "description": "sweep only: parameter name -> list of values (cartesian product)",
            "additionalProperties": {"type": "array", "minItems": 1},
        },
        "plan": {
            "type": "object",
            "description": "plan only: eps/gamma/q lists for the stage-count table",
            "properties": {
                "eps": {"type": "array", "items": {"type": "number"}},
                "gamma": {"type": "array", "items": {"type": "number"}},
                "q": {"type": "array", "items": {"type": "integer"}},
            },
        },
    },
}


@dataclass
class RunConfig:
    params: SchemeParams
    adversary: object = "null"
    trials: int = 100
    seed: int = 0
    mode: str = "run-full-fb"
    out: Optional[str] = None
    oracle_sync: bool = False
    omniscient: bool = False
    grid: dict = field(default_factory=dict)
    plan: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        jsonschema.validate(raw, CONFIG_SCHEMA)
        d = dict(raw)
        params = SchemeParams.from_dict(d.pop("params"))
        cfg = cls(params=params, **d)
        if cfg.mode not in MODES:
            raise ValueError(f"unknown mode {cfg.mode!r}")
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {"mode": self.mode, "params": self.params.to_dict(), "adversary": _jsonable(self.adversary),
                "trials": self.trials, "seed": self.seed, "oracle_sync": self.oracle_sync,
                "omniscient": self.omniscient}


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def build_adversary(spec, params: SchemeParams):
    if isinstance(spec, dict) and spec.get("name") == "grid_extremal" and spec.get("p_sequence") == "worst_case":
        return worst_case_adversary(params)
    return make_adversary(copy.deepcopy(spec))


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple:
    """Wilson score interval for a binomial proportion."""
    if trials == 0:
        return (0.0, 1.0)
    z = statistics.NormalDist().inv_cdf(0.5 + confidence / 2)
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    # the endpoints are exactly 0 and 1 at the extremes; avoid rounding residue there
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return (lo, hi)


# --- trials ------------------------------------------------------------------------------


def run_trial(cfg: RunConfig, trial: int) -> dict:
    params = cfg.params
    row = {"trial": trial}
    try:
        m = derive_rng(cfg.seed, trial, "message").integers(0, params.q, params.message_length)
        adversary = build_adversary(cfg.adversary, params)
        adv_rng = derive_rng(cfg.seed, trial, "adversary")
        if cfg.mode == "run-partial-fb":
            run = run_partial_feedback(m, adversary, params, adv_rng, derive_rng(cfg.seed, trial, "bob"),
                                       oracle_sync=cfg.oracle_sync, omniscient=cfg.omniscient)
        else:
            run = run_full_feedback(m, adversary, params, adv_rng, oracle_sync=cfg.oracle_sync,
                                    omniscient=cfg.omniscient)
        t = run.transcript
        row.update(ok=bool(run.ok), list_size=run.decoded.size, stages=len(run.sender_path),
                   guesses=run.guesses, budget_spent=int(np.count_nonzero(t.s)),
                   feedback_symbols=t.feedback_symbols(), clamp_events=len(t.clamp_log),
                   termination=run.termination.reason,
                   p_hats="|".join(str(p) for p in run.sender_path), error="")
    except Exception as exc:  # recorded, never raised
        row.update(ok=False, list_size=0, stages=0, guesses=0, budget_spent=0, feedback_symbols=0,
                   clamp_events=0, termination="", p_hats="",
                   error=f"{type(exc).__name__}: {exc} | {traceback.format_exc(limit=2).splitlines()[-1]}")
    return row


ROW_FIELDS = ("trial", "ok", "list_size", "stages", "guesses", "budget_spent", "feedback_symbols",
              "clamp_events", "termination", "p_hats", "error")


@dataclass
class RunReport:
    config: dict
    rows: list

    @property
    def aggregates(self) -> dict:
        return aggregate(self.rows)

    def header(self) -> dict:
        return {"package": "listfb", "version": __version__, "prg": PRG_DESCRIPTION}

    def to_json(self) -> str:
        body = {"header": self.header(), "config": self.config, "aggregates": self.aggregates,
                "rows": self.rows}
        return json.dumps(_jsonable(body), sort_keys=True, indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# prg: {PRG_DESCRIPTION}\n")
        w = csv.DictWriter(buf, fieldnames=ROW_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: r.get(k, "") for k in ROW_FIELDS})
        return buf.getvalue()

    def write(self, stem) -> None:
        stem = Path(stem)
        stem.parent.mkdir(parents=True, exist_ok=True)
        stem.with_suffix(".json").write_text(self.to_json())
        stem.with_suffix(".csv").write_text(self.to_csv())


def aggregate(rows: list) -> dict:
    n = len(rows)
    failures = sum(1 for r in rows if not r["ok"])
    sizes = [r["list_size"] for r in rows]
    lo, hi = wilson_interval(failures, n)
    return {
        "trials": n,
        "failures": failures,
        "failure_rate": failures / n if n else 0.0,
        "failure_ci95": [lo, hi],
        "mean_list_size": sum(sizes) / n if n else 0.0,
        "max_list_size": max(sizes, default=0),
        "max_guesses": max((r["guesses"] for r in rows), default=0),
        "max_stages": max((r["stages"] for r in rows), default=0),
        "errors": sum(1 for r in rows if r["error"]),
    }


def cli_run(cfg: RunConfig, progress=None) -> RunReport:
    rows = []
    for i in range(cfg.trials):
        rows.append(run_trial(cfg, i))
        if progress:
            progress(i, rows[-1])
    conf = cfg.to_dict()
    if cfg.mode == "run-full-fb":
        conf["list_size_bound"] = list_size_bound(cfg.params)
    if cfg.mode == "run-partial-fb":
        conf["feedback_formula"] = feedback_formula(cfg.params)
        conf["storage_symbols"] = storage_symbols(cfg.params)
    return RunReport(conf, rows)


def cli_sweep(cfg: RunConfig, progress=None) -> tuple:
    """One cli_run per point of the parameter grid; returns (reports, summary rows)."""
    names = sorted(cfg.grid)
    reports, summary = [], []
    for values in itertools.product(*(cfg.grid[k] for k in names)):
        point = dict(zip(names, values))
        pd = cfg.params.to_dict()
        pd.update(point)
        sub = copy.copy(cfg)
        sub.params = SchemeParams.from_dict(pd)
        sub.mode = "run-partial-fb" if cfg.mode == "run-partial-fb" else "run-full-fb"
        rep = cli_run(sub, progress)
        reports.append(rep)
        agg = rep.aggregates
        line = dict(point)
        line.update(trials=agg["trials"], failures=agg["failures"], failure_rate=agg["failure_rate"],
                    ci_low=agg["failure_ci95"][0], ci_high=agg["failure_ci95"][1],
                    max_list_size=agg["max_list_size"])
        if sub.mode == "run-partial-fb":
            line["feedback_rate"] = feedback_formula(sub.params) / sub.params.n
            line["feedback_symbols_max"] = max((r["feedback_symbols"] for r in rep.rows), default=0)
        summary.append(line)
    return reports, summary


def summary_csv(summary: list) -> str:
    if not summary:
        return ""
    buf = io.StringIO()
    fields = list(summary[0])
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for line in summary:
        w.writerow({k: _jsonable(v) for k, v in line.items()})
    return buf.getvalue()


# --- planner tables --------------------------------------------------------------------


def plan_table(eps_values, gamma_values, q_values, denominator=None) -> list:
    """Stage counts for every (eps, gamma, q); infeasible cells name the failed inequality."""
    rows = []
    for q in q_values:
        for eps in eps_values:
            for gamma in gamma_values:
                row = {"q": q, "eps": eps, "gamma": gamma}
                try:
                    row["lambda_tilde"] = lambda_tilde(eps, gamma, q, denominator)
                    row["error"] = ""
                except ValueError as exc:
                    row["lambda_tilde"] = None
                    row["error"] = str(exc)
                rows.append(row)
    return rows


def worst_case_trajectory(params: SchemeParams) -> list:
    """Longest delta-grid trajectory of the planner, stage by stage."""
    pp = PlannerParams(q=params.q, n=Fraction(params.n), rate=Fraction(params.message_length, params.n),
                       rho=Fraction(params.budget, params.n), gamma=params.gamma, stage_cap=params.lam,
                       delta=params.delta)
    best, best_key = None, None
    for seq in grid_sequences(pp, params.grid, params.lam, mode="delta"):
        traj = simulate_trajectory(pp, seq, mode="delta")
        key = (len(traj.stages), sum(seq))
        if best_key is None or key > best_key:
            best, best_key = traj, key
    rows = []
    for s in best.stages:
        rows.append({"stage": s.index, "n": float(s.state.n), "rate": float(s.state.rate),
                     "rho": float(s.state.rho), "gap": s.state.gap,
                     "p": None if s.p is None else str(s.p), "p_hat": None if s.p_hat is None else str(s.p_hat)})
    return rows


def cli_plan(cfg: RunConfig) -> dict:
    p = cfg.params
    out = {"header": {"prg": PRG_DESCRIPTION, "version": __version__}, "params": p.to_dict(),
           "lambda_tilde": p.lam, "gamma": p.gamma, "delta": str(p.delta), "kappa": str(p.kappa),
           "issues": list(p.issues)}
    try:
        out["delta_choice"] = str(delta_choice(p.eps, max(2, p.lam), p.q)) if p.eps < 1 else "1"
    except ValueError as exc:
        out["delta_choice"] = f"infeasible: {exc}"
    try:
        rec = kappa_plan(p.eps, p.gamma, p.q, p.denominator)
        out["kappa_plan"] = {"kappa": f"{rec.kappa:.6e}", "checks": rec.checks}
    except (InfeasiblePlan, ValueError, ArithmeticError) as exc:
        out["kappa_plan"] = {"error": str(exc)}
    out["worst_case_trajectory"] = worst_case_trajectory(p)
    table = cfg.plan or {}
    if table:
        out["stage_table"] = plan_table(table.get("eps", [p.eps]), table.get("gamma", [p.gamma]),
                                        table.get("q", [p.q]), p.denominator)
    return out


def plan_csv(plan: dict) -> str:
    rows = plan.get("stage_table") or plan["worst_case_trajectory"]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()
