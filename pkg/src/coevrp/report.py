"""Baseline-versus-collaboration comparisons in the three-block table layout.

A comparison runs the two single-company baselines, collaboration without
profit thresholds, and collaboration with each company's baseline profit
as its threshold.  Money is reported to one decimal; percentage columns
are computed from the rounded money so they can be recomputed from the
table itself.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import re
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from .alns import AlnsConfig, solve_alns, solve_noncollab
from .charging_lp import Infeasible
from .evaluator import validate
from .exact import ExactConfig, solve_exact, solve_noncollab_exact
from .model import COMPANIES, FEASIBLE, NO_FEASIBLE, Instance, Solution

log = logging.getLogger(__name__)

METHODS = ("exact", "alns")
CSV_COLUMNS = (
    "scenario",
    "block",
    "model",
    "company",
    "status",
    "total_cost",
    "tc_reduction_pct",
    "profit",
    "profit_increase_pct",
    "method",
    "seconds",
)


def model_name(instance: Instance, collaborative: bool) -> str:
    """VRP / VRPTW / EVRP / EVRPTW and CoVRPMP / CoVRPMP-TW / CoEVRPMP / CoEVRPMP-TW."""
    e = "E" if instance.electric else ""
    if collaborative:
        return f"Co{e}VRPMP" + ("-TW" if instance.windows_enforced else "")
    return f"{e}VRP" + ("TW" if instance.windows_enforced else "")


def money(x: Optional[float]) -> Optional[float]:
    return None if x is None or not math.isfinite(x) else round(float(x) + 0.0, 1)


def reduction_pct(base: Optional[float], new: Optional[float]) -> Optional[float]:
    """``(base - new) / base * 100`` on one-decimal money; ``None`` if either is missing."""
    b, n = money(base), money(new)
    if b is None or n is None or b == 0:
        return None
    return round((b - n) / abs(b) * 100.0, 1)


def increase_pct(base: Optional[float], new: Optional[float]) -> Optional[float]:
    """``(new - base) / base * 100`` on one-decimal money; ``None`` if either is missing."""
    b, n = money(base), money(new)
    if b is None or n is None or b == 0:
        return None
    return round((n - b) / abs(b) * 100.0, 1)


@dataclass
class ScenarioResult:
    """One block of the table: a total cost and a profit per company."""

    block: str
    model: str
    status: str
    total_cost: Optional[float] = None
    profits: dict[int, Optional[float]] = field(default_factory=dict)
    method: str = ""
    seconds: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


@dataclass
class CompareReport:
    scenario: str
    baseline: ScenarioResult
    collaborative: ScenarioResult
    thresholded: ScenarioResult
    settings: dict[str, Any] = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.settings, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def rows(self) -> list[dict[str, Any]]:
        base = self.baseline
        out = []
        for res in (self.baseline, self.collaborative, self.thresholded):
            for k in COMPANIES:
                out.append(
                    {
                        "scenario": self.scenario,
                        "block": res.block,
                        "model": res.model,
                        "company": k,
                        "status": res.status,
                        "total_cost": money(res.total_cost),
                        "tc_reduction_pct": None if res is base else reduction_pct(base.total_cost, res.total_cost),
                        "profit": money(res.profits.get(k)),
                        "profit_increase_pct": None
                        if res is base
                        else increase_pct(base.profits.get(k), res.profits.get(k)),
                        "method": res.method,
                        "seconds": round(res.seconds, 2),
                    }
                )
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "settings": self.settings,
            "config_hash": self.config_hash,
            "blocks": {r.block: asdict(r) for r in (self.baseline, self.collaborative, self.thresholded)},
            "rows": self.rows(),
        }


def write_csv(reports: list[CompareReport], path: Union[str, Path]) -> Path:
    """One CSV for several scenarios; missing values are written as ``-``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for rep in reports:
            for row in rep.rows():
                w.writerow({k: "-" if v is None else v for k, v in row.items()})
    return path


def write_json(reports: list[CompareReport], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(json.dumps([r.to_dict() for r in reports], indent=1, default=str))
    return path


def format_table(reports: list[CompareReport]) -> str:
    """Plain-text rendering for the terminal."""
    head = f"{'scenario':<14}{'block':<14}{'model':<13}{'k':>2}{'TC':>9}{'dTC%':>7}{'Phi':>9}{'dPhi%':>7}"
    lines = [head]

    def cell(v: Optional[float], width: int) -> str:
        return f"{'-':>{width}}" if v is None else f"{v:>{width}.1f}"

    for rep in reports:
        for row in rep.rows():
            lines.append(
                f"{row['scenario']:<14}{row['block']:<14}{row['model']:<13}{row['company']:>2}"
                + cell(row["total_cost"], 9)
                + cell(row["tc_reduction_pct"], 7)
                + cell(row["profit"], 9)
                + cell(row["profit_increase_pct"], 7)
            )
    return "\n".join(lines)


# -- running ------------------------------------------------------------------------------


@dataclass
class SolverSettings:
    method: str = "alns"
    seed: int = 0
    time_limit: Optional[float] = None
    alns: AlnsConfig = field(default_factory=AlnsConfig)
    exact: ExactConfig = field(default_factory=ExactConfig)

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")

    def alns_config(self) -> AlnsConfig:
        d = self.alns.to_dict()
        d["seed"] = self.seed
        if self.time_limit is not None:
            d["time_limit"] = self.time_limit
        return AlnsConfig.from_dict(d)

    def exact_config(self, n_customers: int) -> ExactConfig:
        cfg = self.exact
        if self.time_limit is not None:
            # a time limit turns the exact search into an anytime search of any size
            return ExactConfig(max(cfg.max_customers, n_customers), self.time_limit, cfg.parallel_branches, cfg.workers)
        return cfg

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "seed": self.seed,
            "time_limit": self.time_limit,
            "alns": self.alns.to_dict(),
            "exact": asdict(self.exact),
        }


def solve_collaborative(instance: Instance, settings: SolverSettings) -> Union[Solution, Infeasible]:
    if settings.method == "exact":
        return solve_exact(instance, settings.exact_config(len(instance.customers)))
    return solve_alns(instance, settings.alns_config())


def solve_baseline(instance: Instance, company: int, settings: SolverSettings) -> Union[Solution, Infeasible]:
    if settings.method == "exact":
        n = len(instance.customers_of(company))
        return solve_noncollab_exact(instance, company, settings.exact_config(n))
    return solve_noncollab(instance, company, settings.alns_config())


def _usable(sol: Union[Solution, Infeasible], instance: Instance) -> Optional[Solution]:
    """A solution that validates, or ``None``."""
    if isinstance(sol, Infeasible) or sol.status == NO_FEASIBLE:
        return None
    rep = validate(instance, sol)
    if not rep.feasible:
        log.warning("discarding %s solution with violations %s", sol.method, rep.violated_ids)
        return None
    return sol


def run_baselines(instance: Instance, settings: SolverSettings) -> ScenarioResult:
    t0 = time.monotonic()
    sols = {k: _usable(solve_baseline(instance, k, settings), instance) for k in COMPANIES}
    res = ScenarioResult("baseline", model_name(instance, False), NO_FEASIBLE, method=settings.method)
    res.profits = {k: (s.profits.get(k) if s is not None else None) for k, s in sols.items()}
    if all(s is not None for s in sols.values()):
        res.status = FEASIBLE
        res.total_cost = sum(s.total_cost for s in sols.values())
    res.seconds = time.monotonic() - t0
    return res


def run_collaboration(instance: Instance, settings: SolverSettings, block: str) -> tuple[ScenarioResult, Optional[Solution]]:
    t0 = time.monotonic()
    sol = _usable(solve_collaborative(instance, settings), instance)
    res = ScenarioResult(block, model_name(instance, True), NO_FEASIBLE, method=settings.method)
    if sol is not None:
        res.status = FEASIBLE
        res.total_cost = sol.total_cost
        res.profits = dict(sol.profits)
    res.seconds = time.monotonic() - t0
    return res, sol


def run_compare(instance: Instance, settings: SolverSettings, scenario: str = "") -> CompareReport:
    """Baselines, collaboration without thresholds, and with baseline profits as thresholds.

    When a baseline is infeasible the thresholded block is reported as
    infeasible too (there is no threshold to honour), and the run continues.
    """
    free = instance.with_thresholds(None)
    base = run_baselines(free, settings)
    collab, _ = run_collaboration(free, settings, "collaborative")
    if base.feasible:
        th = [base.profits[k] for k in COMPANIES]
        thresholded, _ = run_collaboration(free.with_thresholds(th), settings, "thresholds")
    else:
        thresholded = ScenarioResult("thresholds", model_name(instance, True), NO_FEASIBLE, method=settings.method)
    settings_d = settings.to_dict()
    settings_d.update(
        instance=instance.name,
        ev_mode=instance.ev_mode.value,
        tw_mode=instance.tw_mode.value,
        shared=[instance.nodes[j].label for j in instance.customers if instance.nodes[j].shared],
    )
    return CompareReport(scenario or model_name(instance, True), base, collab, thresholded, settings_d)


# -- time-window profiles -----------------------------------------------------------------

_PROFILE = re.compile(r"^r(\d+)-(\d+(?:\.\d+)?)-(\d+(?:\.\d+)?)$")


def parse_tw_profile(text: str) -> tuple[int, float, float]:
    """``r<seed>-<window length>-<total range>`` -> ``(seed, tau_i, tau)``."""
    mm = _PROFILE.match(text.strip())
    if mm is None:
        raise ValueError(f"bad time-window profile {text!r}; expected e.g. r1-60-180")
    seed, tau_i, tau = int(mm.group(1)), float(mm.group(2)), float(mm.group(3))
    if not 0 < tau_i <= tau:
        raise ValueError(f"profile {text!r}: need 0 < window length <= total range")
    return seed, tau_i, tau


def apply_tw_profile(instance: Instance, profile: str) -> Instance:
    """Every customer gets a window of length tau_i opening at a random whole minute in [0, tau - tau_i]."""
    seed, tau_i, tau = parse_tw_profile(profile)
    rng = np.random.default_rng(seed)
    opens = rng.integers(0, int(tau - tau_i) + 1, size=len(instance.customers))
    windows = {j: (float(e), float(e) + tau_i) for j, e in zip(instance.customers, opens)}
    return instance.with_windows(windows).replace(name=f"{instance.name}-{profile}")
