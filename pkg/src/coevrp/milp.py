"""Fixed-meet-point MILP in CPLEX LP format, plus solution import.

Variables are named ``x_k_i_j``, ``y_k_j``, ``z_k_i``, ``s_k_i``, ``b_k_i``,
``d_k_i`` (charge amount), ``ST_k_i``, ``T_k`` and ``Phi_k`` with ``k`` the
company and ``i``, ``j`` node indices.  The end depot of every vehicle is the
extra index ``n`` (the number of nodes); the start depot keeps its own index.
Only the chosen meet point is part of the model.
"""

from __future__ import annotations

import logging
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

from .evaluator import company_profit, objective, validate
from .model import COMPANIES, FEASIBLE, NO_FEASIBLE, Instance, Solution, VehicleRoute

log = logging.getLogger(__name__)

TERMS_PER_LINE = 6


@dataclass
class LpModel:
    """Parsed LP file: rows are ``name -> (coefficients, sense, rhs)``."""

    sense: str = "min"
    objective: dict[str, float] = field(default_factory=dict)
    rows: dict[str, tuple[dict[str, float], str, float]] = field(default_factory=dict)
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    binaries: set[str] = field(default_factory=set)

    @property
    def variables(self) -> set[str]:
        names = set(self.objective) | set(self.bounds) | self.binaries
        for coefs, _, _ in self.rows.values():
            names.update(coefs)
        return names

    def row_families(self) -> dict[str, int]:
        """Row count per name prefix (text before the first ``_`` followed by a digit)."""
        out: dict[str, int] = defaultdict(int)
        for name in self.rows:
            out[re.sub(r"_\d.*$", "", name)] += 1
        return dict(out)

    def violations(self, values: Mapping[str, float], tol: float = 1e-6) -> list[str]:
        """Names of rows and bounds that ``values`` violate (missing variables count as 0)."""
        bad = []
        for name, (coefs, sense, rhs) in self.rows.items():
            lhs = sum(c * values.get(v, 0.0) for v, c in coefs.items())
            if (sense == "<=" and lhs > rhs + tol) or (sense == ">=" and lhs < rhs - tol) or (
                sense == "=" and abs(lhs - rhs) > tol
            ):
                bad.append(name)
        for v, (lo, hi) in self.bounds.items():
            x = values.get(v, 0.0)
            if x < lo - tol or x > hi + tol:
                bad.append(f"bound:{v}")
        for v in self.binaries:
            x = values.get(v, 0.0)
            if min(abs(x), abs(x - 1.0)) > tol:
                bad.append(f"binary:{v}")
        return bad


class _Writer:
    def __init__(self) -> None:
        self.obj: dict[str, float] = {}
        self.rows: list[tuple[str, dict[str, float], str, float]] = []
        self.bounds: dict[str, tuple[float, float]] = {}
        self.binaries: list[str] = []

    def row(self, name: str, coefs: Mapping[str, float], sense: str, rhs: float) -> None:
        self.rows.append((name, dict(coefs), sense, float(rhs)))

    def var(self, name: str, lo: float = 0.0, hi: float = math.inf, binary: bool = False) -> str:
        if binary:
            self.binaries.append(name)
        else:
            self.bounds[name] = (lo, hi)
        return name

    def text(self, header: Iterable[str]) -> str:
        out = [f"\\ {h}" for h in header]
        out.append("Minimize")
        out.append(" obj:" + _expr(self.obj))
        out.append("Subject To")
        for name, coefs, sense, rhs in self.rows:
            out.append(f" {name}:" + _expr(coefs) + f" {sense} {_num(rhs)}")
        out.append("Bounds")
        for v, (lo, hi) in self.bounds.items():
            if lo == -math.inf and hi == math.inf:
                out.append(f" {v} free")
            elif lo == hi:
                out.append(f" {v} = {_num(lo)}")
            elif hi == math.inf:
                if lo != 0.0:
                    out.append(f" {v} >= {_num(lo)}")
            else:
                lo_s = "-inf" if lo == -math.inf else _num(lo)
                out.append(f" {lo_s} <= {v} <= {_num(hi)}")
        if self.binaries:
            out.append("Binary")
            for i in range(0, len(self.binaries), TERMS_PER_LINE * 2):
                out.append(" " + " ".join(self.binaries[i : i + TERMS_PER_LINE * 2]))
        out.append("End")
        return "\n".join(out) + "\n"


def _num(x: float) -> str:
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


def _expr(coefs: Mapping[str, float]) -> str:
    parts = []
    for i, (v, c) in enumerate(coefs.items()):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        term = f"{sign} {v}" if mag == 1.0 else f"{sign} {_num(mag)} {v}"
        if i and i % TERMS_PER_LINE == 0:
            term = "\n   " + term
        parts.append(term)
    return " " + " ".join(parts) if parts else " 0 x_dummy"


def _arcs(instance: Instance, k: int, m: int) -> list[tuple[int, int]]:
    """Arcs of vehicle ``k``: start depot, customers, ``m`` and the end depot."""
    n = instance.n_nodes
    o = instance.depot(k)
    inner = list(instance.customers) + [m]
    D = instance.distance
    arcs = [(o, j) for j in inner]
    arcs += [(i, j) for i in inner for j in inner if i != j]
    arcs += [(i, n) for i in inner]
    return [(i, j) for i, j in arcs if math.isfinite(D[i, o if j == n else j])]


def _chargers(instance: Instance, m: int) -> list[int]:
    if not instance.electric:
        return []
    return [i for i in list(instance.customers) + [m] if instance.charge_rate(i)]


def build_milp(instance: Instance, m: int) -> _Writer:
    """Rows, bounds and binaries of the fixed-``m`` model."""
    if m not in instance.meet_points:
        raise ValueError(f"node {m} is not a meet point")
    n = instance.n_nodes
    w = _Writer()
    R = list(instance.customers)
    gamma = instance.big_m
    H = instance.horizon
    electric = instance.electric
    th = instance.thresholds
    chargers = _chargers(instance, m)
    for k in COMPANIES:
        o = instance.depot(k)
        v = instance.vehicle(k)
        tt = instance.tt(k)
        arcs = _arcs(instance, k, m)
        D = lambda i, j: instance.distance[i, o if j == n else j]  # noqa: E731
        T = lambda i, j: tt[i, o if j == n else j]  # noqa: E731
        x = {a: w.var(f"x_{k}_{a[0]}_{a[1]}", binary=True) for a in arcs}
        y = {j: w.var(f"y_{k}_{j}", binary=True) for j in R}
        nodes = [o] + R + [m, n]
        s = {i: w.var(f"s_{k}_{i}", 0.0, H) for i in nodes}
        e0 = instance.window(o)[0]
        if e0 > 0:
            w.bounds[s[o]] = (e0, H)
        Tk = w.var(f"T_{k}")
        phi = w.var(f"Phi_{k}", -math.inf, math.inf)
        for a, name in x.items():
            w.obj[name] = w.obj.get(name, 0.0) + instance.c_d * D(*a)
        w.obj[Tk] = instance.c_t

        # profit definition with the fixed sharing ratio
        coefs = {phi: 1.0, Tk: instance.c_t}
        const = 0.0
        for j in R:
            alpha = instance.alpha(m, j)
            p = instance.nodes[j].price
            coefs[y[j]] = -p * (1.0 - alpha)
            if instance.owner(j) == k:
                const += p * alpha
        for a, name in x.items():
            coefs[name] = instance.c_d * D(*a)
        w.row(f"profit_{k}", coefs, "=", const)
        if th is not None:
            w.row(f"threshold_{k}", {phi: 1.0}, ">=", th[k - 1])

        if electric:
            B, L, eps = v.battery_capacity, v.battery_min, v.consumption
            b = {i: w.var(f"b_{k}_{i}", L, B) for i in nodes}
            w.bounds[b[o]] = (B, B)
            d = {i: w.var(f"d_{k}_{i}") for i in chargers}
            z = {i: w.var(f"z_{k}_{i}", binary=True) for i in chargers}
            ST = {i: w.var(f"ST_{k}_{i}") for i in chargers}
            for (i, j), name in x.items():
                # big-M B - L + eps*D keeps the row slack whenever the arc is unused
                row = {b[j]: 1.0, b[i]: -1.0, name: B - L + eps * D(i, j)}
                if i in d:
                    row[d[i]] = -1.0
                w.row(f"battery_{k}_{i}_{j}", row, "<=", B - L)
            for i in chargers:
                w.row(f"chargecap_{k}_{i}", {d[i]: 1.0, b[i]: 1.0}, "<=", B)
                w.row(f"chargeon_{k}_{i}", {d[i]: 1.0, z[i]: -B}, "<=", 0.0)
                rate = instance.charge_rate(i)
                w.row(f"dwell_{k}_{i}", {ST[i]: 1.0, d[i]: -60.0 / rate}, "=", instance.nodes[i].service_time)
        else:
            ST = {}

        w.row(f"capacity_{k}", {y[j]: instance.nodes[j].demand for j in R}, "<=", v.capacity)
        for j in instance.shared_of(3 - k):
            w.row(f"aftermeet_{k}_{j}", {s[m]: 1.0, s[j]: -1.0, y[j]: gamma}, "<=", gamma)
        for (i, j), name in x.items():
            row = {s[i]: 1.0, s[j]: -1.0, name: gamma}
            rhs = gamma - T(i, j)
            if i in ST:
                row[ST[i]] = 1.0
            else:
                rhs -= instance.nodes[i].service_time
            w.row(f"timing_{k}_{i}_{j}", row, "<=", rhs)
        w.row(f"arrival_{k}", {Tk: 1.0, s[n]: -1.0}, "=", 0.0)
        if instance.windows_enforced:
            for j in R:
                e, l = instance.window(j)
                w.row(f"twlo_{k}_{j}", {s[j]: 1.0}, ">=", e)
                if math.isfinite(l):
                    w.row(f"twhi_{k}_{j}", {s[j]: 1.0}, "<=", l)
        for i in (m, n):
            e, l = instance.window(o if i == n else i)
            if e > 0:
                w.bounds[s[i]] = (e, H)
            if math.isfinite(l):
                w.bounds[s[i]] = (w.bounds[s[i]][0], min(l, H))

        w.row(f"meet_{k}", {x[a]: 1.0 for a in arcs if a[1] == m}, "=", 1.0)
        w.row(f"depotout_{k}", {x[a]: 1.0 for a in arcs if a[0] == o}, "=", 1.0)
        w.row(f"depotin_{k}", {x[a]: 1.0 for a in arcs if a[1] == n}, "=", 1.0)
        for i in instance.reserved_of(k):
            w.row(f"reserved_{k}_{i}", {x[a]: 1.0 for a in arcs if a[0] == i}, "=", 1.0)
        for j in R:
            row = {y[j]: 1.0}
            row.update({x[a]: -1.0 for a in arcs if a[1] == j})
            w.row(f"served_{k}_{j}", row, "=", 0.0)
        for j in R + [m]:
            row: dict[str, float] = {}
            for a in arcs:
                if a[1] == j:
                    row[x[a]] = row.get(x[a], 0.0) + 1.0
                if a[0] == j:
                    row[x[a]] = row.get(x[a], 0.0) - 1.0
            w.row(f"flow_{k}_{j}", row, "=", 0.0)
    for j in R:
        row = {}
        for k in COMPANIES:
            row.update({f"x_{k}_{i}_{jj}": 1.0 for i, jj in _arcs(instance, k, m) if jj == j})
        w.row(f"visit_{j}", row, "=", 1.0)
    w.row("samemeet", {**{f"x_1_{i}_{j}": 1.0 for i, j in _arcs(instance, 1, m) if j == m},
                       **{f"x_2_{i}_{j}": -1.0 for i, j in _arcs(instance, 2, m) if j == m}}, "=", 0.0)
    wt = instance.costs.max_wait
    w.row("synchi", {f"s_1_{m}": 1.0, f"s_2_{m}": -1.0}, "<=", wt)
    w.row("synclo", {f"s_1_{m}": 1.0, f"s_2_{m}": -1.0}, ">=", -wt)
    return w


def export_milp(instance: Instance, m: int, path: Union[str, Path]) -> Path:
    """Write the fixed-``m`` model as an LP file."""
    w = build_milp(instance, m)
    path = Path(path)
    header = [
        f"instance {instance.name}, meet point {m} ({instance.nodes[m].label})",
        f"{instance.ev_mode.value} vehicles, time windows {instance.tw_mode.value}",
        f"end depot index {instance.n_nodes}, big-M {instance.big_m:g}",
    ]
    path.write_text(w.text(header))
    log.info("wrote %s: %d rows, %d binaries", path, len(w.rows), len(w.binaries))
    return path


# -- reading -------------------------------------------------------------------------

_TERM = re.compile(r"([+-])?\s*(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)?\s*([A-Za-z_][\w.]*)")


def _parse_expr(text: str) -> dict[str, float]:
    coefs: dict[str, float] = {}
    for sign, num, name in _TERM.findall(text):
        c = float(num) if num else 1.0
        if sign == "-":
            c = -c
        coefs[name] = coefs.get(name, 0.0) + c
    return coefs


def _parse_float(tok: str) -> float:
    t = tok.lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    if t in ("-inf", "-infinity"):
        return -math.inf
    return float(tok)


def read_lp(path: Union[str, Path]) -> LpModel:
    """Parse the subset of LP format written by :func:`export_milp`."""
    model = LpModel()
    section = None
    buf = ""
    statements: list[tuple[str, str]] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        low = line.lower()
        if low in ("minimize", "maximize", "subject to", "bounds", "binary", "binaries", "general", "end"):
            if buf:
                statements.append((section, buf))
                buf = ""
            section = low
            if low == "maximize":
                model.sense = "max"
            continue
        if section in ("minimize", "maximize", "subject to") and ":" in line and buf:
            statements.append((section, buf))
            buf = ""
        if section in ("bounds", "binary", "binaries"):
            statements.append((section, line))
        else:
            buf += " " + line
    if buf:
        statements.append((section, buf))
    for section, text in statements:
        if section in ("minimize", "maximize"):
            model.objective = _parse_expr(text.split(":", 1)[1])
        elif section == "subject to":
            name, body = text.split(":", 1)
            mm = re.match(r"(.*?)(<=|>=|=)\s*(\S+)\s*$", body.strip())
            if mm is None:
                raise ValueError(f"cannot parse row {name.strip()!r}")
            model.rows[name.strip()] = (_parse_expr(mm.group(1)), mm.group(2), _parse_float(mm.group(3)))
        elif section == "bounds":
            toks = text.split()
            if len(toks) == 2 and toks[1] == "free":
                model.bounds[toks[0]] = (-math.inf, math.inf)
            elif len(toks) == 3 and toks[1] == "=":
                model.bounds[toks[0]] = (_parse_float(toks[2]),) * 2
            elif len(toks) == 3 and toks[1] == ">=":
                model.bounds[toks[0]] = (_parse_float(toks[2]), math.inf)
            elif len(toks) == 3 and toks[1] == "<=":
                model.bounds[toks[0]] = (0.0, _parse_float(toks[2]))
            elif len(toks) == 5:
                model.bounds[toks[2]] = (_parse_float(toks[0]), _parse_float(toks[4]))
            else:
                raise ValueError(f"cannot parse bound {text!r}")
        elif section in ("binary", "binaries"):
            model.binaries.update(text.split())
    return model


# -- solution values -------------------------------------------------------------


def solution_values(instance: Instance, solution: Solution) -> dict[str, float]:
    """Variable values of a collaborative solution in the exported naming.

    Unvisited nodes get times at their window opening and a full battery
    so that relaxed big-M rows hold.
    """
    m = solution.meet_point
    if m is None:
        raise ValueError("MILP values need a collaborative solution")
    n = instance.n_nodes
    vals: dict[str, float] = {}
    served = solution.served_by()
    chargers = set(_chargers(instance, m))
    for r in solution.routes:
        k = r.company
        o = instance.depot(k)
        seq = list(r.nodes[:-1]) + [n]
        for i, j in zip(seq, seq[1:]):
            vals[f"x_{k}_{i}_{j}"] = 1.0
        for j in instance.customers:
            vals[f"y_{k}_{j}"] = 1.0 if served.get(j) == k else 0.0
            vals[f"s_{k}_{j}"] = instance.window(j)[0]
        for p, i in enumerate(seq):
            vals[f"s_{k}_{i}"] = r.start[p]
        vals[f"T_{k}"] = r.arrival
        vals[f"Phi_{k}"] = solution.profits.get(k, company_profit(instance, solution, k))
        if instance.electric:
            v = instance.vehicle(k)
            for i in [o] + list(instance.customers) + [m, n]:
                vals[f"b_{k}_{i}"] = v.battery_capacity
            for i in chargers:
                vals[f"d_{k}_{i}"] = 0.0
                vals[f"z_{k}_{i}"] = 0.0
                vals[f"ST_{k}_{i}"] = instance.nodes[i].service_time
            for p, i in enumerate(seq):
                vals[f"b_{k}_{i}"] = r.battery[p]
                if i in chargers:
                    delta = r.charge[p]
                    vals[f"d_{k}_{i}"] = delta
                    vals[f"z_{k}_{i}"] = 1.0 if delta > 0 else 0.0
                    vals[f"ST_{k}_{i}"] = instance.nodes[i].service_time + 60.0 * delta / instance.charge_rate(i)
    return vals


def write_values(values: Mapping[str, float], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text("".join(f"{k} {v!r}\n" for k, v in sorted(values.items())))
    return path


def read_values(path: Union[str, Path]) -> dict[str, float]:
    """Read ``var value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.replace("=", " ").split()
        if len(toks) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'name value'")
        out[toks[0]] = float(toks[1])
    return out


def values_to_solution(instance: Instance, values: Mapping[str, float], method: str = "milp") -> Solution:
    """Rebuild routes from arc values and take times and charges as given.

    The status is ``feasible`` only if the rebuilt solution validates.
    """
    n = instance.n_nodes
    meet: Optional[int] = None
    routes = []
    for k in COMPANIES:
        o = instance.depot(k)
        succ = {}
        for name, val in values.items():
            parts = name.split("_")
            if parts[0] == "x" and len(parts) == 4 and int(parts[1]) == k and val > 0.5:
                succ[int(parts[2])] = int(parts[3])
        seq = [o]
        while seq[-1] != n:
            nxt = succ.get(seq[-1])
            if nxt is None or len(seq) > n + 1:
                raise ValueError(f"arc values of vehicle {k} do not form a depot-to-depot path")
            seq.append(nxt)
        nodes = tuple(seq[:-1]) + (o,)
        for i in nodes:
            if i in instance.meet_points:
                meet = i
        keys = list(seq)
        start = tuple(values.get(f"s_{k}_{i}", 0.0) for i in keys)
        charge = tuple(values.get(f"d_{k}_{i}", 0.0) for i in keys)
        battery = tuple(values.get(f"b_{k}_{i}", 0.0) for i in keys) if instance.electric else ()
        routes.append(VehicleRoute(company=k, nodes=nodes, charge=charge, start=start, battery=battery))
    sol = Solution(routes=tuple(routes), meet_point=meet, method=method)
    costs = objective(instance, sol)
    profits = {k: company_profit(instance, sol, k) for k in COMPANIES}
    report = validate(instance, sol)
    return Solution(
        routes=sol.routes,
        meet_point=meet,
        profits=profits,
        total_cost=costs.total_cost,
        energy_cost=costs.energy_cost,
        labor_cost=costs.labor_cost,
        status=FEASIBLE if report.feasible else NO_FEASIBLE,
        method=method,
        info={"violations": report.violated_ids} if not report.feasible else {},
    )


def import_solution(instance: Instance, path: Union[str, Path]) -> Solution:
    """Solution from an external solver's ``var value`` file."""
    return values_to_solution(instance, read_values(path))
