"""Problem data: nodes, vehicles, costs and the two-company instance.

The node table is ordered depot-starts, customers, meet points.  A route of
company ``k`` starts and ends at the same depot node, so the depot-end role is
played by the depot-start node (index ``k - 1``).

Units are km, kWh, minutes and SEK throughout.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from . import gothenburg as _gbg

COMPANIES = (1, 2)
INF = math.inf


class InstanceError(ValueError):
    """Raised for malformed or inconsistent instance data."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class NodeKind(str, Enum):
    DEPOT = "depot"
    CUSTOMER = "customer"
    MEET = "meet"


class EvMode(str, Enum):
    ELECTRIC = "electric"
    CONVENTIONAL = "conventional"


class TwMode(str, Enum):
    ENFORCED = "enforced"
    IGNORED = "ignored"


@dataclass(frozen=True)
class Node:
    """One row of the node table.

    ``company`` is the owner for customers and depots and ``None`` for meet
    points.  ``charge_rate`` is the charger power in kW, ``None`` when the site
    has no charger.
    """

    label: str
    kind: NodeKind
    company: Optional[int] = None
    shared: bool = False
    demand: float = 0.0
    price: float = 0.0
    tw: tuple[float, float] = (0.0, INF)
    service_time: float = 0.0
    charge_rate: Optional[float] = None
    x: Optional[float] = None
    y: Optional[float] = None

    @property
    def is_customer(self) -> bool:
        return self.kind is NodeKind.CUSTOMER


@dataclass(frozen=True)
class VehicleParams:
    company: int
    capacity: float
    battery_capacity: float
    battery_min: float
    consumption: float = 1.0
    speed: float = 40.0


@dataclass(frozen=True)
class CostParams:
    energy_cost_electric: float = _gbg.ENERGY_COST_ELECTRIC
    energy_cost_conventional: float = _gbg.ENERGY_COST_CONVENTIONAL
    time_cost: float = _gbg.DRIVER_COST_PER_MIN
    max_wait: float = _gbg.MAX_WAIT_MIN
    profit_thresholds: Optional[tuple[float, float]] = None


@dataclass(frozen=True, eq=False)
class Instance:
    """Immutable two-company problem instance.

    ``distance`` holds ``inf`` for forbidden arcs.  Travel times default to
    ``distance / speed * 60`` per vehicle; ``travel_time_override`` replaces
    them for both vehicles when given.
    """

    nodes: tuple[Node, ...]
    distance: np.ndarray
    vehicles: tuple[VehicleParams, VehicleParams]
    costs: CostParams = field(default_factory=CostParams)
    ev_mode: EvMode = EvMode.ELECTRIC
    tw_mode: TwMode = TwMode.ENFORCED
    travel_time_override: Optional[np.ndarray] = None
    name: str = "instance"

    def __post_init__(self) -> None:
        dist = np.array(self.distance, dtype=float)
        dist.setflags(write=False)
        object.__setattr__(self, "distance", dist)
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        if self.travel_time_override is not None:
            tt = np.array(self.travel_time_override, dtype=float)
            tt.setflags(write=False)
            object.__setattr__(self, "travel_time_override", tt)
        _validate(self)

    # -- structure ---------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def depot(self, company: int) -> int:
        return company - 1

    @cached_property
    def customers(self) -> tuple[int, ...]:
        return tuple(i for i, n in enumerate(self.nodes) if n.kind is NodeKind.CUSTOMER)

    @cached_property
    def meet_points(self) -> tuple[int, ...]:
        return tuple(i for i, n in enumerate(self.nodes) if n.kind is NodeKind.MEET)

    def customers_of(self, company: int) -> tuple[int, ...]:
        return tuple(i for i in self.customers if self.nodes[i].company == company)

    def reserved_of(self, company: int) -> tuple[int, ...]:
        return tuple(i for i in self.customers_of(company) if not self.nodes[i].shared)

    def shared_of(self, company: int) -> tuple[int, ...]:
        return tuple(i for i in self.customers_of(company) if self.nodes[i].shared)

    def owner(self, node: int) -> Optional[int]:
        return self.nodes[node].company

    def index_of(self, label: str) -> int:
        try:
            return self._label_index[str(label)]
        except KeyError:
            raise KeyError(f"no node labelled {label!r}") from None

    @cached_property
    def _label_index(self) -> dict[str, int]:
        return {n.label: i for i, n in enumerate(self.nodes)}

    # -- derived parameters ------------------------------------------------

    @property
    def electric(self) -> bool:
        return self.ev_mode is EvMode.ELECTRIC

    @property
    def windows_enforced(self) -> bool:
        return self.tw_mode is TwMode.ENFORCED

    @property
    def c_d(self) -> float:
        if self.electric:
            return self.costs.energy_cost_electric
        return self.costs.energy_cost_conventional

    @property
    def c_t(self) -> float:
        return self.costs.time_cost

    @property
    def thresholds(self) -> Optional[tuple[float, float]]:
        return self.costs.profit_thresholds

    def vehicle(self, company: int) -> VehicleParams:
        return self.vehicles[company - 1]

    def window(self, node: int) -> tuple[float, float]:
        """Service-start window honoring ``tw_mode`` (customers only)."""
        n = self.nodes[node]
        if n.kind is NodeKind.CUSTOMER and not self.windows_enforced:
            return (0.0, INF)
        return n.tw

    def charge_rate(self, node: int) -> Optional[float]:
        if not self.electric:
            return None
        return self.nodes[node].charge_rate

    @cached_property
    def travel_time(self) -> np.ndarray:
        """Per-company travel-time matrices, shape ``(2, n, n)``, minutes."""
        if self.travel_time_override is not None:
            tt = np.stack([self.travel_time_override] * 2)
        else:
            tt = np.stack([self.distance / v.speed * 60.0 for v in self.vehicles])
        tt.setflags(write=False)
        return tt

    def tt(self, company: int) -> np.ndarray:
        return self.travel_time[company - 1]

    @cached_property
    def horizon(self) -> float:
        """Upper bound on any service start of an earliest-start schedule.

        Latest opening time plus, for every node, its service, its longest
        outgoing arc and (for EVs) the charging time of that arc's energy.
        """
        tt = np.where(np.isfinite(self.travel_time), self.travel_time, 0.0).max(axis=(0, 2))
        early = max(self.window(i)[0] for i in range(self.n_nodes))
        bound = early + sum(n.service_time for n in self.nodes) + float(tt.sum())
        rates = [n.charge_rate for n in self.nodes if n.charge_rate]
        if self.electric and rates:
            dist = np.where(np.isfinite(self.distance), self.distance, 0.0).max(axis=1)
            eps = max(v.consumption for v in self.vehicles)
            bound += 60.0 * eps * float(dist.sum()) / min(rates)
        return float(bound)

    @cached_property
    def big_m(self) -> float:
        """Big-M for timing rows: horizon + longest dwell (service and full charge) + longest arc."""
        rates = [n.charge_rate for n in self.nodes if n.charge_rate]
        charge = 0.0
        if self.electric and rates:
            charge = 60.0 * max(v.battery_capacity - v.battery_min for v in self.vehicles) / min(rates)
        finite = self.travel_time[np.isfinite(self.travel_time)]
        dwell = max(n.service_time for n in self.nodes) + charge
        return float(math.ceil(self.horizon + dwell + (finite.max() if finite.size else 0.0) + 1.0))

    def alpha(self, meet_point: int, customer: int) -> float:
        from .evaluator import profit_ratio

        return profit_ratio(self, self.owner(customer), meet_point, customer)

    # -- variants ----------------------------------------------------------

    def replace(self, **changes: Any) -> "Instance":
        return dataclasses.replace(self, **changes)

    def with_modes(self, ev_mode: Optional[EvMode] = None, tw_mode: Optional[TwMode] = None) -> "Instance":
        return self.replace(ev_mode=EvMode(ev_mode or self.ev_mode), tw_mode=TwMode(tw_mode or self.tw_mode))

    def with_thresholds(self, thresholds: Optional[Sequence[float]]) -> "Instance":
        th = None if thresholds is None else (float(thresholds[0]), float(thresholds[1]))
        return self.replace(costs=dataclasses.replace(self.costs, profit_thresholds=th))

    def with_shared(self, shared: Optional[Iterable[int]]) -> "Instance":
        """Mark exactly the given customer node indices as shared (``None``: all)."""
        keep = set(self.customers) if shared is None else set(shared)
        nodes = tuple(
            dataclasses.replace(n, shared=(i in keep)) if n.is_customer else n
            for i, n in enumerate(self.nodes)
        )
        return self.replace(nodes=nodes)

    def with_windows(self, windows: dict[int, tuple[float, float]]) -> "Instance":
        nodes = list(self.nodes)
        for i, tw in windows.items():
            nodes[i] = dataclasses.replace(nodes[i], tw=(float(tw[0]), float(tw[1])))
        return self.replace(nodes=tuple(nodes))

    def subset(self, customers: Iterable[int]) -> "Instance":
        """Instance restricted to the given customers (depots and meet points kept)."""
        keep = sorted(set(customers))
        idx = [i for i, n in enumerate(self.nodes) if not n.is_customer or i in keep]
        tto = None
        if self.travel_time_override is not None:
            tto = self.travel_time_override[np.ix_(idx, idx)]
        return self.replace(
            nodes=tuple(self.nodes[i] for i in idx),
            distance=self.distance[np.ix_(idx, idx)],
            travel_time_override=tto,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        if (self.travel_time_override is None) != (other.travel_time_override is None):
            return False
        if self.travel_time_override is not None and not np.array_equal(
            self.travel_time_override, other.travel_time_override
        ):
            return False
        return (
            self.name == other.name
            and self.nodes == other.nodes
            and self.vehicles == other.vehicles
            and self.costs == other.costs
            and self.ev_mode == other.ev_mode
            and self.tw_mode == other.tw_mode
            and self.distance.shape == other.distance.shape
            and np.array_equal(self.distance, other.distance)
        )

    __hash__ = None  # type: ignore[assignment]


def _validate(inst: Instance) -> None:
    nodes = inst.nodes
    n = len(nodes)
    if n < 3:
        raise InstanceError("need two depots and at least one meet point", "nodes")
    for k in COMPANIES:
        d = nodes[k - 1]
        if d.kind is not NodeKind.DEPOT or d.company != k:
            raise InstanceError(f"node {k - 1} must be the depot of company {k}", f"nodes[{k - 1}]")
    seen_meet = False
    for i, node in enumerate(nodes[2:], start=2):
        path = f"nodes[{i}]"
        if node.kind is NodeKind.DEPOT:
            raise InstanceError("depots must be the first two nodes", path)
        if node.kind is NodeKind.CUSTOMER:
            if seen_meet:
                raise InstanceError("customers must precede meet points", path)
            if node.company not in COMPANIES:
                raise InstanceError(f"customer company must be 1 or 2, got {node.company}", path)
            if node.demand < 0:
                raise InstanceError("negative demand", path + ".demand")
            if node.price < 0:
                raise InstanceError("negative price", path + ".price")
        else:
            seen_meet = True
            if node.service_time < 0:
                raise InstanceError("negative service time", path + ".service_time")
        e, l = node.tw
        if e > l:
            raise InstanceError(f"time window start {e} after end {l}", path + ".tw")
        if node.charge_rate is not None and node.charge_rate <= 0:
            raise InstanceError("charge rate must be positive", path + ".charge_rate")
    if not seen_meet:
        raise InstanceError("at least one meet point is required", "nodes")
    labels = [nd.label for nd in nodes]
    if len(set(labels)) != n:
        raise InstanceError("node labels must be unique", "nodes")

    dist = inst.distance
    if dist.shape != (n, n):
        raise InstanceError(f"distance must be {n}x{n}, got {dist.shape}", "distance")
    if np.isnan(dist).any():
        raise InstanceError("NaN distance", "distance")
    bad = np.argwhere(dist < 0)
    if bad.size:
        i, j = bad[0]
        raise InstanceError(f"negative distance {dist[i, j]}", f"distance[{i}][{j}]")
    if np.any(np.diag(dist) != 0):
        raise InstanceError("diagonal must be zero", "distance")
    if inst.travel_time_override is not None:
        tt = inst.travel_time_override
        if tt.shape != (n, n) or np.isnan(tt).any() or (tt < 0).any():
            raise InstanceError("travel_time must be a non-negative n x n matrix", "travel_time")

    if len(inst.vehicles) != 2:
        raise InstanceError("exactly two vehicles required", "vehicles")
    for k, v in zip(COMPANIES, inst.vehicles):
        path = f"vehicles[{k - 1}]"
        if v.company != k:
            raise InstanceError(f"vehicle {k - 1} must belong to company {k}", path)
        if not (0 <= v.battery_min < v.battery_capacity):
            raise InstanceError("need 0 <= battery_min < battery_capacity", path)
        if v.consumption <= 0 or v.speed <= 0 or v.capacity <= 0:
            raise InstanceError("consumption, speed and capacity must be positive", path)
    c = inst.costs
    if c.energy_cost_electric < 0 or c.energy_cost_conventional < 0 or c.time_cost < 0:
        raise InstanceError("cost rates must be non-negative", "costs")
    if c.max_wait < 0:
        raise InstanceError("max_wait must be non-negative", "costs.max_wait")


# -- JSON ------------------------------------------------------------------


def _num(x: float) -> Optional[float]:
    return None if x is None or math.isinf(x) else float(x)


def _matrix_to_json(m: np.ndarray) -> list[list[Optional[float]]]:
    return [[_num(v) for v in row] for row in m.tolist()]


def _matrix_from_json(rows: Any, path: str) -> np.ndarray:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise InstanceError("expected a list of rows", path)
    try:
        return np.array([[INF if v is None else float(v) for v in r] for r in rows], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"non-numeric entry ({exc})", path) from None


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    nodes = []
    for nd in inst.nodes:
        d: dict[str, Any] = {"label": nd.label, "kind": nd.kind.value}
        if nd.company is not None:
            d["company"] = nd.company
        if nd.is_customer:
            d.update(shared=nd.shared, demand=nd.demand, price=nd.price)
        d["tw"] = [nd.tw[0], _num(nd.tw[1])]
        d["service_time"] = nd.service_time
        d["charge_rate"] = nd.charge_rate
        if nd.x is not None:
            d["x"], d["y"] = nd.x, nd.y
        nodes.append(d)
    out: dict[str, Any] = {
        "name": inst.name,
        "nodes": nodes,
        "distance": _matrix_to_json(inst.distance),
        "vehicles": [dataclasses.asdict(v) for v in inst.vehicles],
        "costs": {
            "energy_cost_electric": inst.costs.energy_cost_electric,
            "energy_cost_conventional": inst.costs.energy_cost_conventional,
            "time_cost": inst.costs.time_cost,
            "max_wait": inst.costs.max_wait,
            "profit_thresholds": (
                list(inst.costs.profit_thresholds) if inst.costs.profit_thresholds else None
            ),
        },
        "modes": {"ev": inst.ev_mode.value, "tw": inst.tw_mode.value},
    }
    if inst.travel_time_override is not None:
        out["travel_time"] = _matrix_to_json(inst.travel_time_override)
    return out


def _field(d: dict, key: str, path: str, default: Any = ...) -> Any:
    if key in d:
        return d[key]
    if default is ...:
        raise InstanceError("missing field", f"{path}.{key}")
    return default


def instance_from_dict(data: dict[str, Any]) -> Instance:
    if not isinstance(data, dict):
        raise InstanceError("top level must be an object")
    raw_nodes = _field(data, "nodes", "$")
    if not isinstance(raw_nodes, list):
        raise InstanceError("expected a list", "nodes")
    nodes = []
    for i, nd in enumerate(raw_nodes):
        path = f"nodes[{i}]"
        try:
            kind = NodeKind(_field(nd, "kind", path))
        except ValueError:
            raise InstanceError(f"unknown kind {nd.get('kind')!r}", path + ".kind") from None
        tw = _field(nd, "tw", path, [0.0, None])
        if not isinstance(tw, list) or len(tw) != 2:
            raise InstanceError("tw must be [early, late]", path + ".tw")
        nodes.append(
            Node(
                label=str(_field(nd, "label", path)),
                kind=kind,
                company=nd.get("company"),
                shared=bool(nd.get("shared", False)),
                demand=float(nd.get("demand", 0.0)),
                price=float(nd.get("price", 0.0)),
                tw=(float(tw[0]), INF if tw[1] is None else float(tw[1])),
                service_time=float(nd.get("service_time", 0.0)),
                charge_rate=None if nd.get("charge_rate") is None else float(nd["charge_rate"]),
                x=None if nd.get("x") is None else float(nd["x"]),
                y=None if nd.get("y") is None else float(nd["y"]),
            )
        )
    if len(nodes) < 2 or any(nodes[k - 1].kind is not NodeKind.DEPOT for k in COMPANIES):
        raise InstanceError("missing depot: first two nodes must be depots", "nodes")
    distance = _matrix_from_json(_field(data, "distance", "$"), "distance")
    tto = None
    if data.get("travel_time") is not None:
        tto = _matrix_from_json(data["travel_time"], "travel_time")
    raw_veh = _field(data, "vehicles", "$")
    vehicles = []
    for i, v in enumerate(raw_veh):
        path = f"vehicles[{i}]"
        vehicles.append(
            VehicleParams(
                company=int(_field(v, "company", path)),
                capacity=float(_field(v, "capacity", path)),
                battery_capacity=float(_field(v, "battery_capacity", path)),
                battery_min=float(_field(v, "battery_min", path)),
                consumption=float(v.get("consumption", 1.0)),
                speed=float(v.get("speed", 40.0)),
            )
        )
    rc = data.get("costs", {})
    th = rc.get("profit_thresholds")
    costs = CostParams(
        energy_cost_electric=float(rc.get("energy_cost_electric", CostParams.energy_cost_electric)),
        energy_cost_conventional=float(
            rc.get("energy_cost_conventional", CostParams.energy_cost_conventional)
        ),
        time_cost=float(rc.get("time_cost", CostParams.time_cost)),
        max_wait=float(rc.get("max_wait", CostParams.max_wait)),
        profit_thresholds=None if th is None else (float(th[0]), float(th[1])),
    )
    modes = data.get("modes", {})
    try:
        ev_mode = EvMode(modes.get("ev", "electric"))
        tw_mode = TwMode(modes.get("tw", "enforced"))
    except ValueError as exc:
        raise InstanceError(str(exc), "modes") from None
    return Instance(
        nodes=tuple(nodes),
        distance=distance,
        vehicles=tuple(vehicles),
        costs=costs,
        ev_mode=ev_mode,
        tw_mode=tw_mode,
        travel_time_override=tto,
        name=str(data.get("name", "instance")),
    )


def save_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1))


def load_instance(path: str | Path) -> Instance:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return instance_from_dict(data)


# -- built-in and generated instances -------------------------------------


def builtin_gothenburg(
    ev_mode: EvMode = EvMode.ELECTRIC,
    tw_mode: TwMode = TwMode.ENFORCED,
    shared: Optional[Iterable[int]] = None,
    thresholds: Optional[Sequence[float]] = None,
) -> Instance:
    """The Gothenburg case.

    ``shared`` lists the store numbers (1-17) open to collaboration; ``None``
    shares every store.  Demands default to 1 unit and capacities to the total
    number of stores, so capacity never binds.
    """
    share = set(range(1, 18)) if shared is None else {int(s) for s in shared}
    site = {lab: i for i, lab in enumerate(_gbg.SITE_LABELS)}
    order = ["D1", "D2"] + [str(i) for i in range(1, 18)] + ["m1", "m2"]
    nodes = [
        Node("D1", NodeKind.DEPOT, company=1),
        Node("D2", NodeKind.DEPOT, company=2),
    ]
    for c in range(1, 18):
        nodes.append(
            Node(
                label=str(c),
                kind=NodeKind.CUSTOMER,
                company=1 if c in _gbg.COMPANY_R_CUSTOMERS else 2,
                shared=c in share,
                demand=1.0,
                price=_gbg.SERVICE_FEE,
                tw=tuple(float(t) for t in _gbg.TIME_WINDOWS[c]),
                service_time=_gbg.CUSTOMER_SERVICE_MIN,
                charge_rate=_gbg.CHARGE_RATE_KW,
            )
        )
    for m in ("m1", "m2"):
        nodes.append(
            Node(m, NodeKind.MEET, service_time=_gbg.MEET_SERVICE_MIN, charge_rate=_gbg.CHARGE_RATE_KW)
        )
    rows = [_gbg.DISTANCE_ROWS[site[a]] for a in order]
    distance = np.array(
        [[INF if rows[i][site[b]] is None else rows[i][site[b]] for b in order] for i in range(len(order))]
    )
    vehicles = tuple(
        VehicleParams(
            company=k,
            capacity=17.0,
            battery_capacity=_gbg.BATTERY_KWH,
            battery_min=_gbg.BATTERY_MIN_KWH,
            consumption=_gbg.CONSUMPTION_KWH_PER_KM,
            speed=_gbg.SPEED_KMH,
        )
        for k in COMPANIES
    )
    inst = Instance(
        nodes=tuple(nodes),
        distance=distance,
        vehicles=vehicles,
        costs=CostParams(),
        ev_mode=EvMode(ev_mode),
        tw_mode=TwMode(tw_mode),
        name="gothenburg",
    )
    return inst.with_thresholds(thresholds) if thresholds is not None else inst


def customer_index(inst: Instance, store: int) -> int:
    """Node index of Gothenburg store number ``store``."""
    return inst.index_of(str(store))


# Slot length (minutes) of the two-slot windows, by customer count.
_SLOT_POINTS = ((100, 240.0), (200, 420.0), (500, 840.0))


def slot_length(n_customers: int) -> float:
    xs, ys = zip(*_SLOT_POINTS)
    return float(np.interp(n_customers, xs, ys))


def generate_instance(
    n_customers: int,
    region_km: float = 25.0,
    seed: int = 0,
    tw_slots: Optional[str] = None,
    n_meet_points: int = 2,
    price: float = 50.0,
    battery_capacity: float = 200.0,
    battery_min: float = 12.0,
    shared_fraction: float = 1.0,
    ev_mode: EvMode = EvMode.ELECTRIC,
) -> Instance:
    """Random Euclidean instance in a ``region_km`` square.

    Depots sit at the midpoints of the left and right edges, meet points are
    drawn from the central 20% band of the square, and customers uniformly.
    ``tw_slots="two-slot"`` gives every customer one of two back-to-back slots
    ``[0, S]`` or ``[S, 2S]``; otherwise windows span ``[0, inf)``.
    """
    if n_customers < 2 or n_customers % 2:
        raise ValueError(f"n_customers must be an even number >= 2, got {n_customers}")
    if tw_slots not in (None, "none", "two-slot"):
        raise ValueError(f"unknown tw_slots {tw_slots!r}")
    rng = np.random.default_rng(seed)
    half = n_customers // 2
    depots = np.array([[0.0, region_km / 2], [region_km, region_km / 2]])
    lo, hi = 0.4 * region_km, 0.6 * region_km
    meets = rng.uniform(lo, hi, size=(n_meet_points, 2))
    custs = rng.uniform(0.0, region_km, size=(n_customers, 2))
    owners = [1] * half + [2] * half
    n_shared = int(round(shared_fraction * half))
    shared_flags = [i % half < n_shared for i in range(n_customers)]
    slot = slot_length(n_customers)
    slots = rng.integers(0, 2, size=n_customers) if tw_slots == "two-slot" else None

    nodes = [
        Node("D1", NodeKind.DEPOT, company=1, x=float(depots[0, 0]), y=float(depots[0, 1])),
        Node("D2", NodeKind.DEPOT, company=2, x=float(depots[1, 0]), y=float(depots[1, 1])),
    ]
    for i in range(n_customers):
        tw = (0.0, INF) if slots is None else (slot * slots[i], slot * (slots[i] + 1))
        nodes.append(
            Node(
                label=f"c{i + 1}",
                kind=NodeKind.CUSTOMER,
                company=owners[i],
                shared=shared_flags[i],
                demand=1.0,
                price=price,
                tw=tw,
                service_time=_gbg.CUSTOMER_SERVICE_MIN,
                charge_rate=_gbg.CHARGE_RATE_KW,
                x=float(custs[i, 0]),
                y=float(custs[i, 1]),
            )
        )
    for j in range(n_meet_points):
        nodes.append(
            Node(
                f"m{j + 1}",
                NodeKind.MEET,
                service_time=_gbg.MEET_SERVICE_MIN,
                charge_rate=_gbg.CHARGE_RATE_KW,
                x=float(meets[j, 0]),
                y=float(meets[j, 1]),
            )
        )
    xy = np.array([[n.x, n.y] for n in nodes])
    distance = np.round(np.linalg.norm(xy[:, None, :] - xy[None, :, :], axis=2), 6)
    vehicles = tuple(
        VehicleParams(
            company=k,
            capacity=float(n_customers),
            battery_capacity=battery_capacity,
            battery_min=battery_min,
            consumption=_gbg.CONSUMPTION_KWH_PER_KM,
            speed=_gbg.SPEED_KMH,
        )
        for k in COMPANIES
    )
    return Instance(
        nodes=tuple(nodes),
        distance=distance,
        vehicles=vehicles,
        costs=CostParams(),
        ev_mode=EvMode(ev_mode),
        tw_mode=TwMode.ENFORCED,
        name=f"gen-{n_customers}-{seed}" + ("-tw" if slots is not None else ""),
    )


# -- solutions -------------------------------------------------------------

FEASIBLE = "feasible"
NO_FEASIBLE = "no-feasible-solution"
BEST_EFFORT = "best-effort"


@dataclass(frozen=True, eq=False)
class VehicleRoute:
    """One vehicle's visit sequence with per-position schedule.

    ``charge``, ``start`` and ``battery`` are aligned with ``nodes``:
    charge amount (kWh), service start (min) and arrival battery (kWh).
    ``battery`` is empty for conventional vehicles.
    """

    company: int
    nodes: tuple[int, ...]
    charge: tuple[float, ...] = ()
    start: tuple[float, ...] = ()
    battery: tuple[float, ...] = ()
    vehicle: int = 0

    @property
    def arrival(self) -> float:
        return self.start[-1] if self.start else 0.0

    @property
    def customers(self) -> tuple[int, ...]:
        return self.nodes[1:-1]

    def position(self, node: int) -> int:
        return self.nodes.index(node)


@dataclass(frozen=True, eq=False)
class Solution:
    """Two-vehicle collaborative solution, or a single-company baseline.

    A baseline has one route and ``meet_point is None``.
    """

    routes: tuple[VehicleRoute, ...]
    meet_point: Optional[int]
    profits: dict[int, float] = field(default_factory=dict)
    total_cost: float = 0.0
    energy_cost: float = 0.0
    labor_cost: float = 0.0
    status: str = FEASIBLE
    method: str = ""
    info: dict[str, Any] = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE

    @property
    def collaborative(self) -> bool:
        return self.meet_point is not None

    def route_of(self, company: int) -> VehicleRoute:
        for r in self.routes:
            if r.company == company:
                return r
        raise KeyError(f"no route for company {company}")

    def served_by(self) -> dict[int, int]:
        """Customer node -> company whose vehicle delivers it."""
        out: dict[int, int] = {}
        for r in self.routes:
            for j in r.customers:
                out.setdefault(j, r.company)
        return out


@dataclass(frozen=True, eq=False)
class MultiVehicleSolution:
    """Several vehicles per company; ``pairings`` are ``(v1, v2, meet)`` with
    ``v1``/``v2`` indices into ``routes`` (company 1 and company 2 vehicles),
    ``transfers`` are ``(customer, meet)`` exchanges."""

    routes: tuple[VehicleRoute, ...]
    pairings: tuple[tuple[int, int, int], ...] = ()
    transfers: tuple[tuple[int, int], ...] = ()


def solution_to_dict(inst: Instance, sol: Solution) -> dict[str, Any]:
    lab = [n.label for n in inst.nodes]
    return {
        "instance": inst.name,
        "status": sol.status,
        "method": sol.method,
        "meet_point": None if sol.meet_point is None else lab[sol.meet_point],
        "total_cost": sol.total_cost,
        "energy_cost": sol.energy_cost,
        "labor_cost": sol.labor_cost,
        "profits": {str(k): v for k, v in sol.profits.items()},
        "routes": [
            {
                "company": r.company,
                "nodes": [lab[i] for i in r.nodes],
                "charge": list(r.charge),
                "start": list(r.start),
                "battery": list(r.battery),
                "arrival": r.arrival,
            }
            for r in sol.routes
        ],
        "info": sol.info,
    }


def solution_from_dict(inst: Instance, data: dict[str, Any]) -> Solution:
    routes = tuple(
        VehicleRoute(
            company=int(r["company"]),
            nodes=tuple(inst.index_of(x) for x in r["nodes"]),
            charge=tuple(float(v) for v in r.get("charge", [])),
            start=tuple(float(v) for v in r.get("start", [])),
            battery=tuple(float(v) for v in r.get("battery", [])),
        )
        for r in data["routes"]
    )
    mp = data.get("meet_point")
    return Solution(
        routes=routes,
        meet_point=None if mp is None else inst.index_of(mp),
        profits={int(k): float(v) for k, v in data.get("profits", {}).items()},
        total_cost=float(data.get("total_cost", 0.0)),
        energy_cost=float(data.get("energy_cost", 0.0)),
        labor_cost=float(data.get("labor_cost", 0.0)),
        status=data.get("status", FEASIBLE),
        method=data.get("method", ""),
        info=dict(data.get("info", {})),
    )


def save_solution(inst: Instance, sol: Solution, path: str | Path) -> None:
    Path(path).write_text(json.dumps(solution_to_dict(inst, sol), indent=1))


def load_solution(inst: Instance, path: str | Path) -> Solution:
    return solution_from_dict(inst, json.loads(Path(path).read_text()))
