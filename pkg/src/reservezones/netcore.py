"""DC network data model, case-file ingestion and PTDF/incidence matrices.

Conventions
-----------
- Bus ids are dense ``1..N``; every other element id is dense ``1..K`` too.
- Branch incidence ``H`` has ``-1`` at the from-bus and ``+1`` at the to-bus of
  each line, so ``H = H_T - H_F``. Positive flow means from -> to.
- All quantities are MW and $ for a single period.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np


class CaseError(ValueError):
    """Raised when a case document is malformed or violates a network invariant."""


@dataclass(frozen=True)
class Bus:
    id: int
    load: float = 0.0


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    reactance: float
    rating: float


@dataclass(frozen=True)
class Generator:
    id: int
    bus: int
    p_min: float
    p_max: float
    energy_cost: float
    res_up_cost: float
    res_dn_cost: float
    res_up_cap: float
    res_dn_cap: float


@dataclass(frozen=True)
class WindFarm:
    id: int
    bus: int
    capacity: float
    point_forecast: float


@dataclass(frozen=True)
class PowerNetwork:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    wind_farms: tuple[WindFarm, ...]
    slack_bus: int = 1
    curtail_cost: float = 0.0
    shed_cost: float = 0.0
    name: str = ""

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_line(self) -> int:
        return len(self.lines)

    @property
    def n_gen(self) -> int:
        return len(self.generators)

    @property
    def n_wind(self) -> int:
        return len(self.wind_farms)

    @property
    def loads(self) -> np.ndarray:
        return np.array([b.load for b in self.buses], dtype=float)

    @property
    def wind_forecast(self) -> np.ndarray:
        return np.array([w.point_forecast for w in self.wind_farms], dtype=float)

    @property
    def wind_capacity(self) -> np.ndarray:
        return np.array([w.capacity for w in self.wind_farms], dtype=float)

    def neighbors(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {b.id: set() for b in self.buses}
        for ln in self.lines:
            adj[ln.from_bus].add(ln.to_bus)
            adj[ln.to_bus].add(ln.from_bus)
        return adj

    def with_changes(self, **kwargs) -> "PowerNetwork":
        from dataclasses import replace

        return replace(self, **kwargs)


@dataclass(frozen=True)
class GridMatrices:
    """Dense matrices of the DC approximation (rows: lines/gens/farms, cols: buses)."""

    ptdf: np.ndarray
    branch_incidence: np.ndarray
    from_incidence: np.ndarray
    to_incidence: np.ndarray
    gen_map: np.ndarray
    wind_map: np.ndarray

    def flows(self, injection: np.ndarray) -> np.ndarray:
        return self.ptdf @ np.asarray(injection, dtype=float)


@dataclass
class NetworkReport:
    connected: bool
    islanded_buses: list[int] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------------------
# case documents

_REQUIRED = {
    "buses": ("id", "load"),
    "lines": ("id", "from", "to", "reactance", "rating"),
    "generators": ("id", "bus", "p_min", "p_max", "c", "c_up", "c_dn", "r_up_max", "r_dn_max"),
    "wind": ("id", "bus", "capacity", "forecast"),
}


def _num(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CaseError(f"{where}: expected a number, got {value!r}")
    if not np.isfinite(value):
        raise CaseError(f"{where}: value must be finite")
    return float(value)


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise CaseError(f"{where}: expected an integer, got {value!r}")
    return int(value)


def _records(doc: dict, key: str) -> list[dict]:
    items = doc.get(key, [] if key == "wind" else None)
    if items is None:
        raise CaseError(f"case document is missing '{key}'")
    if not isinstance(items, list):
        raise CaseError(f"'{key}' must be a list")
    for k, item in enumerate(items):
        if not isinstance(item, dict):
            raise CaseError(f"{key}[{k}] must be a mapping")
        missing = [f for f in _REQUIRED[key] if f not in item]
        if missing:
            ident = item.get("id", k)
            raise CaseError(f"{key} id={ident}: missing field(s) {', '.join(missing)}")
    return items


def _check_dense(ids: list[int], what: str) -> None:
    if sorted(ids) != list(range(1, len(ids) + 1)):
        raise CaseError(f"{what} ids must be dense 1..{len(ids)}, got {sorted(ids)}")


def load_case(source: dict | str | Path) -> PowerNetwork:
    """Parse and validate a case document.

    ``source`` may be an already-decoded mapping, a path to a JSON file, or the
    name of a bundled case (``ring4``, ``congested4``, ``house5``, ``mesh6``, ``grid8``,
    ``rts24``, ``rts96``).
    """
    if isinstance(source, (str, Path)):
        doc = _read_document(source)
    else:
        doc = source
    if not isinstance(doc, dict):
        raise CaseError("case document must be a mapping")

    buses = []
    for item in _records(doc, "buses"):
        bid = _int(item["id"], "bus id")
        load = _num(item["load"], f"bus {bid} load")
        if load < 0:
            raise CaseError(f"bus {bid}: load must be >= 0")
        buses.append(Bus(bid, load))
    _check_dense([b.id for b in buses], "bus")
    buses.sort(key=lambda b: b.id)
    n_bus = len(buses)
    if n_bus == 0:
        raise CaseError("case has no buses")

    def bus_ref(value: Any, where: str) -> int:
        bid = _int(value, where)
        if not 1 <= bid <= n_bus:
            raise CaseError(f"{where} refers to nonexistent bus {bid}")
        return bid

    lines = []
    for item in _records(doc, "lines"):
        lid = _int(item["id"], "line id")
        fb = bus_ref(item["from"], f"line {lid} 'from'")
        tb = bus_ref(item["to"], f"line {lid} 'to'")
        if fb == tb:
            raise CaseError(f"line {lid}: from_bus equals to_bus ({fb})")
        x = _num(item["reactance"], f"line {lid} reactance")
        rating = _num(item["rating"], f"line {lid} rating")
        if x <= 0:
            raise CaseError(f"line {lid}: reactance must be > 0")
        if rating <= 0:
            raise CaseError(f"line {lid}: rating must be > 0")
        lines.append(Line(lid, fb, tb, x, rating))
    _check_dense([ln.id for ln in lines], "line")
    lines.sort(key=lambda ln: ln.id)

    gens = []
    for item in _records(doc, "generators"):
        gid = _int(item["id"], "generator id")
        where = f"generator {gid}"
        g = Generator(
            id=gid,
            bus=bus_ref(item["bus"], f"{where} 'bus'"),
            p_min=_num(item["p_min"], f"{where} p_min"),
            p_max=_num(item["p_max"], f"{where} p_max"),
            energy_cost=_num(item["c"], f"{where} c"),
            res_up_cost=_num(item["c_up"], f"{where} c_up"),
            res_dn_cost=_num(item["c_dn"], f"{where} c_dn"),
            res_up_cap=_num(item["r_up_max"], f"{where} r_up_max"),
            res_dn_cap=_num(item["r_dn_max"], f"{where} r_dn_max"),
        )
        if not 0 <= g.p_min <= g.p_max:
            raise CaseError(f"{where}: require 0 <= p_min <= p_max")
        if g.res_up_cap < 0 or g.res_dn_cap < 0:
            raise CaseError(f"{where}: reserve capacities must be >= 0")
        span = g.p_max - g.p_min
        if g.res_up_cap > span + 1e-9 or g.res_dn_cap > span + 1e-9:
            raise CaseError(f"{where}: reserve capacity exceeds p_max - p_min")
        gens.append(g)
    _check_dense([g.id for g in gens], "generator")
    gens.sort(key=lambda g: g.id)

    farms = []
    for item in _records(doc, "wind"):
        wid = _int(item["id"], "wind id")
        where = f"wind farm {wid}"
        w = WindFarm(
            id=wid,
            bus=bus_ref(item["bus"], f"{where} 'bus'"),
            capacity=_num(item["capacity"], f"{where} capacity"),
            point_forecast=_num(item["forecast"], f"{where} forecast"),
        )
        if not 0 <= w.point_forecast <= w.capacity:
            raise CaseError(f"{where}: require 0 <= forecast <= capacity")
        farms.append(w)
    _check_dense([w.id for w in farms], "wind farm")
    farms.sort(key=lambda w: w.id)

    pen = doc.get("penalties")
    if not isinstance(pen, dict) or "curtail" not in pen or "shed" not in pen:
        raise CaseError("case document needs penalties{curtail, shed}")
    curtail = _num(pen["curtail"], "penalties.curtail")
    shed = _num(pen["shed"], "penalties.shed")
    max_c = max((g.energy_cost for g in gens), default=0.0)
    if not shed > curtail > max_c:
        raise CaseError(
            f"penalty ordering violated: need shed ({shed}) > curtail ({curtail}) "
            f"> max generator energy cost ({max_c})"
        )
    slack = bus_ref(doc.get("slack", 1), "slack")

    net = PowerNetwork(
        buses=tuple(buses),
        lines=tuple(lines),
        generators=tuple(gens),
        wind_farms=tuple(farms),
        slack_bus=slack,
        curtail_cost=curtail,
        shed_cost=shed,
        name=str(doc.get("name", "")),
    )
    islands = _islanded(net)
    if islands:
        raise CaseError(f"network graph is disconnected; unreachable buses {islands}")
    return net


def export_case(net: PowerNetwork) -> dict:
    """Canonical document form; ``load_case(export_case(net)) == net``."""
    doc: dict[str, Any] = {}
    if net.name:
        doc["name"] = net.name
    doc["buses"] = [{"id": b.id, "load": b.load} for b in net.buses]
    doc["lines"] = [
        {"id": ln.id, "from": ln.from_bus, "to": ln.to_bus, "reactance": ln.reactance, "rating": ln.rating}
        for ln in net.lines
    ]
    doc["generators"] = [
        {
            "id": g.id, "bus": g.bus, "p_min": g.p_min, "p_max": g.p_max,
            "c": g.energy_cost, "c_up": g.res_up_cost, "c_dn": g.res_dn_cost,
            "r_up_max": g.res_up_cap, "r_dn_max": g.res_dn_cap,
        }
        for g in net.generators
    ]
    doc["wind"] = [
        {"id": w.id, "bus": w.bus, "capacity": w.capacity, "forecast": w.point_forecast}
        for w in net.wind_farms
    ]
    doc["penalties"] = {"curtail": net.curtail_cost, "shed": net.shed_cost}
    doc["slack"] = net.slack_bus
    return doc


BUNDLED_CASES = ("ring4", "congested4", "house5", "mesh6", "grid8", "rts24", "rts96")


def _read_document(source: str | Path) -> dict:
    if isinstance(source, str) and source in BUNDLED_CASES:
        text = resources.files("reservezones.data").joinpath(f"{source}.json").read_text()
        return json.loads(text)
    path = Path(source)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise CaseError(f"cannot read case file {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseError(f"{path}: not valid JSON ({exc})") from exc


def _islanded(net: PowerNetwork) -> list[int]:
    adj = net.neighbors()
    start = net.buses[0].id
    seen = {start}
    queue = deque([start])
    while queue:
        n = queue.popleft()
        for m in adj[n]:
            if m not in seen:
                seen.add(m)
                queue.append(m)
    return sorted(set(adj) - seen)


# ---------------------------------------------------------------------------
# matrices

def build_matrices(net: PowerNetwork) -> GridMatrices:
    """PTDF and incidence matrices of ``net``.

    The PTDF comes from a dense solve of the reduced susceptance matrix with
    the slack bus removed, so its slack column is identically zero.
    """
    n, L = net.n_bus, net.n_line
    h_from = np.zeros((L, n))
    h_to = np.zeros((L, n))
    for k, ln in enumerate(net.lines):
        h_from[k, ln.from_bus - 1] = 1.0
        h_to[k, ln.to_bus - 1] = 1.0
    H = h_to - h_from
    b = np.array([1.0 / ln.reactance for ln in net.lines])
    bbus = H.T @ (b[:, None] * H)
    keep = [i for i in range(n) if i != net.slack_bus - 1]
    bred = bbus[np.ix_(keep, keep)]
    ptdf = np.zeros((L, n))
    if keep:
        try:
            cond = np.linalg.cond(bred)
        except np.linalg.LinAlgError:
            cond = np.inf
        if not np.isfinite(cond) or cond > 1e12:
            raise CaseError("reduced susceptance matrix is singular (disconnected or degenerate reactances)")
        theta = np.linalg.solve(bred, np.eye(len(keep)))
        # flow from->to = (theta_from - theta_to) * b = -b * (H @ theta)
        ptdf[:, keep] = -(b[:, None] * H[:, keep]) @ theta
    gen_map = np.zeros((net.n_gen, n))
    for k, g in enumerate(net.generators):
        gen_map[k, g.bus - 1] = 1.0
    wind_map = np.zeros((net.n_wind, n))
    for k, w in enumerate(net.wind_farms):
        wind_map[k, w.bus - 1] = 1.0
    for arr in (ptdf, H, h_from, h_to, gen_map, wind_map):
        arr.setflags(write=False)
    return GridMatrices(ptdf, H, h_from, h_to, gen_map, wind_map)


def verify_network(net: PowerNetwork) -> NetworkReport:
    """Diagnostics only: connectivity, islanded buses and capacity adequacy."""
    islands = _islanded(net)
    report = NetworkReport(connected=not islands, islanded_buses=islands)
    for bid in islands:
        report.violations.append(f"islanded bus {bid}")
    supply = sum(g.p_max for g in net.generators) + sum(w.capacity for w in net.wind_farms)
    demand = float(net.loads.sum())
    if supply < demand:
        report.warnings.append(
            f"capacity adequacy: total capacity {supply:.1f} MW < total load {demand:.1f} MW"
        )
    return report
