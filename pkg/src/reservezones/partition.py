"""Grid partitioning: MILP constraint block, extraction, and graph oracles.

Connectivity of every zone uses a single-commodity flow: ``y_z`` units are
injected at one root node per zone and each member node absorbs one unit,
with unit flows only allowed on lines whose two endpoints sit in the zone.
Zone ids are 1-based throughout; ``Partition.zone_index`` gives 0-based ids.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .milp import (BINARY, INTEGER, LinExpr, MilpModel, ProductHandle, Solution,
                   linearize_bin_int_product, quicksum)
from .netcore import PowerNetwork

MAX_ENUMERATION_NODES = 12


class PartitionError(ValueError):
    """Invalid sizing, or a solution that does not describe a partition."""


@dataclass
class PartitionVars:
    """Variables of the partitioning block; ``[n][z]`` uses 0-based indices."""

    n_zones: int
    x: list
    c: list
    y: list
    phi: list
    u: list  # u[n][z] = c[n][z] * y[z]
    v: list  # v[n][z] = x[n][z] * y[z]; Phi_F / Phi_T reuse these
    line_ends: list[tuple[int, int]]
    y_min: int
    y_max: int
    handles: list[ProductHandle] = field(default_factory=list)

    def phi_from(self, line: int, z: int):
        return self.v[self.line_ends[line][0]][z]

    def phi_to(self, line: int, z: int):
        return self.v[self.line_ends[line][1]][z]


@dataclass(frozen=True)
class Partition:
    zone_of: tuple[int, ...]  # zone id (1..Z) per bus, bus order
    roots: tuple[int, ...]  # root bus id per zone
    sizes: tuple[int, ...]
    cross_zonal_lines: frozenset[int]

    @property
    def n_zones(self) -> int:
        return len(self.sizes)

    @property
    def zone_index(self) -> np.ndarray:
        return np.asarray(self.zone_of, dtype=int) - 1

    def members(self, zone: int) -> list[int]:
        return [n + 1 for n, z in enumerate(self.zone_of) if z == zone]

    def blocks(self) -> frozenset[frozenset[int]]:
        """Unlabelled view: the set of node sets."""
        return frozenset(frozenset(self.members(z)) for z in range(1, self.n_zones + 1))

    def to_dict(self) -> dict:
        return {"zone_of": list(self.zone_of), "roots": list(self.roots),
                "sizes": list(self.sizes), "cross_zonal_lines": sorted(self.cross_zonal_lines)}


def _cross_lines(net: PowerNetwork, zone_of) -> frozenset[int]:
    return frozenset(ln.id for ln in net.lines
                     if zone_of[ln.from_bus - 1] != zone_of[ln.to_bus - 1])


def make_partition(net: PowerNetwork, zone_of, roots=None) -> Partition:
    """Build a :class:`Partition` from zone ids; roots default to the smallest member."""
    zone_of = tuple(int(z) for z in zone_of)
    if len(zone_of) != net.n_bus:
        raise PartitionError(f"zone_of has {len(zone_of)} entries for {net.n_bus} buses")
    Z = max(zone_of)
    sizes = tuple(zone_of.count(z) for z in range(1, Z + 1))
    if roots is None:
        roots = tuple(zone_of.index(z) + 1 if z in zone_of else 0 for z in range(1, Z + 1))
    return Partition(zone_of, tuple(int(r) for r in roots), sizes, _cross_lines(net, zone_of))


# ---------------------------------------------------------------------------
# MILP block

def emit_partition_block(model: MilpModel, net: PowerNetwork, n_zones: int, y_min: int = 1,
                         y_max: int | None = None, symmetry_breaking: bool = True,
                         prefix: str = "") -> PartitionVars:
    """Add assignment, sizing, root-selection and unit-flow connectivity rows.

    With ``symmetry_breaking`` each zone's root is its smallest node and roots
    increase with the zone index, so every partition has exactly one feasible
    labelling (the one ordered by smallest member).
    """
    N, Z = net.n_bus, int(n_zones)
    y_max = N if y_max is None else int(y_max)
    if Z < 1:
        raise PartitionError("number of zones must be at least 1")
    if y_min < 1:
        raise PartitionError("minimum zone size must be at least 1")
    if Z * y_min > N:
        raise PartitionError(f"Z*y_min <= N violated: {Z}*{y_min} = {Z * y_min} > {N} buses")
    if Z * y_max < N:
        raise PartitionError(f"Z*y_max >= N violated: {Z}*{y_max} = {Z * y_max} < {N} buses")
    if y_min > y_max:
        raise PartitionError(f"y_min={y_min} exceeds y_max={y_max}")
    pf = prefix
    x = [[model.add_var(f"{pf}x_{n + 1}_{z + 1}", kind=BINARY) for z in range(Z)] for n in range(N)]
    c = [[model.add_var(f"{pf}c_{n + 1}_{z + 1}", kind=BINARY) for z in range(Z)] for n in range(N)]
    y = [model.add_var(f"{pf}y_{z + 1}", lb=y_min, ub=y_max, kind=INTEGER) for z in range(Z)]
    phi = [[model.add_var(f"{pf}phi_{ln.id}_{z + 1}", lb=-y_max, ub=y_max) for z in range(Z)]
           for ln in net.lines]
    ends = [(ln.from_bus - 1, ln.to_bus - 1) for ln in net.lines]

    for n in range(N):
        model.add_eq(quicksum(x[n]), 1.0, f"{pf}assign_{n + 1}")
        model.add_le(quicksum(c[n]), 1.0, f"{pf}root_excl_{n + 1}")
    for z in range(Z):
        model.add_eq(y[z] - quicksum(x[n][z] for n in range(N)), 0.0, f"{pf}size_{z + 1}")
        model.add_eq(quicksum(c[n][z] for n in range(N)), 1.0, f"{pf}root_one_{z + 1}")

    handles: list[ProductHandle] = []
    u = [[None] * Z for _ in range(N)]
    v = [[None] * Z for _ in range(N)]
    for n in range(N):
        for z in range(Z):
            hu = linearize_bin_int_product(model, c[n][z], y[z], y_min, y_max,
                                           f"{pf}u_{n + 1}_{z + 1}")
            hv = linearize_bin_int_product(model, x[n][z], y[z], 0.0, float(N),
                                           f"{pf}v_{n + 1}_{z + 1}")
            u[n][z], v[n][z] = hu.aux, hv.aux
            handles += [hu, hv]

    # nodal unit balance: inflow + injection at the root = one unit retained
    incid = [[] for _ in range(N)]
    for k, (f, t) in enumerate(ends):
        incid[f].append((k, -1.0))
        incid[t].append((k, 1.0))
    for n in range(N):
        for z in range(Z):
            e = LinExpr()
            for k, sgn in incid[n]:
                e.add(phi[k][z], sgn)
            e.add(u[n][z]).add(x[n][z], -1.0)
            model.add_eq(e, 0.0, f"{pf}unit_bal_{n + 1}_{z + 1}")
    # unit flows only inside a zone
    for k, (f, t) in enumerate(ends):
        lid = net.lines[k].id
        for z in range(Z):
            for tag, aux in (("F", v[f][z]), ("T", v[t][z])):
                model.add_le(phi[k][z] - aux, 0.0, f"{pf}phi{tag}_up_{lid}_{z + 1}")
                model.add_ge(phi[k][z] + aux, 0.0, f"{pf}phi{tag}_dn_{lid}_{z + 1}")

    if symmetry_breaking:
        for z in range(Z):
            for n in range(1, N):
                # a root has no smaller-numbered node in its zone
                model.add_le(quicksum(x[m][z] for m in range(n)) + n * LinExpr.of(c[n][z]), float(n),
                             f"{pf}root_min_{n + 1}_{z + 1}")
        for z in range(Z - 1):
            a = quicksum((n + 1) * LinExpr.of(c[n][z]) for n in range(N))
            b = quicksum((n + 1) * LinExpr.of(c[n][z + 1]) for n in range(N))
            model.add_le(a - b, -1.0, f"{pf}root_order_{z + 1}")
    return PartitionVars(Z, x, c, y, phi, u, v, ends, int(y_min), int(y_max), handles)


def extract_partition(solution: Solution, pv: PartitionVars, net: PowerNetwork,
                      tol: float = 1e-4) -> Partition:
    """Round the assignment binaries of ``solution`` into a :class:`Partition`."""
    X = np.array([[solution.value(pv.x[n][z]) for z in range(pv.n_zones)] for n in range(len(pv.x))])
    C = np.array([[solution.value(pv.c[n][z]) for z in range(pv.n_zones)] for n in range(len(pv.c))])
    for arr, what in ((X, "x"), (C, "c")):
        off = np.abs(arr - np.round(arr))
        if off.max(initial=0.0) > tol:
            n, z = np.unravel_index(off.argmax(), off.shape)
            raise PartitionError(f"non-integral {what}[{n + 1},{z + 1}] = {arr[n, z]:.6g}")
    Xb = X > 0.5
    if np.any(Xb.sum(axis=1) != 1):
        raise PartitionError("assignment binaries do not place every node in exactly one zone")
    zone_of = tuple(int(z) + 1 for z in Xb.argmax(axis=1))
    roots = tuple(int(C[:, z].argmax()) + 1 for z in range(pv.n_zones))
    sizes = tuple(int(s) for s in Xb.sum(axis=0))
    return Partition(zone_of, roots, sizes, _cross_lines(net, zone_of))


# ---------------------------------------------------------------------------
# graph oracles

def _component_ok(adj: dict[int, set[int]], members: set[int]) -> bool:
    if not members:
        return False
    start = min(members)
    seen = {start}
    queue = deque([start])
    while queue:
        n = queue.popleft()
        for m in adj[n]:
            if m in members and m not in seen:
                seen.add(m)
                queue.append(m)
    return seen == members


def verify_partition(net: PowerNetwork, partition: Partition, y_min: int | None = None,
                     y_max: int | None = None) -> list[str]:
    """Independent check by breadth-first search; returns violation messages."""
    out: list[str] = []
    zone_of = list(partition.zone_of)
    Z = partition.n_zones
    if len(zone_of) != net.n_bus:
        return [f"partition covers {len(zone_of)} of {net.n_bus} buses"]
    for n, z in enumerate(zone_of):
        if not 1 <= z <= Z:
            out.append(f"bus {n + 1} assigned to unknown zone {z}")
    adj = net.neighbors()
    for z in range(1, Z + 1):
        members = {n + 1 for n, zz in enumerate(zone_of) if zz == z}
        size = len(members)
        if size == 0:
            out.append(f"zone {z} is empty")
            continue
        if partition.sizes[z - 1] != size:
            out.append(f"zone {z} reports size {partition.sizes[z - 1]} but has {size} buses")
        if y_min is not None and size < y_min:
            out.append(f"zone {z} has {size} buses, below the minimum {y_min}")
        if y_max is not None and size > y_max:
            out.append(f"zone {z} has {size} buses, above the maximum {y_max}")
        if not _component_ok(adj, members):
            out.append(f"zone {z} is not connected: {sorted(members)}")
        if partition.roots and partition.roots[z - 1] not in members:
            out.append(f"root {partition.roots[z - 1]} of zone {z} lies outside the zone")
    expected = _cross_lines(net, zone_of)
    if expected != partition.cross_zonal_lines:
        out.append("cross-zonal line set does not match the assignment")
    return out


def enumerate_partitions(net: PowerNetwork, n_zones: int, y_min: int = 1,
                         y_max: int | None = None) -> list[Partition]:
    """All connected, size-feasible partitions, labelled by smallest member.

    Exhaustive (restricted-growth strings), so limited to small networks.
    """
    N, Z = net.n_bus, int(n_zones)
    if N > MAX_ENUMERATION_NODES:
        raise PartitionError(f"enumeration is limited to {MAX_ENUMERATION_NODES} buses (got {N})")
    y_max = N if y_max is None else y_max
    if Z < 1 or Z > N:
        return []
    adj = net.neighbors()
    found: list[Partition] = []
    labels = [0] * N
    counts = [0] * (Z + 1)

    def rec(n: int, used: int):
        if N - n < Z - used:
            return
        if n == N:
            if used != Z:
                return
            if any(not y_min <= counts[z] <= y_max for z in range(1, Z + 1)):
                return
            blocks = [{m + 1 for m in range(N) if labels[m] == z} for z in range(1, Z + 1)]
            if all(_component_ok(adj, b) for b in blocks):
                found.append(make_partition(net, labels))
            return
        for z in range(1, min(used + 1, Z) + 1):
            if counts[z] >= y_max:
                continue
            labels[n] = z
            counts[z] += 1
            rec(n + 1, max(used, z))
            counts[z] -= 1

    rec(0, 0)
    return found


def partition_dot(net: PowerNetwork, partition: Partition, name: str = "partition") -> str:
    """GraphViz text: buses labelled with their zone, cross-zonal lines bold."""
    lines = [f"graph {name} {{"]
    for n, z in enumerate(partition.zone_of):
        root = " shape=doublecircle" if (n + 1) in partition.roots else ""
        lines.append(f'  {n + 1} [label="{n + 1} (z{z})" group={z}{root}];')
    for ln in net.lines:
        style = ' [style=bold label="L{0}"]' if ln.id in partition.cross_zonal_lines else ' [label="L{0}"]'
        lines.append(f"  {ln.from_bus} -- {ln.to_bus}{style.format(ln.id)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def partition_edge_list(net: PowerNetwork, partition: Partition) -> str:
    """CSV edge list ``line,from,to,from_zone,to_zone,cross_zonal``."""
    rows = ["line,from,to,from_zone,to_zone,cross_zonal"]
    for ln in net.lines:
        zf, zt = partition.zone_of[ln.from_bus - 1], partition.zone_of[ln.to_bus - 1]
        rows.append(f"{ln.id},{ln.from_bus},{ln.to_bus},{zf},{zt},{int(zf != zt)}")
    return "\n".join(rows) + "\n"


__all__ = [
    "MAX_ENUMERATION_NODES", "Partition", "PartitionError", "PartitionVars",
    "emit_partition_block", "enumerate_partitions", "extract_partition", "make_partition",
    "partition_dot", "partition_edge_list", "verify_partition",
]
