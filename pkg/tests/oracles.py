"""Reference procedures shared by the unit and acceptance tests."""
from __future__ import annotations

from reservezones.milp import LinExpr, MilpModel, solve_milp
from reservezones.partition import emit_partition_block, extract_partition


def milp_partitions(net, n_zones, y_min=1, symmetry_breaking=True, limit=10_000):
    """Every x-projection feasible for the partition block, found with no-good cuts."""
    m = MilpModel("enum")
    pv = emit_partition_block(m, net, n_zones, y_min=y_min, symmetry_breaking=symmetry_breaking)
    m.minimize(LinExpr())
    found = []
    for _ in range(limit):
        sol = solve_milp(m)
        if not sol.ok:
            break
        part = extract_partition(sol, pv, net)
        found.append(part)
        cut = LinExpr()
        for n, z in enumerate(part.zone_index):
            for zz in range(n_zones):
                cut.add(pv.x[n][zz], -1.0 if zz == z else 1.0)
        m.add_ge(cut, 1.0 - net.n_bus, f"nogood_{len(found)}")
    return found
