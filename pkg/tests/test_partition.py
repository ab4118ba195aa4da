import itertools

import pytest
from oracles import milp_partitions

from reservezones.milp import BINARY, INTEGER, MilpModel, linearize_bin_int_product, solve_milp
from reservezones.partition import (PartitionError, emit_partition_block, enumerate_partitions,
                                    make_partition, partition_dot, partition_edge_list,
                                    verify_partition)


def test_ring4_enumeration_counts(ring4):
    net, _ = ring4
    assert len(enumerate_partitions(net, 2, 1)) == 6
    assert len(enumerate_partitions(net, 2, 2)) == 2
    assert len(enumerate_partitions(net, 1)) == 1
    assert len(enumerate_partitions(net, 4)) == 1


def test_enumerated_partitions_verify(cases):
    for name in ("ring4", "mesh6", "grid8"):
        net, _ = cases[name]
        for part in enumerate_partitions(net, 3, 1):
            assert verify_partition(net, part, y_min=1) == []


def test_without_symmetry_breaking_labels_multiply(ring4):
    net, _ = ring4
    labelled = milp_partitions(net, 2, 1, symmetry_breaking=False)
    assert len(labelled) == 12
    assert len({p.blocks() for p in labelled}) == 6


def test_symmetry_breaking_roots_are_smallest_members(ring4):
    net, _ = ring4
    for part in milp_partitions(net, 2, 1):
        for z in range(1, 3):
            assert part.roots[z - 1] == min(part.members(z))
        assert list(part.roots) == sorted(part.roots)


def test_verify_detects_disconnected_zone(ring4):
    net, _ = ring4
    bad = make_partition(net, [1, 2, 1, 2])  # {1,3} and {2,4} on a ring: neither connected
    msgs = verify_partition(net, bad)
    assert any("not connected" in m for m in msgs)


def test_sizing_errors_name_the_inequality(ring4):
    net, _ = ring4
    with pytest.raises(PartitionError, match=r"Z\*y_min <= N"):
        emit_partition_block(MilpModel(), net, 3, y_min=2)
    with pytest.raises(PartitionError, match=r"Z\*y_max >= N"):
        emit_partition_block(MilpModel(), net, 1, y_max=3)


def test_enumeration_guard(cases):
    net, _ = cases["rts24"]
    with pytest.raises(PartitionError):
        enumerate_partitions(net, 2)


def test_exports(ring4):
    net, _ = ring4
    part = make_partition(net, [1, 1, 2, 2])
    dot = partition_dot(net, part)
    assert dot.startswith("graph partition {")
    assert dot.count("style=bold") == 2
    rows = partition_edge_list(net, part).strip().splitlines()
    assert rows[0] == "line,from,to,from_zone,to_zone,cross_zonal"
    assert sum(int(r.split(",")[-1]) for r in rows[1:]) == 2
    assert part.cross_zonal_lines == frozenset({2, 4})


@pytest.mark.parametrize("m_lo,m_hi", [(0, 3), (1, 4), (2, 2)])
def test_product_linearization_is_exact(m_lo, m_hi):
    for b_val, y_val in itertools.product((0, 1), range(m_lo, m_hi + 1)):
        m = MilpModel()
        b = m.add_var("b", kind=BINARY, lb=b_val, ub=b_val)
        y = m.add_var("y", kind=INTEGER, lb=y_val, ub=y_val)
        h = linearize_bin_int_product(m, b, y, m_lo, m_hi)
        for sense in (1.0, -1.0):
            m.minimize(sense * h.aux)
            sol = solve_milp(m)
            assert sol.ok and sol.value(h.aux) == pytest.approx(b_val * y_val, abs=1e-9)
