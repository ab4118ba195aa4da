import numpy as np
import pytest
from conftest import reduced_set
from hypothesis import given, settings
from hypothesis import strategies as st

from reservezones.markets import run_sequential
from reservezones.milp import (InfeasibleError, LinExpr, MilpModel, SolverParams, quicksum,
                               solve_lp, solve_milp)
from reservezones.zonal import (STOCHASTIC, CertificationError, assemble_mpec, emit_kkt,
                                run_stability, solve_extensive, solve_zonal, zone_report)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_kkt_point_is_lp_optimal(seed):
    rng = np.random.default_rng(seed)
    n, k = 3, 4
    A = rng.integers(-3, 4, (k, n)).astype(float)
    x0 = rng.uniform(0, 2, n)
    b = A @ x0 + rng.uniform(0, 1, k)  # x0 strictly feasible
    c = rng.integers(-5, 6, n).astype(float)

    lp = MilpModel()
    xs = [lp.add_var(f"x{i}", ub=5) for i in range(n)]
    for i in range(k):
        lp.add_le(quicksum(A[i, j] * xs[j] for j in range(n)), b[i])
    lp.minimize(quicksum(c[j] * xs[j] for j in range(n)))
    ref = solve_lp(lp)
    assert ref.ok

    m = MilpModel()
    ys = [m.add_var(f"x{i}", ub=5) for i in range(n)]
    rows = [m.add_le(quicksum(A[i, j] * ys[j] for j in range(n)), b[i]) for i in range(k)]
    emit_kkt(m, "ll", ys, {y.index: c[j] for j, y in enumerate(ys)}, rows,
             {y.index: (0.0, 5.0) for y in ys}, u_max=1e3)
    m.minimize(LinExpr())  # any KKT point will do
    sol = solve_milp(m)
    assert sol.ok
    got = float(c @ sol.values(ys))
    assert got == pytest.approx(ref.objective, abs=1e-6 * max(1, abs(ref.objective)))


@pytest.fixture(scope="module")
def ring4_z2(ring4, ring4_scen):
    net, mats = ring4
    return solve_zonal(net, mats, ring4_scen, 2)


def test_zonal_solution_is_certified(ring4_z2):
    out = ring4_z2
    assert out.certification["ok"]
    assert out.audit.clean and out.audit.checked > 0
    assert out.costs.total == pytest.approx(out.objective, rel=1e-6)


def test_zonal_requirements_are_met_per_zone(ring4, ring4_z2):
    net, _ = ring4
    up, dn = ring4_z2.reserves.by_zone(2)
    assert np.all(up.sum(axis=0) >= ring4_z2.lam_up - 1e-7)
    assert np.all(dn.sum(axis=0) >= ring4_z2.lam_dn - 1e-7)


def test_zone_report_shape(ring4, ring4_z2):
    net, _ = ring4
    rows = zone_report(net, ring4_z2)
    assert [r["zone"] for r in rows] == [1, 2]
    assert sum(r["total_mw"] for r in rows) == pytest.approx(
        ring4_z2.reserves.r_up.sum() + ring4_z2.reserves.r_dn.sum())
    assert sorted(b for r in rows for b in r["buses"]) == [1, 2, 3, 4]


def test_gamma_only_on_cross_zonal_lines(cases):
    net, mats = cases["congested4"]
    scen = reduced_set(net)
    out = solve_zonal(net, mats, scen, 2, chi=1.0)
    ratings = np.array([ln.rating for ln in net.lines])
    for k, ln in enumerate(net.lines):
        if ln.id not in out.partition.cross_zonal_lines:
            assert out.gamma[k] == pytest.approx(0.0, abs=1e-7)
    assert np.all(out.gamma <= ratings + 1e-7)


def test_chi_zero_forbids_set_asides(ring4, ring4_z2):
    assert np.allclose(ring4_z2.gamma, 0.0)


def test_zonal_never_worse_than_sequential_with_same_data(ring4, ring4_scen, ring4_z2):
    net, mats = ring4
    for q in (0.01, 0.1):
        seq = run_sequential(net, mats, ring4_scen, q)
        assert ring4_z2.costs.total <= seq.costs.total * (1 + 1e-6)


def test_tiny_dual_bound_is_caught(ring4, ring4_scen):
    net, mats = ring4
    params = SolverParams(big_m_dual=1.0)
    zm = assemble_mpec(net, mats, ring4_scen, 1, params=params)
    with pytest.raises((InfeasibleError, CertificationError)):
        solve_extensive(zm, params)


def test_model_statistics(ring4, ring4_scen):
    net, mats = ring4
    zm = assemble_mpec(net, mats, ring4_scen, 2)
    st_ = zm.statistics()
    assert st_["binaries"] >= 2 * 2 * net.n_bus  # x and c
    assert st_["complementarities"] == len(zm.handles) > 0
    assert st_["scenarios"] == ring4_scen.n_scen


def test_stability_identity_and_fixed_candidates(ring4, ring4_scen, ring4_z2):
    net, mats = ring4
    sets = [ring4_scen, reduced_set(net, seed=99)]
    seq = run_sequential(net, mats, ring4_scen, 0.05)
    rows = run_stability(net, mats, {"stoch": STOCHASTIC, "seq": (seq.reserves, None),
                                     "z2": (ring4_z2.reserves, ring4_z2.gamma)}, sets)
    assert len(rows) == 6
    for r in rows:
        if r.model == "stoch":
            assert r.ratio == 1.0
        else:
            assert r.ratio >= 1.0 - 1e-9
