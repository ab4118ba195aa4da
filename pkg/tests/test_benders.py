import pytest
from conftest import reduced_set

from reservezones.benders import FirstStage, default_theta0, run_benders, solve_subproblem
from reservezones.markets import solve_day_ahead, solve_reserve_market
from reservezones.zonal import solve_zonal


def _point(net, mats, lam):
    res = solve_reserve_market(net, lam, lam)
    da = solve_day_ahead(net, mats, res)
    return FirstStage(res.r_up, res.r_dn, da.p, da.w)


def test_subproblem_slope_matches_finite_difference(ring4, ring4_scen):
    net, mats = ring4
    first = _point(net, mats, 15.0)
    wind = ring4_scen.W[:, 0]
    base = solve_subproblem(net, mats, wind, first)
    flat = first.flat()
    G, J = net.n_gen, net.n_wind
    h = 1e-4
    for k in range(flat.size):
        bumped = flat.copy()
        bumped[k] += h
        fs = FirstStage(bumped[:G], bumped[G:2 * G], bumped[2 * G:3 * G], bumped[3 * G:3 * G + J])
        up = solve_subproblem(net, mats, wind, fs).cost
        # the recourse is piecewise linear, so the one-sided difference is a
        # subgradient bound: cost(x + h e_k) >= cost(x) + slope_k h
        assert up >= base.cost + base.slope[k] * h - 1e-7


def test_cuts_underestimate_recourse_everywhere(ring4, ring4_scen):
    net, mats = ring4
    anchor = _point(net, mats, 10.0)
    wind = ring4_scen.W[:, 1]
    sub = solve_subproblem(net, mats, wind, anchor)
    for lam in (0.0, 5.0, 20.0, 30.0):
        other = _point(net, mats, lam)
        cost = solve_subproblem(net, mats, wind, other).cost
        cut = sub.cost + sub.slope @ (other.flat() - anchor.flat())
        assert cost >= cut - 1e-6


def test_theta0_is_valid(ring4, ring4_scen):
    net, mats = ring4
    t0 = default_theta0(net)
    for lam in (0.0, 20.0):
        first = _point(net, mats, lam)
        for s in range(ring4_scen.n_scen):
            assert solve_subproblem(net, mats, ring4_scen.W[:, s], first).cost >= t0


@pytest.mark.parametrize("Z,chi", [(1, 0.0), (2, 0.0), (2, 1.0)])
def test_benders_matches_extensive_on_ring4(ring4, ring4_scen, Z, chi):
    net, mats = ring4
    ext = solve_zonal(net, mats, ring4_scen, Z, chi=chi)
    out, trace = run_benders(net, mats, ring4_scen, Z, chi=chi)
    assert trace.converged
    assert abs(out.costs.total - ext.costs.total) <= 1e-4 * abs(ext.costs.total) + 1e-6
    assert all(b >= a - 1e-9 for a, b in zip(trace.lower, trace.lower[1:]))
    assert out.certification["ok"] and out.audit.clean


def test_iteration_limit_reports_not_converged(cases):
    net, mats = cases["mesh6"]
    scen = reduced_set(net, target=3)
    out, trace = run_benders(net, mats, scen, 2, max_iter=1)
    assert not trace.converged and len(trace.rows) == 1
    assert out.info["converged"] is False


def test_trace_csv(ring4, ring4_scen, tmp_path):
    net, mats = ring4
    _, trace = run_benders(net, mats, ring4_scen, 1)
    text = trace.to_csv(tmp_path / "trace.csv")
    lines = text.strip().splitlines()
    assert lines[0] == "iteration,lower,upper,gap,seconds"
    assert len(lines) == len(trace.rows) + 1
    assert (tmp_path / "trace.csv").read_text() == text


def test_parallel_subproblems_give_same_trace(ring4, ring4_scen):
    net, mats = ring4
    _, a = run_benders(net, mats, ring4_scen, 2, jobs=1)
    _, b = run_benders(net, mats, ring4_scen, 2, jobs=2)
    assert a.lower == b.lower and a.upper == b.upper


def test_bad_tolerance(ring4, ring4_scen):
    net, mats = ring4
    with pytest.raises(ValueError):
        run_benders(net, mats, ring4_scen, 1, eps=0.0)
