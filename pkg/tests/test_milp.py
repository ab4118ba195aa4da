import itertools
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reservezones.milp import (BINARY, INFEASIBLE, INTEGER, OPTIMAL, UNBOUNDED, InfeasibleError,
                               LinExpr, MilpModel, ModelError, SolverParams, audit_bigm,
                               elastic_rows, export_mps, linearize_complementarity, parse_mps,
                               quicksum, solve_lp, solve_milp)

BACKENDS = ("highs", "native")
DATA = Path(__file__).parent / "data"


@pytest.mark.parametrize("backend", BACKENDS)
def test_dual_signs(backend):
    p = SolverParams(backend=backend)
    m = MilpModel()
    x = m.add_var("x")
    r = m.add_ge(x, 3.0)
    m.minimize(x)
    sol = solve_lp(m, p)
    assert sol.objective == pytest.approx(3.0)
    assert sol.duals[r] == pytest.approx(1.0) and sol.sensitivity(r) == pytest.approx(1.0)

    m = MilpModel()
    x = m.add_var("x", lb=-10)
    r = m.add_le(-1 * x, -3.0)
    m.minimize(x)
    sol = solve_lp(m, p)
    assert sol.duals[r] == pytest.approx(1.0) and sol.sensitivity(r) == pytest.approx(-1.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_equality_dual_is_rhs_sensitivity(backend):
    m = MilpModel()
    x = m.add_var("x", ub=10)
    y = m.add_var("y", ub=10)
    r = m.add_eq(x + y, 8.0)
    m.minimize(2 * x + 5 * y)
    sol = solve_lp(m, SolverParams(backend=backend))
    assert sol.objective == pytest.approx(16.0)
    assert sol.sensitivity(r) == pytest.approx(2.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_infeasible_and_unbounded(backend):
    p = SolverParams(backend=backend)
    m = MilpModel()
    x = m.add_var("x", ub=1)
    m.add_ge(x, 2, "too_big")
    m.minimize(x)
    assert solve_lp(m, p).status == INFEASIBLE
    assert elastic_rows(m, p) == ["too_big"]

    m = MilpModel()
    x = m.add_var("x", lb=-np.inf)
    m.minimize(x)
    assert solve_lp(m, p).status == UNBOUNDED


def test_infeasible_error_lists_rows():
    err = InfeasibleError("day-ahead", [f"r{i}" for i in range(20)])
    assert "r0" in str(err) and "..." in str(err)


def test_model_errors():
    m = MilpModel()
    m.add_var("x")
    with pytest.raises(ModelError):
        m.add_var("x")
    with pytest.raises(ModelError):
        m.add_var("y", lb=2, ub=1)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 9), st.integers(1, 9)), min_size=2, max_size=7),
       st.integers(3, 20))
def test_knapsack_matches_enumeration(items, cap):
    m = MilpModel()
    xs = [m.add_var(f"x{i}", kind=BINARY) for i in range(len(items))]
    m.add_le(quicksum(w * x for (w, _), x in zip(items, xs)), cap)
    m.minimize(quicksum(-v * x for (_, v), x in zip(items, xs)))
    best = min(-sum(v for (w, v), b in zip(items, bits) if b)
               for bits in itertools.product((0, 1), repeat=len(items))
               if sum(w for (w, _), b in zip(items, bits) if b) <= cap)
    for backend in BACKENDS:
        sol = solve_milp(m, SolverParams(backend=backend))
        assert sol.status == OPTIMAL
        assert sol.objective == pytest.approx(best)


@pytest.mark.parametrize("backend", BACKENDS)
def test_general_integer(backend):
    m = MilpModel()
    y = m.add_var("y", lb=0, ub=10, kind=INTEGER)
    z = m.add_var("z", lb=0, ub=10, kind=INTEGER)
    m.add_ge(2 * y + 3 * z, 7.5)
    m.minimize(3 * y + 4 * z)
    sol = solve_milp(m, SolverParams(backend=backend))
    assert sol.objective == pytest.approx(11.0)


def test_node_limit_reports_gap():
    rng = np.random.default_rng(5)
    m = MilpModel()
    w = rng.integers(20, 60, 25)
    v = w + rng.integers(-5, 5, 25)
    xs = [m.add_var(f"x{i}", kind=BINARY) for i in range(25)]
    m.add_le(quicksum(int(a) * x for a, x in zip(w, xs)), int(w.sum() // 2))
    m.minimize(quicksum(-int(a) * x for a, x in zip(v, xs)))
    sol = solve_milp(m, SolverParams(backend="native"), node_limit=3)
    assert sol.status != OPTIMAL or sol.nodes <= 3


def _small_model():
    m = MilpModel("demo")
    x = m.add_var("flow_1", lb=-5, ub=5)
    y = m.add_var("on", kind=BINARY)
    n = m.add_var("count", lb=1, ub=4, kind=INTEGER)
    f = m.add_var("free", lb=-np.inf)
    m.add_le(x - 3 * y, 1.0, "cap")
    m.add_ge(x + n + f, 2.5, "need")
    m.add_eq(f - 0.5 * n, 0.0, "link")
    m.minimize(LinExpr.of(x).add(n, 2.0).add(f).add(y, 0.5).add(1.25))
    return m


def test_mps_round_trip_and_golden():
    m = _small_model()
    text, mapping = export_mps(m)
    golden = (DATA / "small_model.mps").read_text()
    assert text == golden
    back = parse_mps(text)
    assert back.statistics() == m.statistics()
    a = solve_milp(m)
    b = solve_milp(back)
    assert a.objective == pytest.approx(b.objective)


def test_mps_long_names_are_mapped():
    m = MilpModel()
    v = m.add_var("a_rather_long_variable_name")
    m.add_ge(v, 1.0, "another_long_row_name")
    m.minimize(v)
    text, mapping = export_mps(m)
    assert "a_rather_long_variable_name" in mapping.values()
    assert solve_lp(parse_mps(text)).objective == pytest.approx(1.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_complementarity_picks_one_side(backend):
    # lower level: min x s.t. x >= a, with a chosen by the leader
    m = MilpModel()
    a = m.add_var("a", lb=1, ub=3)
    x = m.add_var("x", ub=10)
    mu = m.add_var("mu", ub=10)
    m.add_ge(x - a, 0.0, "lower")
    m.add_eq(1 - LinExpr.of(mu), 0.0, "stat")
    h = linearize_complementarity(m, a - x, mu, g_max=10, u_max=10, add_primal=False)
    m.minimize(-1 * a)
    sol = solve_milp(m, SolverParams(backend=backend))
    assert sol.value(x) == pytest.approx(3.0)
    assert audit_bigm(m, sol, [h]).clean


def test_audit_flags_binding_bound():
    m = MilpModel()
    x = m.add_var("x", ub=5)
    mu = m.add_var("mu", ub=1)
    h = linearize_complementarity(m, x - 5, mu, g_max=5, u_max=1)
    m.add_ge(mu, 1.0)
    m.minimize(LinExpr())
    sol = solve_milp(m)
    assert not audit_bigm(m, sol, [h]).clean
