"""Acceptance checks, one test per criterion.

Every test records a ``PASS``/``FAIL`` line with the measured quantities; the
lines are printed at the end of the pytest session (see ``conftest.py``) and
when this file is run directly with ``python tests/test_acceptance.py``.
"""
from __future__ import annotations

import itertools
import time

import numpy as np
import pytest
from conftest import SMALL_CASES
from oracles import milp_partitions
from scipy import stats

from reservezones.benders import run_benders
from reservezones.markets import run_sequential, solve_stochastic
from reservezones.milp import (BINARY, INTEGER, LinExpr, MilpModel, linearize_bin_int_product,
                               solve_milp)
from reservezones.netcore import build_matrices, load_case
from reservezones.partition import emit_partition_block, enumerate_partitions
from reservezones.scengen import (ProbabilisticForecast, ScenarioSet, beta_marginal,
                                  deterministic_requirements, fast_forward_reduce,
                                  sample_scenarios)
from reservezones.zonal import STOCHASTIC, run_stability, solve_zonal

RESULTS: list[str] = []
ZONAL_SOLVES: list = []  # every accepted zonal outcome, checked by the certification test

REL = 1e-6


def record(name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    RESULTS.append(line)
    print(line)


def _net(name):
    net = load_case(name)
    return net, build_matrices(net)


def _scenarios(net, count=1000, seed=42, target=10):
    scen = sample_scenarios(ProbabilisticForecast.from_network(net), count, seed)
    return fast_forward_reduce(scen, target)


def _zonal(*args, **kw):
    out = solve_zonal(*args, **kw)
    ZONAL_SOLVES.append(out)
    return out


# ---------------------------------------------------------------------------

def test_partition_oracle_equivalence():
    t0 = time.monotonic()
    mismatches, checked = [], 0
    for name in SMALL_CASES:
        net, _ = _net(name)
        for Z, y_min in itertools.product((1, 2, 3), (1, 2)):
            if Z * y_min > net.n_bus:
                continue
            want = {p.blocks() for p in enumerate_partitions(net, Z, y_min)}
            got = [p.blocks() for p in milp_partitions(net, Z, y_min)]
            checked += 1
            if set(got) != want or len(got) != len(set(got)):
                mismatches.append(f"{name} Z={Z} y_min={y_min}: milp {len(got)} vs oracle {len(want)}")
    secs = time.monotonic() - t0
    ok = not mismatches and secs < 60.0
    record("partition oracle equivalence", ok,
           f"{checked} (net, Z, y_min) combinations, {len(mismatches)} discrepancies, {secs:.1f} s")
    assert not mismatches, mismatches
    assert secs < 60.0


def test_ring4_split_counts():
    t0 = time.monotonic()
    net, _ = _net("ring4")
    n1 = len(milp_partitions(net, 2, 1))
    n2 = len(milp_partitions(net, 2, 2))
    secs = time.monotonic() - t0
    ok = n1 == 6 and n2 == 2 and secs < 5.0
    record("4-bus ring split count", ok, f"y_min=1 -> {n1}, y_min=2 -> {n2} ({secs:.2f} s)")
    assert (n1, n2) == (6, 2) and secs < 5.0


def test_cost_sandwich():
    t0 = time.monotonic()
    failures, lines = [], []
    for name in ("ring4", "rts24"):
        net, mats = _net(name)
        scen = _scenarios(net)
        st = solve_stochastic(net, mats, scen).costs.total
        seq = {q: run_sequential(net, mats, scen, q).costs.total for q in (0.01, 0.03, 0.05, 0.10)}
        for Z in (1, 2):
            zc = _zonal(net, mats, scen, Z, chi=0.0).costs.total
            lo_ok = st <= zc + REL * abs(zc)
            hi_ok = all(zc <= s + REL * abs(s) for s in seq.values())
            lines.append(f"{name} S={scen.n_scen} Z={Z}: {st:.2f} <= {zc:.2f} <= "
                         f"min_q {min(seq.values()):.2f}")
            if not (lo_ok and hi_ok):
                failures.append(lines[-1])
    secs = time.monotonic() - t0
    ok = not failures and secs < 600
    record("cost sandwich", ok, "; ".join(lines) + f" ({secs:.0f} s)")
    assert not failures, failures
    assert secs < 600


def test_single_zone_ignores_chi():
    details, ok = [], True
    for name in ("ring4", "congested4", "rts24"):
        net, mats = _net(name)
        scen = _scenarios(net, target=10 if name == "rts24" else 5)
        a = _zonal(net, mats, scen, 1, chi=0.0)
        b = _zonal(net, mats, scen, 1, chi=1.0)
        rel = abs(a.objective - b.objective) / max(1.0, abs(a.objective))
        gmax = max(np.abs(a.gamma).max(), np.abs(b.gamma).max())
        this = rel <= REL and gmax <= 1e-7
        ok &= this
        details.append(f"{name}: rel diff {rel:.1e}, max|Gamma| {gmax:.1e}")
    record("Z=1 degeneracy", ok, "; ".join(details))
    assert ok


def test_benders_matches_extensive():
    details, ok = [], True
    configs = [(1, 0.0), (2, 0.0), (2, 1.0)]
    for name in SMALL_CASES:
        net, mats = _net(name)
        scen = _scenarios(net, count=300, seed=5, target=4)
        for Z, chi in configs:
            ext = _zonal(net, mats, scen, Z, chi=chi)
            ben, trace = run_benders(net, mats, scen, Z, chi=chi, rel_eps=1e-4)
            ZONAL_SOLVES.append(ben)
            eps = 1e-4 * abs(ext.objective)
            slack = eps + 1e-6 * abs(ext.objective) * 2  # both MILP gaps at the default 1e-6
            diff = abs(ben.costs.total - ext.costs.total)
            mono = all(b >= a - 1e-9 for a, b in zip(trace.lower, trace.lower[1:]))
            this = trace.converged and diff <= slack and mono
            ok &= this
            details.append(f"{name} Z={Z} chi={chi:g}: |diff| {diff:.2e} (eps {eps:.2e}), "
                           f"{len(trace.rows)} it, monotone={mono}")
    record("Benders == extensive", ok, f"{len(details)} instances on {len(SMALL_CASES)} nets; "
           + "; ".join(details))
    assert ok


def test_kkt_certification():
    # extra sweep so the check does not depend on test order
    for name in ("ring4", "house5", "mesh6"):
        net, mats = _net(name)
        scen = _scenarios(net, count=200, seed=3, target=3)
        for Z, chi in ((2, 0.0), (2, 0.5), (3, 1.0)):
            _zonal(net, mats, scen, Z, chi=chi)
    bad = [i for i, o in enumerate(ZONAL_SOLVES)
           if not (o.certification.get("ok") and o.audit is not None and o.audit.clean)]
    worst = max(max(o.certification["reserve_rel"], o.certification["day_ahead_rel"])
                for o in ZONAL_SOLVES)
    flagged = sum(len(o.audit.flagged) for o in ZONAL_SOLVES)
    ok = not bad
    record("KKT certification", ok, f"{len(ZONAL_SOLVES)} zonal solves, worst lower-level rel. "
           f"diff {worst:.1e}, {flagged} binding big-Ms")
    assert ok


def _fixed_product(b_val, y_val, m_lo, m_hi):
    out = []
    for sense in (1.0, -1.0):
        m = MilpModel()
        b = m.add_var("b", lb=b_val, ub=b_val, kind=BINARY)
        y = m.add_var("y", lb=y_val, ub=y_val, kind=INTEGER)
        h = linearize_bin_int_product(m, b, y, m_lo, m_hi)
        m.minimize(sense * h.aux)
        sol = solve_milp(m)
        out.append(sol.value(h.aux) if sol.ok else np.nan)
    return out


def test_linearization_exactness():
    worst, count = 0.0, 0
    for m_lo, m_hi in ((0, 4), (1, 5), (2, 2), (-2, 3)):
        for b_val, y_val in itertools.product((0, 1), range(m_lo, m_hi + 1)):
            lo, hi = _fixed_product(b_val, y_val, m_lo, m_hi)
            worst = max(worst, abs(lo - b_val * y_val), abs(hi - b_val * y_val))
            count += 1
    # the same auxiliaries inside the partition block, at every feasible integer point
    net, _ = _net("ring4")
    for Z, y_min in ((2, 1), (2, 2), (3, 1)):
        for part in enumerate_partitions(net, Z, y_min):
            m = MilpModel()
            pv = emit_partition_block(m, net, Z, y_min=y_min)
            for n, z in enumerate(part.zone_index):
                for zz in range(Z):
                    m.set_bounds(pv.x[n][zz], lb=float(zz == z), ub=float(zz == z))
                    m.set_bounds(pv.c[n][zz], lb=float(part.roots[zz] == n + 1),
                                 ub=float(part.roots[zz] == n + 1))
            aux = [h.aux for h in pv.handles]
            for sense in (1.0, -1.0):
                m.minimize(LinExpr({a.index: sense for a in aux}))
                sol = solve_milp(m)
                assert sol.ok
                for h in pv.handles:
                    prod = sol.value(h.binary) * sol.value(h.integer)
                    worst = max(worst, abs(sol.value(h.aux) - prod))
                    count += 1
    ok = worst == 0.0
    record("linearization exactness", ok, f"{count} integral points, max |u - b*y| = {worst:.1e}")
    assert ok


def test_scenario_engine_statistics():
    p_hat, cap, n = 0.35, 100.0, 1_000_000
    f1 = ProbabilisticForecast(np.array([cap]), np.array([p_hat]), np.eye(1))
    W = sample_scenarios(f1, n, 2024).W[0]
    a, b = beta_marginal(p_hat)
    sd = cap * np.sqrt(a * b / ((a + b) ** 2 * (a + b + 1)))
    mean_err = abs(W.mean() - cap * p_hat)
    mean_ok = mean_err <= 3 * sd / np.sqrt(n)

    target = np.array([[1.0, 0.7, 0.2], [0.7, 1.0, 0.4], [0.2, 0.4, 1.0]])
    f3 = ProbabilisticForecast(np.full(3, 50.0), np.array([0.3, 0.5, 0.6]), target)
    rho = stats.spearmanr(sample_scenarios(f3, 10_000, 7).W.T).statistic
    sp_err = float(np.abs(rho - target)[np.triu_indices(3, 1)].max())
    sp_ok = sp_err <= 0.05

    ff_ok, sizes = True, (2, 17, 60, 200)
    for S in sizes:
        scen = sample_scenarios(f3, S, 100 + S)
        red, obj = fast_forward_reduce(scen, 1, return_objective=True)
        X = scen.W.T
        d = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
        costs = scen.prob @ d
        best = int(np.argmin(costs))
        ff_ok &= np.array_equal(red.W[:, 0], scen.W[:, best]) and np.isclose(obj, costs[best])
    ok = mean_ok and sp_ok and ff_ok
    record("scenario engine statistics", ok,
           f"Beta mean error {mean_err:.4f} (3 sigma/sqrt(n) = {3 * sd / np.sqrt(n):.4f}); "
           f"max Spearman error {sp_err:.3f}; fast-forward target=1 == brute force on "
           f"S={sizes}: {ff_ok}")
    assert ok


def test_quantile_requirements():
    # totals and dyadic probabilities keep every intermediate value exact
    totals = np.array([70.0, 10.0, 40.0, 100.0, 20.0, 60.0, 30.0, 90.0, 50.0, 80.0])
    prob = np.array([1, 1, 2, 1, 2, 2, 2, 1, 2, 2]) / 16.0
    scen = ScenarioSet(np.vstack([totals / 2, totals / 2]), prob)
    # sorted: 10(1) 20(2) 30(2) 40(2) 50(2) 60(2) 70(1) 80(2) 90(1) 100(1)  [x/16]
    # CDF   : 1    3     5     7     9     11    12    14    15    16
    # mean = (10 + 40 + 60 + 80 + 100 + 120 + 70 + 160 + 90 + 100) / 16 = 830 / 16
    mean = 830.0 / 16.0
    cases = {0.05: (10.0, 100.0), 0.10: (20.0, 90.0), 0.25: (30.0, 70.0), 0.40: (40.0, 60.0)}
    bad = []
    for q, (lo, hi) in cases.items():
        want = (mean - lo, hi - mean)
        got = deterministic_requirements(scen, q)
        if got != want:
            bad.append(f"q={q}: {got} != {want}")
    ok = not bad
    record("quantile requirements", ok, f"{len(cases)} quantiles exact" if ok else "; ".join(bad))
    assert ok, bad


def test_capacity_allocation_effect():
    net, mats = _net("congested4")
    scen = ScenarioSet.equiprobable([[10.0, 90.0]])
    z0 = _zonal(net, mats, scen, 2, chi=0.0)
    z1 = _zonal(net, mats, scen, 2, chi=1.0)
    margin = (z0.costs.total - z1.costs.total) / z0.costs.total
    ok = margin >= 0.01
    record("capacity-allocation effect", ok,
           f"chi=0 {z0.costs.total:.2f}, chi=1 {z1.costs.total:.2f}, saving {100 * margin:.1f}% "
           f"(Gamma {np.round(z1.gamma, 3).tolist()})")
    assert ok


def test_stability_identity():
    worst, n_rows = 0.0, 0
    for name in ("ring4", "mesh6"):
        net, mats = _net(name)
        sets = [_scenarios(net, count=300, seed=42 + i, target=5) for i in range(4)]
        rows = run_stability(net, mats, {"stochastic": STOCHASTIC}, sets)
        worst = max(worst, max(abs(r.ratio - 1.0) for r in rows))
        n_rows += len(rows)
    ok = worst <= 1e-9
    record("stability-harness identity", ok, f"{n_rows} sets, max |ratio - 1| = {worst:.1e}")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
