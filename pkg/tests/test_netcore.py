import json

import numpy as np
import pytest

from reservezones.netcore import (BUNDLED_CASES, CaseError, build_matrices, export_case, load_case,
                                  verify_network)


@pytest.mark.parametrize("name", BUNDLED_CASES)
def test_bundled_cases_load_and_connect(name):
    net = load_case(name)
    rep = verify_network(net)
    assert rep.ok and rep.connected
    assert net.n_bus >= 4 and net.n_gen >= 2 and net.n_wind >= 1


@pytest.mark.parametrize("name", ("ring4", "mesh6", "rts24"))
def test_ptdf_conserves_power(name):
    net = load_case(name)
    mats = build_matrices(net)
    rng = np.random.default_rng(0)
    inj = rng.normal(size=net.n_bus)
    inj -= inj.mean()
    f = mats.flows(inj)
    # nodal balance: injection = outgoing - incoming = -H^T f
    np.testing.assert_allclose(-mats.branch_incidence.T @ f, inj, atol=1e-9)
    assert np.allclose(mats.ptdf[:, net.slack_bus - 1], 0.0)


def test_ptdf_two_bus_sign():
    doc = {"buses": [{"id": 1, "load": 0}, {"id": 2, "load": 10}],
           "lines": [{"id": 1, "from": 1, "to": 2, "reactance": 0.1, "rating": 50}],
           "generators": [{"id": 1, "bus": 1, "p_min": 0, "p_max": 20, "c": 1, "c_up": 1,
                           "c_dn": 1, "r_up_max": 5, "r_dn_max": 5}],
           "wind": [], "penalties": {"curtail": 5, "shed": 10}, "slack": 1}
    mats = build_matrices(load_case(doc))
    # injecting at bus 1 and withdrawing at bus 2 pushes flow from 1 to 2
    assert mats.flows([10.0, -10.0])[0] == pytest.approx(10.0)


def test_export_round_trip(ring4):
    net, _ = ring4
    again = load_case(json.loads(json.dumps(export_case(net))))
    assert again == net


def test_sparse_ids_rejected():
    doc = export_case(load_case("ring4"))
    doc["buses"][3]["id"] = 7
    with pytest.raises(CaseError, match="dense"):
        load_case(doc)


def test_unknown_bus_reference():
    doc = export_case(load_case("ring4"))
    doc["lines"][0]["to"] = 9
    with pytest.raises(CaseError):
        load_case(doc)


def test_islanded_bus_rejected():
    doc = export_case(load_case("ring4"))
    doc["buses"].append({"id": 5, "load": 0.0})
    with pytest.raises(CaseError, match=r"unreachable buses \[5\]"):
        load_case(doc)


def test_verify_reports_islands_on_hand_built_network(ring4):
    net, _ = ring4
    from reservezones.netcore import Bus
    cut = net.with_changes(buses=net.buses + (Bus(5, 0.0),))
    rep = verify_network(cut)
    assert not rep.ok and rep.islanded_buses == [5]
    with pytest.raises(CaseError):
        build_matrices(cut)


def test_penalty_ordering_enforced():
    doc = export_case(load_case("ring4"))
    doc["penalties"]["shed"] = 1.0
    with pytest.raises(CaseError, match="penalty"):
        load_case(doc)


def test_missing_file_raises_file_not_found(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_case(tmp_path / "nope.json")


def test_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(CaseError, match="JSON"):
        load_case(p)
