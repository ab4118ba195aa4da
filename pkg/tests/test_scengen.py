import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reservezones.scengen import (DegenerateForecast, ForecastError, ProbabilisticForecast,
                                  ScenarioSet, beta_marginal, deterministic_requirements,
                                  empirical_quantile, fast_forward_reduce, parse_scenarios,
                                  sample_scenarios, spearman_to_pearson, write_scenarios)


def _forecast(p=(0.4, 0.6), rho=0.5):
    J = len(p)
    rc = np.full((J, J), rho)
    np.fill_diagonal(rc, 1.0)
    return ProbabilisticForecast(np.full(J, 100.0), np.array(p), rc)


@given(st.floats(0.05, 0.95))
def test_beta_moments_match(p):
    a, b = beta_marginal(p)
    mean = a / (a + b)
    var = a * b / ((a + b) ** 2 * (a + b + 1))
    assert mean == pytest.approx(p, rel=1e-12)
    assert var == pytest.approx(0.04 + 0.10 * p - 0.10 * p * p, rel=1e-9)


def test_degenerate_and_infeasible_variance():
    with pytest.raises(DegenerateForecast):
        beta_marginal(0.0)
    with pytest.raises(ForecastError):
        beta_marginal(0.5, variance=0.3)


def test_spearman_to_pearson_endpoints():
    np.testing.assert_allclose(spearman_to_pearson([0.0, 1.0, -1.0]), [0.0, 1.0, -1.0], atol=1e-12)


def test_sampling_is_deterministic():
    f = _forecast()
    a = sample_scenarios(f, 50, 3)
    b = sample_scenarios(f, 50, 3)
    c = sample_scenarios(f, 50, 4)
    assert np.array_equal(a.W, b.W)
    assert not np.array_equal(a.W, c.W)
    assert a.prob.sum() == pytest.approx(1.0)
    assert np.all((a.W >= 0) & (a.W <= 100.0))


def test_point_mass_farm_is_constant():
    f = ProbabilisticForecast(np.array([100.0, 50.0]), np.array([0.5, 0.0]), np.eye(2))
    s = sample_scenarios(f, 20, 0)
    assert np.all(s.W[1] == 0.0)


def test_non_psd_rank_matrix_rejected():
    rc = np.array([[1.0, 0.99, -0.99], [0.99, 1.0, 0.99], [-0.99, 0.99, 1.0]])
    with pytest.raises(ForecastError):
        ProbabilisticForecast(np.full(3, 10.0), np.full(3, 0.5), rc)


def test_non_psd_after_conversion_is_projected_with_warning():
    # rank-2 (hence PSD) rank correlation whose Pearson image is indefinite
    X = np.array([[1.0, 0.0], [np.cos(1.2), np.sin(1.2)], [np.cos(2.8), np.sin(2.8)]])
    f = ProbabilisticForecast(np.full(3, 10.0), np.full(3, 0.5), X @ X.T)
    with pytest.warns(RuntimeWarning, match="not PSD"):
        s = sample_scenarios(f, 200, 0)
    assert np.all(np.isfinite(s.W))


def test_scenario_set_validation():
    with pytest.raises(ValueError):
        ScenarioSet(np.ones((1, 2)), [0.6, 0.6])
    with pytest.raises(ValueError):
        ScenarioSet(-np.ones((1, 2)), [0.5, 0.5])


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 30), st.integers(0, 10_000))
def test_reduction_preserves_probability(S, seed):
    scen = sample_scenarios(_forecast(), S, seed)
    target = max(1, S // 3)
    red = fast_forward_reduce(scen, target)
    assert red.n_scen == target
    assert red.prob.sum() == pytest.approx(1.0, abs=1e-12)
    # every kept column is one of the originals
    for s in range(target):
        assert np.any(np.all(np.isclose(scen.W, red.W[:, [s]]), axis=0))


def test_reduction_to_full_size_is_identity_up_to_order():
    scen = sample_scenarios(_forecast(), 8, 1)
    red, obj = fast_forward_reduce(scen, 8, return_objective=True)
    assert obj == 0.0
    assert sorted(map(tuple, red.W.T)) == sorted(map(tuple, scen.W.T))


def test_empirical_quantile_lower_stair():
    vals = np.array([3.0, 1.0, 2.0, 4.0])
    prob = np.full(4, 0.25)
    assert empirical_quantile(vals, prob, 0.25) == 1.0
    assert empirical_quantile(vals, prob, 0.26) == 2.0
    assert empirical_quantile(vals, prob, 1.0) == 4.0


def test_requirements_reject_bad_quantile():
    s = ScenarioSet.equiprobable([[1.0, 2.0]])
    with pytest.raises(ValueError):
        deterministic_requirements(s, 0.5)


def test_file_round_trip(tmp_path):
    scen = fast_forward_reduce(sample_scenarios(_forecast((0.3, 0.5, 0.7)), 40, 9), 6)
    path = tmp_path / "s.csv"
    write_scenarios(scen, path)
    back = parse_scenarios(path.read_text())
    np.testing.assert_allclose(back.W, scen.W, rtol=1e-14)
    np.testing.assert_allclose(back.prob, scen.prob, rtol=1e-14)
    assert back.farm_ids == scen.farm_ids
