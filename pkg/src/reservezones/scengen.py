"""Wind power scenarios: Beta marginals, Gaussian copula sampling, fast-forward
reduction and quantile-based deterministic reserve requirements."""
from __future__ import annotations

import csv
import io
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

logger = logging.getLogger(__name__)

DEFAULT_VARIANCE_COEFFS = (0.04, 0.10, -0.10)
_PROB_TOL = 1e-9


class ForecastError(ValueError):
    """Infeasible or malformed probabilistic forecast."""


class DegenerateForecast(ForecastError):
    """Point forecast at 0 or 1: the marginal is a point mass."""


def variance_law(p_hat: float, coeffs: Sequence[float] = DEFAULT_VARIANCE_COEFFS) -> float:
    c0, c1, c2 = coeffs
    return c0 + c1 * p_hat + c2 * p_hat * p_hat


def beta_marginal(p_hat: float, coeffs: Sequence[float] = DEFAULT_VARIANCE_COEFFS,
                  variance: float | None = None) -> tuple[float, float]:
    """Moment-matched Beta shape parameters for a per-unit forecast.

    The variance is the quadratic law ``c0 + c1*p + c2*p**2`` unless given
    explicitly. Raises :class:`DegenerateForecast` at ``p_hat`` in {0, 1} and
    :class:`ForecastError` when the variance is not in ``(0, p(1-p))``.
    """
    if p_hat <= 0.0 or p_hat >= 1.0:
        if p_hat in (0.0, 1.0):
            raise DegenerateForecast(f"point forecast {p_hat} gives a point-mass marginal")
        raise ForecastError(f"point forecast {p_hat} outside [0, 1]")
    var = variance_law(p_hat, coeffs) if variance is None else variance
    cap = p_hat * (1.0 - p_hat)
    if not 0.0 < var < cap:
        raise ForecastError(
            f"infeasible Beta variance {var:.6g} for forecast {p_hat:.6g} (need 0 < var < {cap:.6g})"
        )
    k = cap / var - 1.0
    return p_hat * k, (1.0 - p_hat) * k


def spearman_to_pearson(rank_corr: np.ndarray) -> np.ndarray:
    """Exact Gaussian-copula conversion ``2 sin(pi * rho_s / 6)``."""
    return 2.0 * np.sin(np.pi * np.asarray(rank_corr, dtype=float) / 6.0)


def nearest_psd(corr: np.ndarray, floor: float = 0.0) -> np.ndarray:
    vals, vecs = np.linalg.eigh((corr + corr.T) / 2.0)
    vals = np.clip(vals, floor, None)
    out = (vecs * vals) @ vecs.T
    d = np.sqrt(np.diag(out))
    out = out / np.outer(d, d)
    np.fill_diagonal(out, 1.0)
    return out


def distance_decay_correlation(buses: Sequence[int], tau: float = 6.0) -> np.ndarray:
    """Stand-in rank correlation ``exp(-|bus_i - bus_j| / tau)`` for fixtures."""
    b = np.asarray(buses, dtype=float)
    return np.exp(-np.abs(b[:, None] - b[None, :]) / tau)


@dataclass(frozen=True)
class ProbabilisticForecast:
    capacity: np.ndarray
    p_hat: np.ndarray
    rank_corr: np.ndarray
    coeffs: tuple[float, float, float] = DEFAULT_VARIANCE_COEFFS
    farm_ids: tuple[int, ...] = ()

    def __post_init__(self):
        cap = np.asarray(self.capacity, dtype=float)
        p = np.asarray(self.p_hat, dtype=float)
        rc = np.asarray(self.rank_corr, dtype=float)
        J = cap.size
        object.__setattr__(self, "capacity", cap)
        object.__setattr__(self, "p_hat", p)
        object.__setattr__(self, "rank_corr", rc)
        if not self.farm_ids:
            object.__setattr__(self, "farm_ids", tuple(range(1, J + 1)))
        if p.shape != (J,) or rc.shape != (J, J):
            raise ForecastError("forecast arrays have inconsistent shapes")
        if np.any((p < 0) | (p > 1)):
            raise ForecastError("per-unit forecasts must lie in [0, 1]")
        if not np.allclose(rc, rc.T) or not np.allclose(np.diag(rc), 1.0):
            raise ForecastError("rank correlation must be symmetric with unit diagonal")
        smallest = float(np.linalg.eigvalsh(rc).min()) if J else 0.0
        if smallest < -1e-10:
            raise ForecastError(f"rank correlation is not PSD (smallest eigenvalue {smallest:.3g})")
        for j, pj in enumerate(p):
            if 0.0 < pj < 1.0:
                beta_marginal(float(pj), self.coeffs)

    @classmethod
    def from_network(cls, net, rank_corr: np.ndarray | None = None, tau: float = 6.0,
                     coeffs: Sequence[float] = DEFAULT_VARIANCE_COEFFS) -> "ProbabilisticForecast":
        cap = net.wind_capacity
        p = np.where(cap > 0, net.wind_forecast / np.where(cap > 0, cap, 1.0), 0.0)
        if rank_corr is None:
            rank_corr = distance_decay_correlation([w.bus for w in net.wind_farms], tau)
        return cls(cap, p, rank_corr, tuple(coeffs), tuple(w.id for w in net.wind_farms))


@dataclass
class ScenarioSet:
    """Wind realizations ``W`` (farms x scenarios, MW) with probabilities."""

    W: np.ndarray
    prob: np.ndarray
    farm_ids: tuple[int, ...] = field(default=())

    def __post_init__(self):
        self.W = np.atleast_2d(np.asarray(self.W, dtype=float))
        self.prob = np.asarray(self.prob, dtype=float).ravel()
        if not self.farm_ids:
            self.farm_ids = tuple(range(1, self.W.shape[0] + 1))
        if self.W.shape[1] != self.prob.size:
            raise ValueError("W columns must match the number of probabilities")
        if len(self.farm_ids) != self.W.shape[0]:
            raise ValueError("farm_ids must match the rows of W")
        if np.any(self.prob <= 0):
            raise ValueError("scenario probabilities must be > 0")
        if abs(self.prob.sum() - 1.0) > _PROB_TOL:
            raise ValueError(f"scenario probabilities sum to {self.prob.sum():.12g}, not 1")
        if np.any(self.W < 0):
            raise ValueError("wind realizations must be >= 0")

    @property
    def n_scen(self) -> int:
        return self.prob.size

    @property
    def n_farms(self) -> int:
        return self.W.shape[0]

    def totals(self) -> np.ndarray:
        return self.W.sum(axis=0)

    def check_capacity(self, capacity: np.ndarray) -> None:
        if np.any(self.W > np.asarray(capacity)[:, None] + 1e-9):
            raise ValueError("wind realization exceeds farm capacity")

    @classmethod
    def equiprobable(cls, W, farm_ids: Sequence[int] = ()) -> "ScenarioSet":
        W = np.atleast_2d(np.asarray(W, dtype=float))
        return cls(W, np.full(W.shape[1], 1.0 / W.shape[1]), tuple(farm_ids))


def sample_scenarios(forecast: ProbabilisticForecast, count: int, seed: int) -> ScenarioSet:
    """Equiprobable scenarios from the Beta/Gaussian-copula forecast model.

    Uses numpy's PCG64 generator, so identical ``(forecast, count, seed)``
    reproduce the same set bit for bit.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    J = forecast.capacity.size
    rng = np.random.Generator(np.random.PCG64(seed))
    corr = spearman_to_pearson(forecast.rank_corr)
    np.fill_diagonal(corr, 1.0)
    smallest = float(np.linalg.eigvalsh(corr).min()) if J else 1.0
    if smallest < -1e-10:
        warnings.warn(f"converted correlation not PSD (smallest eigenvalue {smallest:.3g}); "
                      "projecting by eigenvalue clipping", RuntimeWarning, stacklevel=2)
        corr = nearest_psd(corr)
    vals, vecs = np.linalg.eigh(corr)
    factor = vecs * np.sqrt(np.clip(vals, 0.0, None))
    z = rng.standard_normal((count, J)) @ factor.T
    u = stats.norm.cdf(z)
    W = np.empty((J, count))
    for j in range(J):
        p = float(forecast.p_hat[j])
        if p <= 0.0 or p >= 1.0:
            W[j] = p * forecast.capacity[j]
            continue
        a, b = beta_marginal(p, forecast.coeffs)
        W[j] = forecast.capacity[j] * stats.beta.ppf(u[:, j], a, b)
    W = np.clip(W, 0.0, forecast.capacity[:, None])
    return ScenarioSet(W, np.full(count, 1.0 / count), forecast.farm_ids)


def _distances(W: np.ndarray) -> np.ndarray:
    X = W.T
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    return np.sqrt(np.clip(d2, 0.0, None))


def fast_forward_reduce(scen: ScenarioSet, target: int, return_objective: bool = False):
    """Greedy fast-forward selection under Euclidean distance.

    Probability of each dropped scenario moves to its nearest kept scenario.
    The kept scenarios are returned in selection order. With
    ``return_objective`` the probability-weighted distance of the dropped
    scenarios to the kept set is returned too.
    """
    S = scen.n_scen
    if not 1 <= target <= S:
        raise ValueError(f"target must be in [1, {S}]")
    d = _distances(scen.W)
    p = scen.prob
    selected: list[int] = []
    remaining = np.ones(S, dtype=bool)
    closest = d.copy()  # closest[k, u]: distance of k to selected set with u added
    for _ in range(target):
        # cost of adding u: sum_k p_k * min(closest) over k still unselected, k != u
        w = p[:, None] * closest
        w[~remaining, :] = 0.0
        cost = w.sum(axis=0) - np.where(remaining, p * np.diag(closest), 0.0)
        cost[~remaining] = np.inf
        u = int(np.argmin(cost))
        selected.append(u)
        remaining[u] = False
        closest = np.minimum(closest, closest[:, [u]])
    keep = np.array(selected)
    nearest = keep[np.argmin(d[:, keep], axis=1)]
    nearest[keep] = keep
    new_prob = np.zeros(S)
    np.add.at(new_prob, nearest, p)
    objective = float(np.sum(p[remaining] * d[remaining][:, keep].min(axis=1))) if remaining.any() else 0.0
    probs = new_prob[keep]
    probs = probs / probs.sum()
    out = ScenarioSet(scen.W[:, keep].copy(), probs, scen.farm_ids)
    if return_objective:
        return out, objective
    return out


def empirical_quantile(values: np.ndarray, prob: np.ndarray, q: float) -> float:
    """Lower-stair inverse CDF: smallest value whose cumulative probability >= q."""
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(prob[order])
    k = int(np.searchsorted(cum, q - 1e-12, side="left"))
    return float(values[order][min(k, len(order) - 1)])


def deterministic_requirements(scen: ScenarioSet, q: float) -> tuple[float, float]:
    """Up/down requirements from the lower and upper ``q`` tails of total wind."""
    if not 0.0 < q < 0.5:
        raise ValueError("quantile q must lie in (0, 0.5)")
    tot = scen.totals()
    expected = float(scen.prob @ tot)
    up = expected - empirical_quantile(tot, scen.prob, q)
    dn = empirical_quantile(tot, scen.prob, 1.0 - q) - expected
    return max(up, 0.0), max(dn, 0.0)


# ---------------------------------------------------------------------------
# scenario files: header "s,pi,<farm ids>", one row per scenario

def write_scenarios(scen: ScenarioSet, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s", "pi", *[str(f) for f in scen.farm_ids]])
    for s in range(scen.n_scen):
        w.writerow([s + 1, f"{scen.prob[s]:.15g}", *(f"{v:.15g}" for v in scen.W[:, s])])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_scenarios(path: str | Path) -> ScenarioSet:
    return parse_scenarios(Path(path).read_text())


def parse_scenarios(text: str) -> ScenarioSet:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], [r for r in rows[1:] if r]
    if header[:2] != ["s", "pi"]:
        raise ValueError("scenario file header must start with 's,pi'")
    farm_ids = tuple(int(f) for f in header[2:])
    prob = np.array([float(r[1]) for r in body])
    W = np.array([[float(v) for v in r[2:]] for r in body]).T.reshape(len(farm_ids), len(body))
    return ScenarioSet(W, prob, farm_ids)
