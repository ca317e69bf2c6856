"""Monte-Carlo study of how score granularity affects each correlation measure.

Generative model, per system i:

* system means ``(mu_m_i, mu_h_i)`` ~ bivariate normal(mu_m, mu_h, sigma_m, sigma_h, rho_sys)
* within-system correlation ``rho_i`` ~ normal(mu_rho_item, sigma_rho_item) truncated to [-1, 1]
* scores ``(x_ij, z_ij)`` ~ bivariate normal(mu_m_i, mu_h_i, sigma_m_i, sigma_h_i, rho_i)

Continuous scores are then bucketed with G-1 thresholds drawn uniformly from
``[mu - sigma, mu + sigma]`` on each side, and every requested measure is
evaluated on the discretized pair.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import check_seed, derived_rng, pmap
from .coef import CoefKind, pearson_rows
from .data import MetaEvalDataset, ScoreMatrix
from .measures import Grouping, Measure, UndefinedMeasureError, evaluate, measure_values

# bounds on the within-system correlation
RHO_BOUNDS = (-1.0, 1.0)
MIN_TRUNCATED_MASS = 1e-12


def _check_rho(rho, name="rho"):
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"{name} must lie in [-1, 1], got {rho}")


def sample_bivariate_normal(mu_a, mu_b, sigma_a, sigma_b, rho, rng, size=None):
    """Draw ``(a, b)`` with the given marginals and correlation.

    Parameters broadcast against each other and against ``size``.
    """
    sigma_a = np.asarray(sigma_a, dtype=np.float64)
    sigma_b = np.asarray(sigma_b, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(sigma_a <= 0) or np.any(sigma_b <= 0):
        raise ValueError("standard deviations must be positive")
    if np.any((rho < -1) | (rho > 1)):
        raise ValueError("rho must lie in [-1, 1]")
    if size is None:
        size = np.broadcast(mu_a, mu_b, sigma_a, sigma_b, rho).shape
    u = rng.standard_normal(size)
    v = rng.standard_normal(size)
    a = mu_a + sigma_a * u
    b = mu_b + sigma_b * (rho * u + np.sqrt(1.0 - rho * rho) * v)
    if np.ndim(a) == 0:
        return float(a), float(b)
    return a, b


def _norm_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def truncated_mass(mu, sigma, lo, hi) -> float:
    a, b = (lo - mu) / sigma, (hi - mu) / sigma
    if a > 0:
        # upper tail: difference of survival functions keeps precision
        return _norm_cdf(-a) - _norm_cdf(-b)
    return _norm_cdf(b) - _norm_cdf(a)


def sample_truncated_normal(mu, sigma, lo, hi, rng, size=None, max_rounds=1000):
    """Normal(mu, sigma) conditioned on [lo, hi], by rejection.

    Raises ValueError when the interval holds (numerically) no probability
    mass, or if ``max_rounds`` batches fail to fill the request.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    mass = truncated_mass(mu, sigma, lo, hi)
    if mass < MIN_TRUNCATED_MASS:
        raise ValueError(
            f"[{lo}, {hi}] has probability {mass:.3g} under normal({mu}, {sigma}); "
            "rejection sampling would not terminate"
        )
    n = 1 if size is None else int(np.prod(size))
    out = np.empty(n)
    filled = 0
    for _ in range(max_rounds):
        need = n - filled
        batch = min(int(need / mass * 1.2) + 16, 1 << 20)
        draws = mu + sigma * rng.standard_normal(batch)
        keep = draws[(draws >= lo) & (draws <= hi)][:need]
        out[filled:filled + keep.size] = keep
        filled += keep.size
        if filled == n:
            return float(out[0]) if size is None else out.reshape(size)
    raise ValueError(f"rejection sampling did not finish within {max_rounds} rounds")


def discretize(m, thresholds):
    """Bucket each value: the smallest k with ``v <= t_k``, else G = len(thresholds) + 1.

    Buckets are 1..G stored as floats. Accepts a ScoreMatrix or an array.
    """
    t = np.asarray(thresholds, dtype=np.float64)
    if t.ndim != 1:
        raise ValueError("thresholds must be a 1-D vector")
    if np.any(np.diff(t) <= 0):
        raise ValueError("thresholds must be strictly ascending")
    values = m.values if isinstance(m, ScoreMatrix) else np.asarray(m, dtype=np.float64)
    out = (np.searchsorted(t, values, side="left") + 1).astype(np.float64)
    return m.with_values(out) if isinstance(m, ScoreMatrix) else out


@dataclass(frozen=True)
class SimulationParams:
    mu_m: float = 0.47
    mu_h: float = 0.65
    sigma_m: float = 0.16
    sigma_h: float = 0.14
    rho_sys: float = 0.92
    mu_rho_item: float = 0.35
    sigma_rho_item: float = 0.14
    N: int = 16
    M: int = 100
    G_m: int = 13
    G_h: int = 13
    T1: int = 100
    T2: int = 100
    seed: int = 0
    # per-system within-system stds; None means sigma_m / sigma_h for every system
    sigma_m_items: tuple | None = None
    sigma_h_items: tuple | None = None
    # diagnostic: map one uniform draw onto both threshold ranges (needs G_m == G_h)
    shared_thresholds: bool = False

    def __post_init__(self):
        if self.sigma_m <= 0 or self.sigma_h <= 0:
            raise ValueError("sigma_m and sigma_h must be positive")
        if self.sigma_rho_item < 0:
            raise ValueError("sigma_rho_item must be non-negative")
        _check_rho(self.rho_sys, "rho_sys")
        if self.sigma_rho_item == 0:
            # no spread: every system uses mu_rho_item itself as its correlation
            _check_rho(self.mu_rho_item, "mu_rho_item")
        for name in ("N", "M"):
            if int(getattr(self, name)) < 2:
                raise ValueError(f"{name} must be >= 2")
        for name in ("G_m", "G_h"):
            if int(getattr(self, name)) < 2:
                raise ValueError(f"{name} must be >= 2")
        for name in ("T1", "T2"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        check_seed(self.seed)
        for name in ("sigma_m_items", "sigma_h_items"):
            v = getattr(self, name)
            if v is not None:
                v = tuple(float(s) for s in v)
                if len(v) != self.N or min(v) <= 0:
                    raise ValueError(f"{name} needs {self.N} positive values")
                object.__setattr__(self, name, v)
        if self.shared_thresholds and self.G_m != self.G_h:
            raise ValueError("shared_thresholds requires G_m == G_h")

    def replace(self, **changes) -> "SimulationParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k in ("sigma_m_items", "sigma_h_items"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationParams":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown simulation parameters: {sorted(unknown)}")
        return cls(**d)


def read_params(path) -> SimulationParams:
    with open(path, encoding="utf-8") as fh:
        return SimulationParams.from_dict(json.load(fh))


def write_params(params: SimulationParams, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params.to_dict(), fh, indent=2)
        fh.write("\n")


def _within_sigmas(params):
    sm, sh = params.sigma_m, params.sigma_h
    if params.sigma_m_items is not None:
        sm = np.array(params.sigma_m_items)[:, None]
    if params.sigma_h_items is not None:
        sh = np.array(params.sigma_h_items)[:, None]
    return sm, sh


def sample_scores(params: SimulationParams, rng) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One draw of continuous (metric, human) N x M matrices and the per-system rho_i."""
    N, M = int(params.N), int(params.M)
    mu_m_i, mu_h_i = sample_bivariate_normal(
        params.mu_m, params.mu_h, params.sigma_m, params.sigma_h, params.rho_sys, rng, size=N
    )
    if params.sigma_rho_item == 0:
        rho_i = np.full(N, float(params.mu_rho_item))
    else:
        rho_i = sample_truncated_normal(
            params.mu_rho_item, params.sigma_rho_item, *RHO_BOUNDS, rng, size=N
        )
    sm, sh = _within_sigmas(params)
    x, z = sample_bivariate_normal(
        mu_m_i[:, None], mu_h_i[:, None], sm, sh, rho_i[:, None], rng, size=(N, M)
    )
    return x, z, rho_i


def _thresholds(rng, mu, sigma, count, T2):
    u = rng.uniform(mu - sigma, mu + sigma, size=(T2, count))
    return np.sort(u, axis=1)


def _discretize_stack(values, thresholds):
    # thresholds: (T2, G-1), sorted; ties between draws are harmless here
    return np.stack(
        [np.searchsorted(t, values, side="left") + 1 for t in thresholds]
    ).astype(np.float64)


def _outer_iteration(params, measures, t1):
    """Measure values for the T2 discretizations of outer iteration t1: (len(measures), T2)."""
    seed = params.seed
    x, z, _ = sample_scores(params, derived_rng(seed, t1, 0))
    T2 = int(params.T2)
    if params.shared_thresholds:
        u = np.sort(derived_rng(seed, t1, 1).uniform(size=(T2, params.G_m - 1)), axis=1)
        tm = params.mu_m - params.sigma_m + 2 * params.sigma_m * u
        th = params.mu_h - params.sigma_h + 2 * params.sigma_h * u
    else:
        tm = _thresholds(derived_rng(seed, t1, 1), params.mu_m, params.sigma_m, params.G_m - 1, T2)
        th = _thresholds(derived_rng(seed, t1, 2), params.mu_h, params.sigma_h, params.G_h - 1, T2)
    xd = _discretize_stack(x, tm)
    zd = _discretize_stack(z, th)
    out = np.empty((len(measures), T2))
    for k, measure in enumerate(measures):
        out[k], _ = measure_values(measure, xd, zd)
    return out


@dataclass
class SimulationResult:
    params: SimulationParams
    measures: list[Measure]
    means: dict  # token -> mean correlation (None if every evaluation was undefined)
    evaluations: int
    undefined: dict = field(default_factory=dict)  # token -> skipped evaluations

    def __getitem__(self, measure):
        key = measure.token if isinstance(measure, Measure) else measure
        return self.means[key]


def simulate(params: SimulationParams, measures, workers: int = 1) -> SimulationResult:
    """Mean of each measure over T1 x T2 simulated, discretized datasets.

    Outer iteration t draws its continuous matrices from a stream keyed by
    (seed, t, 0) and its metric/human thresholds from (seed, t, 1) and
    (seed, t, 2), so sweeps over G_m share the continuous data. Undefined
    evaluations are skipped and counted.
    """
    measures = list(measures)
    parts = pmap(lambda t: _outer_iteration(params, measures, t), range(int(params.T1)), workers)
    values = np.concatenate(parts, axis=1)
    means, undefined = {}, {}
    for k, m in enumerate(measures):
        row = values[k]
        ok = ~np.isnan(row)
        undefined[m.token] = int(row.size - ok.sum())
        means[m.token] = math.fsum(row[ok]) / int(ok.sum()) if ok.any() else None
    return SimulationResult(params, measures, means, values.shape[1], undefined)


def simulate_sweep(params: SimulationParams, gm_values, measures, workers: int = 1):
    """Run :func:`simulate` for each G_m; returns a list of (G_m, SimulationResult)."""
    return [(int(g), simulate(params.replace(G_m=int(g)), measures, workers)) for g in gm_values]


def write_sweep(sweep, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["G_m", "measure", "mean_value"])
        for g, res in sweep:
            for m in res.measures:
                v = res.means[m.token]
                w.writerow([g, m.token, "undef" if v is None else repr(float(v))])


# -- parameter estimation --------------------------------------------------


@dataclass(frozen=True)
class EstimatedParams:
    source: str
    metric: str
    mu_m: float
    sigma_m: float
    mu_h: float
    sigma_h: float
    rho_sys: float
    mu_rho_item: float
    sigma_rho_item: float
    N: int
    M: int
    skipped_rows: int = 0

    def to_simulation_params(self, **overrides) -> SimulationParams:
        fields = {
            k: getattr(self, k)
            for k in ("mu_m", "mu_h", "sigma_m", "sigma_h", "rho_sys",
                      "mu_rho_item", "sigma_rho_item", "N", "M")
        }
        fields.update(overrides)
        return SimulationParams(**fields)


SYSTEM_PEARSON = Measure(Grouping.SYSTEM, CoefKind.PEARSON)
ITEM_PEARSON = Measure(Grouping.ITEM, CoefKind.PEARSON)


def estimate_params(dataset: MetaEvalDataset, metric_name: str) -> EstimatedParams:
    """Estimate generative parameters for one metric against the human scores.

    Matrices with a declared scale are first normalized to [0, 1]; the rest
    are assumed to be on that scale already. Spreads are the mean of per-system
    population standard deviations. Rows that are constant on either side
    have no within-system correlation; they are skipped and counted.
    """
    ds = dataset.normalized()
    x = ds.metric(metric_name).values
    z = ds.human.values
    row_r = pearson_rows(x, z)
    ok = ~np.isnan(row_r)
    if not ok.any():
        raise UndefinedMeasureError("every system row is constant; no within-system correlation")
    rho_sys = evaluate(SYSTEM_PEARSON, x, z).value
    mu_rho_item = evaluate(ITEM_PEARSON, x, z).value
    return EstimatedParams(
        source=dataset.source or "<memory>",
        metric=metric_name,
        mu_m=float(x.mean()),
        sigma_m=float(x.std(axis=1).mean()),
        mu_h=float(z.mean()),
        sigma_h=float(z.std(axis=1).mean()),
        rho_sys=float(rho_sys),
        mu_rho_item=float(mu_rho_item),
        sigma_rho_item=float(row_r[ok].std()),
        N=int(x.shape[0]),
        M=int(x.shape[1]),
        skipped_rows=int((~ok).sum()),
    )


def synthetic_dataset(params: SimulationParams, seed: int | None = None, name: str = "metric"):
    """A one-metric dataset of continuous scores drawn from the generative model."""
    rng = np.random.default_rng(params.seed if seed is None else seed)
    x, z, _ = sample_scores(params, rng)
    human = ScoreMatrix.from_array(z)
    metric = ScoreMatrix.from_array(x)
    return MetaEvalDataset(human, ((name, metric),), source="<synthetic>")
