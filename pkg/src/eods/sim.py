"""Monte Carlo engine for design comparisons.

Generates bivariate (x, y) data, applies extreme or random subset
selection, runs the OLS and reverse-regression estimator arms, and
aggregates bias / RMSE / MAE / rejection rate / CI coverage / CI length
over replicates.

Determinism contract: every replicate derives its own generator from
(seed, replicate_index, stream), so results are bit-identical for a
fixed seed no matter how work is scheduled across processes. Stream 0
drives data generation, stream 1 the random-sampling subset draw;
scenarios differing only in sampling or estimator therefore see the
same data replicate-for-replicate (paired comparison).
"""

import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import odeb, regress, screen
from ._util import round_half_away_from_zero
from .dist import t_quantile
from .errors import (
    DegenerateInput,
    DomainError,
    EodsError,
    Infeasible,
    InsufficientData,
)

_FAMILIES = ("normal", "scaled_t", "shifted_lognormal")
_SCALED_T_TOKEN = re.compile(r"^scaled_t\((\d+)\)$")
_SEED_MAX = 2**64 - 1


@dataclass
class SimScenario:
    """One cell of a simulation grid."""

    n_full: int
    beta_y: float
    gamma: float
    sampling: str
    estimator: str
    replicates: int
    seed: int
    alpha_y: float = 5.0
    noise_variance: float = 5.0
    x_mean: float = 0.0
    x_var: float = 1.0
    residual_family: str = "normal"
    t_df: Optional[int] = None
    alpha_level: float = 0.05

    def __post_init__(self):
        token = _SCALED_T_TOKEN.match(str(self.residual_family))
        if token:
            df = int(token.group(1))
            if self.t_df is not None and int(self.t_df) != df:
                raise DomainError(
                    f"residual_family {self.residual_family!r} conflicts "
                    f"with t_df={self.t_df!r}"
                )
            self.residual_family = "scaled_t"
            self.t_df = df
        if self.residual_family not in _FAMILIES:
            raise DomainError(
                f"unknown residual_family {self.residual_family!r}"
            )
        if self.residual_family == "scaled_t":
            if self.t_df is None:
                raise DomainError("scaled_t needs a degrees-of-freedom value")
            self.t_df = int(self.t_df)
            if self.t_df <= 2:
                raise DomainError("scaled_t degrees of freedom must exceed 2")
        elif self.t_df is not None:
            raise DomainError(
                f"t_df only applies to scaled_t, not {self.residual_family!r}"
            )
        self.n_full = int(self.n_full)
        self.replicates = int(self.replicates)
        self.seed = int(self.seed)
        if self.n_full < 5:
            raise DomainError(f"n_full must be at least 5, got {self.n_full}")
        if self.replicates < 1:
            raise DomainError("replicates must be at least 1")
        if not 0.0 < self.gamma <= 1.0:
            raise DomainError(f"gamma must lie in (0, 1], got {self.gamma!r}")
        if not self.noise_variance > 0.0:
            raise DomainError("noise_variance must be positive")
        if not self.x_var > 0.0:
            raise DomainError("x_var must be positive")
        if not 0.0 < self.alpha_level < 1.0:
            raise DomainError("alpha_level must lie strictly in (0, 1)")
        if self.sampling not in ("extreme", "random"):
            raise DomainError(f"unknown sampling {self.sampling!r}")
        if self.estimator not in ("ols", "odeb"):
            raise DomainError(f"unknown estimator {self.estimator!r}")
        if not 0 <= self.seed <= _SEED_MAX:
            raise DomainError("seed must fit in an unsigned 64-bit integer")

    @property
    def n_selected(self):
        return round_half_away_from_zero(self.gamma * self.n_full)


@dataclass
class SimMetrics:
    """Aggregates over the replicates that produced an estimate."""

    mean_estimate: float
    bias: float
    rmse: float
    mae: float  # median absolute error
    rejection_rate: float
    ci_coverage: float
    mean_ci_length: float
    replicates_used: int


@dataclass
class GridResult:
    """One grid row: the scenario, its metrics, or the error that stopped it."""

    scenario: SimScenario
    metrics: Optional[SimMetrics]
    error: Optional[str] = None


@dataclass
class ResidualSampler:
    """Draws centered-noise vectors for one residual family.

    For shifted_lognormal the solver metadata records the numerically
    determined log-scale variance and mode shift.
    """

    family: str
    noise_variance: float
    t_df: Optional[int] = None
    sigma2_star: Optional[float] = None
    mode_shift: Optional[float] = None
    solver_tolerance: Optional[float] = None

    def draw(self, rng, n):
        if self.family == "normal":
            return rng.normal(0.0, math.sqrt(self.noise_variance), n)
        if self.family == "scaled_t":
            # literal scale factor: variance is v * df / (df - 2), not v
            return math.sqrt(self.noise_variance) * rng.standard_t(
                self.t_df, n
            )
        draws = rng.lognormal(0.0, math.sqrt(self.sigma2_star), n)
        return draws - self.mode_shift


_LOGNORMAL_SOLVER_TOL = 1e-10


def _solve_lognormal_sigma2(variance):
    """Root of (e^s - 1) e^s = variance, s being the log-scale variance."""
    target = float(variance)

    def g(s):
        return math.expm1(s) * math.exp(s)

    lo, hi = 0.0, 1.0
    while g(hi) < target:
        hi *= 2.0
        if hi > 700.0:
            raise Infeasible(
                f"cannot bracket lognormal scale for variance {variance!r}"
            )
    while hi - lo > _LOGNORMAL_SOLVER_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if g(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def residual_sampler(family, noise_variance, t_df=None):
    """Build the centered-noise sampler for a residual family.

    normal: N(0, v). scaled_t: sqrt(v) * T_df, taken literally, so the
    realized variance is v * df / (df - 2). shifted_lognormal: a
    log-normal with log-mean 0 whose log-scale variance solves
    (e^s - 1) e^s = v, shifted by its mode e^{-s} so the mode sits at 0.
    """
    if not noise_variance > 0.0:
        raise DomainError("noise_variance must be positive")
    if family == "normal":
        if t_df is not None:
            raise DomainError("t_df only applies to scaled_t")
        return ResidualSampler(family="normal", noise_variance=noise_variance)
    if family == "scaled_t":
        if t_df is None or int(t_df) <= 2:
            raise DomainError("scaled_t needs degrees of freedom above 2")
        return ResidualSampler(
            family="scaled_t", noise_variance=noise_variance, t_df=int(t_df)
        )
    if family == "shifted_lognormal":
        if t_df is not None:
            raise DomainError("t_df only applies to scaled_t")
        sigma2 = _solve_lognormal_sigma2(noise_variance)
        return ResidualSampler(
            family="shifted_lognormal",
            noise_variance=noise_variance,
            sigma2_star=sigma2,
            mode_shift=math.exp(-sigma2),
            solver_tolerance=_LOGNORMAL_SOLVER_TOL,
        )
    raise DomainError(f"unknown residual_family {family!r}")


def _replicate_rng(seed, replicate_index, stream):
    return np.random.Generator(
        np.random.Philox(seed=[seed, replicate_index, stream])
    )


def generate_dataset(scenario, replicate_index):
    """One replicate's (x, y) sample, deterministic in (seed, index)."""
    sampler = residual_sampler(
        scenario.residual_family, scenario.noise_variance, scenario.t_df
    )
    rng = _replicate_rng(scenario.seed, replicate_index, 0)
    x = rng.normal(scenario.x_mean, math.sqrt(scenario.x_var), scenario.n_full)
    eps = sampler.draw(rng, scenario.n_full)
    y = scenario.alpha_y + scenario.beta_y * x + eps
    return x, y


def _select_indices(scenario, y, replicate_index):
    if scenario.sampling == "extreme":
        plan = screen.select_extremes(y, scenario.gamma)
        return np.asarray(plan.low_indices + plan.high_indices, dtype=int)
    rng = _replicate_rng(scenario.seed, replicate_index, 1)
    idx = rng.choice(scenario.n_full, size=scenario.n_selected, replace=False)
    return np.sort(idx)


def _estimate_once(scenario, x, y, idx):
    """(estimate, ci_low, ci_high, p_value) for one replicate's arm."""
    x_sub = x[idx]
    y_sub = y[idx]
    confidence = 1.0 - scenario.alpha_level
    if scenario.estimator == "ols":
        fit = regress.fit_simple(
            regress.PairedSample(predictor=x_sub, response=y_sub)
        )
        half = t_quantile(1.0 - scenario.alpha_level / 2.0, fit.df) * (
            fit.se_slope
        )
        return fit.slope, fit.slope - half, fit.slope + half, fit.p_value
    full = odeb.FullResponseSummary.from_responses(y)
    subset = odeb.SelectedSubset.from_arrays(
        x_sub, y_sub, len(idx) / scenario.n_full
    )
    est = odeb.estimate(subset, full, confidence)
    return est.beta_y, est.ci_low, est.ci_high, est.p_value


def run_scenario(scenario):
    """Run all replicates of one scenario and aggregate the metrics.

    Replicates whose subset degenerates (for example zero biomarker
    variance) are dropped and excluded from replicates_used; the run
    itself never aborts on one bad replicate.
    """
    if scenario.n_selected < 3:
        raise DomainError(
            f"gamma {scenario.gamma!r} selects only {scenario.n_selected} "
            f"of {scenario.n_full} rows; need 3"
        )
    estimates = []
    covered = []
    rejected = []
    ci_lengths = []
    for rep in range(scenario.replicates):
        x, y = generate_dataset(scenario, rep)
        try:
            idx = _select_indices(scenario, y, rep)
            est, lo, hi, p = _estimate_once(scenario, x, y, idx)
        except (DegenerateInput, InsufficientData):
            continue
        estimates.append(est)
        covered.append(lo <= scenario.beta_y <= hi)
        rejected.append(p <= scenario.alpha_level)
        ci_lengths.append(hi - lo)
    used = len(estimates)
    if used == 0:
        nan = math.nan
        return SimMetrics(nan, nan, nan, nan, nan, nan, nan, 0)
    err = np.asarray(estimates) - scenario.beta_y
    mean_est = float(np.mean(estimates))
    return SimMetrics(
        mean_estimate=mean_est,
        bias=mean_est - scenario.beta_y,
        rmse=float(np.sqrt(np.mean(err * err))),
        mae=float(np.median(np.abs(err))),
        rejection_rate=float(np.mean(rejected)),
        ci_coverage=float(np.mean(covered)),
        mean_ci_length=float(np.mean(ci_lengths)),
        replicates_used=used,
    )


def _run_one(scenario):
    try:
        return GridResult(scenario=scenario, metrics=run_scenario(scenario))
    except EodsError as exc:
        return GridResult(scenario=scenario, metrics=None, error=str(exc))


def run_grid(scenarios, workers=1):
    """Run a list of scenarios, emitting one result row per input row.

    Row order follows input order. A failing scenario yields a row with
    its error message rather than aborting the grid. workers > 1 fans
    scenarios out to processes; the per-replicate seeding makes output
    identical for any worker count.
    """
    scenarios = list(scenarios)
    if not scenarios:
        raise DomainError("scenario grid is empty")
    if workers is None:
        workers = 1
    workers = int(workers)
    if workers < 1:
        raise DomainError("workers must be at least 1")
    if workers == 1 or len(scenarios) == 1:
        return [_run_one(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, scenarios))
