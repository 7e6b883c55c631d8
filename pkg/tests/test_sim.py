"""Tests for the Monte Carlo engine."""

import math

import numpy as np
import pytest

from eods import sim
from eods.errors import DomainError

# closed form for the lognormal scale when variance = 5:
# (e^s - 1) e^s = 5 gives e^s = (1 + sqrt(21)) / 2
REF_LOGNORMAL_SIGMA2 = 1.0265030834096078
REF_LOGNORMAL_SHIFT = 0.358257569495584

TOL_SOLVER = 1e-8


def _scenario(**overrides):
    base = dict(
        n_full=200,
        beta_y=0.4,
        gamma=0.2,
        sampling="extreme",
        estimator="odeb",
        replicates=50,
        seed=902,
    )
    base.update(overrides)
    return sim.SimScenario(**base)


def test_scenario_defaults_and_accessors():
    s = _scenario()
    assert s.alpha_y == 5.0
    assert s.noise_variance == 5.0
    assert s.x_mean == 0.0
    assert s.x_var == 1.0
    assert s.residual_family == "normal"
    assert s.alpha_level == 0.05
    assert s.n_selected == 40


def test_scenario_scaled_t_token_normalized():
    s = _scenario(residual_family="scaled_t(10)")
    assert s.residual_family == "scaled_t"
    assert s.t_df == 10
    s = _scenario(residual_family="scaled_t", t_df=20)
    assert s.t_df == 20


def test_scenario_scaled_t_token_conflict():
    with pytest.raises(DomainError):
        _scenario(residual_family="scaled_t(10)", t_df=20)
    # agreeing values are fine
    s = _scenario(residual_family="scaled_t(10)", t_df=10)
    assert s.t_df == 10


def test_scenario_validation():
    with pytest.raises(DomainError):
        _scenario(residual_family="scaled_t")  # df required
    with pytest.raises(DomainError):
        _scenario(residual_family="scaled_t", t_df=2)
    with pytest.raises(DomainError):
        _scenario(residual_family="normal", t_df=10)
    with pytest.raises(DomainError):
        _scenario(residual_family="cauchy")
    with pytest.raises(DomainError):
        _scenario(gamma=0.0)
    with pytest.raises(DomainError):
        _scenario(gamma=1.5)
    with pytest.raises(DomainError):
        _scenario(sampling="stratified")
    with pytest.raises(DomainError):
        _scenario(estimator="mle")
    with pytest.raises(DomainError):
        _scenario(replicates=0)
    with pytest.raises(DomainError):
        _scenario(n_full=4)
    with pytest.raises(DomainError):
        _scenario(noise_variance=0.0)
    with pytest.raises(DomainError):
        _scenario(x_var=-1.0)
    with pytest.raises(DomainError):
        _scenario(alpha_level=1.0)
    with pytest.raises(DomainError):
        _scenario(seed=-1)
    with pytest.raises(DomainError):
        _scenario(seed=2**64)


def test_n_selected_rounds_half_away_from_zero():
    assert _scenario(n_full=190, gamma=0.1).n_selected == 19
    assert _scenario(n_full=10, gamma=0.25).n_selected == 3
    assert _scenario(n_full=10, gamma=0.35).n_selected == 4


def test_residual_sampler_normal_variance():
    s = sim.residual_sampler("normal", 5.0)
    rng = np.random.default_rng(41)
    draws = s.draw(rng, 1_000_000)
    assert abs(np.var(draws) / 5.0 - 1.0) < 0.01
    assert abs(np.mean(draws)) < 0.01


def test_residual_sampler_scaled_t_variance():
    # literal sqrt(5) scale: variance is 5 * 10 / 8, not 5
    s = sim.residual_sampler("scaled_t", 5.0, t_df=10)
    rng = np.random.default_rng(42)
    draws = s.draw(rng, 1_000_000)
    assert abs(np.var(draws) / 6.25 - 1.0) < 0.03


def test_residual_sampler_lognormal_solver_constants():
    s = sim.residual_sampler("shifted_lognormal", 5.0)
    assert abs(s.sigma2_star - REF_LOGNORMAL_SIGMA2) < TOL_SOLVER
    assert abs(s.mode_shift - REF_LOGNORMAL_SHIFT) < TOL_SOLVER
    assert s.solver_tolerance is not None


def test_residual_sampler_lognormal_variance_and_mode():
    s = sim.residual_sampler("shifted_lognormal", 5.0)
    rng = np.random.default_rng(43)
    draws = s.draw(rng, 1_000_000)
    assert abs(np.var(draws) / 5.0 - 1.0) < 0.03
    # density peaks at the mode, which the shift puts at zero
    near_mode = np.mean(np.abs(draws) < 0.05)
    away = np.mean(np.abs(draws - 1.0) < 0.05)
    assert near_mode > away
    assert float(np.min(draws)) > -REF_LOGNORMAL_SHIFT - 1e-9
    # the mean stays positive: mode-centering does not mean-center
    assert np.mean(draws) > 1.0


def test_residual_sampler_validation():
    with pytest.raises(DomainError):
        sim.residual_sampler("normal", 0.0)
    with pytest.raises(DomainError):
        sim.residual_sampler("normal", 5.0, t_df=10)
    with pytest.raises(DomainError):
        sim.residual_sampler("scaled_t", 5.0)
    with pytest.raises(DomainError):
        sim.residual_sampler("scaled_t", 5.0, t_df=2)
    with pytest.raises(DomainError):
        sim.residual_sampler("shifted_lognormal", 5.0, t_df=5)
    with pytest.raises(DomainError):
        sim.residual_sampler("triangular", 5.0)


def test_generate_dataset_deterministic():
    s = _scenario()
    x1, y1 = sim.generate_dataset(s, 7)
    x2, y2 = sim.generate_dataset(s, 7)
    assert np.array_equal(x1, x2) and np.array_equal(y1, y2)
    x3, y3 = sim.generate_dataset(s, 8)
    assert not np.array_equal(x1, x3)


def test_generate_dataset_shared_across_arms():
    # scenarios differing only in sampling/estimator see identical data
    a = _scenario(sampling="extreme", estimator="odeb")
    b = _scenario(sampling="random", estimator="ols")
    xa, ya = sim.generate_dataset(a, 3)
    xb, yb = sim.generate_dataset(b, 3)
    assert np.array_equal(xa, xb) and np.array_equal(ya, yb)


def test_generate_dataset_null_independence():
    s = _scenario(n_full=100_000, beta_y=0.0, replicates=1, seed=11)
    x, y = sim.generate_dataset(s, 0)
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.01


def test_generate_dataset_model_equation():
    s = _scenario(n_full=100_000, beta_y=0.7, alpha_y=2.0, seed=12)
    x, y = sim.generate_dataset(s, 0)
    resid = y - (2.0 + 0.7 * x)
    assert abs(np.var(resid) / 5.0 - 1.0) < 0.02
    assert abs(np.mean(x) - s.x_mean) < 0.03
    assert abs(np.var(x) / s.x_var - 1.0) < 0.02


def test_run_scenario_metric_invariants():
    m = sim.run_scenario(_scenario(replicates=150))
    assert m.replicates_used == 150
    assert m.rmse >= abs(m.bias)
    assert 0.0 <= m.rejection_rate <= 1.0
    assert 0.0 <= m.ci_coverage <= 1.0
    assert m.mean_ci_length > 0.0
    assert m.mae >= 0.0
    assert abs(m.bias - (m.mean_estimate - 0.4)) < 1e-12


def test_run_scenario_deterministic():
    a = sim.run_scenario(_scenario(replicates=60))
    b = sim.run_scenario(_scenario(replicates=60))
    assert a == b


def test_run_scenario_recovers_effect():
    m = sim.run_scenario(
        _scenario(n_full=400, beta_y=0.4, replicates=300, seed=77)
    )
    assert abs(m.mean_estimate - 0.4) < 0.08
    assert m.ci_coverage > 0.9


def test_run_scenario_ols_extreme_is_biased_upward():
    m = sim.run_scenario(
        _scenario(
            n_full=400,
            beta_y=0.2,
            estimator="ols",
            replicates=300,
            seed=78,
        )
    )
    assert m.bias > 0.2


def test_run_scenario_null_rejection_near_level():
    m = sim.run_scenario(
        _scenario(beta_y=0.0, replicates=400, seed=79)
    )
    assert 0.02 <= m.rejection_rate <= 0.09


def test_run_scenario_random_sampling_unbiased():
    m = sim.run_scenario(
        _scenario(
            n_full=400,
            sampling="random",
            estimator="ols",
            replicates=300,
            seed=80,
        )
    )
    assert abs(m.bias) < 0.05


def test_run_scenario_all_replicates_dropped():
    # 3 selected rows cannot support the reverse-fit estimator
    m = sim.run_scenario(
        _scenario(n_full=15, gamma=0.2, replicates=20)
    )
    assert m.replicates_used == 0
    assert math.isnan(m.mean_estimate)
    assert math.isnan(m.rejection_rate)


def test_run_scenario_too_few_selected_rejected():
    with pytest.raises(DomainError):
        sim.run_scenario(_scenario(n_full=20, gamma=0.1))


def test_run_grid_single_matches_run_scenario():
    s = _scenario(replicates=40)
    rows = sim.run_grid([s])
    assert len(rows) == 1
    assert rows[0].error is None
    assert rows[0].metrics == sim.run_scenario(s)


def test_run_grid_preserves_order_and_flags_errors():
    good = _scenario(replicates=10)
    bad = _scenario(n_full=20, gamma=0.1, replicates=10)
    rows = sim.run_grid([good, bad, good])
    assert [r.error is None for r in rows] == [True, False, True]
    assert "selects only" in rows[1].error
    assert rows[1].metrics is None


def test_run_grid_worker_count_invariance():
    grid = [
        _scenario(replicates=40, seed=5, sampling=samp, estimator=est)
        for samp in ("extreme", "random")
        for est in ("ols", "odeb")
    ]
    serial = sim.run_grid(grid, workers=1)
    parallel = sim.run_grid(grid, workers=3)
    assert [r.metrics for r in serial] == [r.metrics for r in parallel]


def test_run_grid_empty_rejected():
    with pytest.raises(DomainError):
        sim.run_grid([])
