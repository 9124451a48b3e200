import math

import numpy as np
import pytest

from ssle_security.core import GameKind, ParameterError
from ssle_security.grinding import grinding_table, grinding_win_probability, speed_gamma
from ssle_security.montecarlo import (
    McEstimate,
    SimConfig,
    estimate_brw_cdf,
    estimate_catch_up_probability,
    estimate_gap_pmf,
    estimate_grinding_win_probability,
    estimate_mean_gap,
    estimate_win_probability,
    simulate_brw_max,
    simulate_gap_trajectory,
    simulate_gaps,
)
from ssle_security.private_game import catch_up_probability, expected_gap, gap_pmf, win_probability

MILLION = 10**6


def binomial_z(estimate, exact, runs):
    """z-scores with the standard error of the exact probability."""
    exact = np.asarray(exact, dtype=float)
    se = np.sqrt(exact * (1.0 - exact) / runs)
    diff = np.asarray(estimate) - exact
    return np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff == 0, 0.0, np.inf))


# --- configuration and reproducibility ------------------------------------------------


def test_config_validation():
    with pytest.raises(ParameterError):
        SimConfig(runs=0)
    with pytest.raises(ParameterError):
        SimConfig(seed=-1)
    with pytest.raises(ParameterError):
        SimConfig(catchup_horizon_multiplier=0.5)


def test_thread_count_comes_from_the_environment(monkeypatch):
    monkeypatch.setenv("SSLE_SECURITY_THREADS", "3")
    assert SimConfig().n_threads() == 3
    assert SimConfig(threads=2).n_threads() == 2


@pytest.mark.parametrize("kind", list(GameKind))
def test_same_seed_same_output_for_any_thread_count(kind):
    cfg1 = SimConfig(seed=7, runs=40_000, threads=1)
    cfg4 = SimConfig(seed=7, runs=40_000, threads=4)
    assert np.array_equal(simulate_gaps(kind, 0.3, 12, cfg1), simulate_gaps(kind, 0.3, 12, cfg4))
    assert estimate_win_probability(kind, 0.3, 6, cfg1) == estimate_win_probability(kind, 0.3, 6, cfg4)
    other = simulate_gaps(kind, 0.3, 12, SimConfig(seed=8, runs=40_000))
    assert not np.array_equal(simulate_gaps(kind, 0.3, 12, cfg1), other)


def test_brw_is_reproducible_across_thread_counts():
    a = simulate_brw_max("ple", 0.3, 25, SimConfig(seed=3, runs=40_000, threads=1, saturation_cap=10**4))
    b = simulate_brw_max("ple", 0.3, 25, SimConfig(seed=3, runs=40_000, threads=3, saturation_cap=10**4))
    assert np.array_equal(a, b)


def test_trial_prefix_is_stable_when_runs_grow():
    # a trial's draws depend on its block only, not on how many trials follow
    small = simulate_gaps("ple", 0.3, 8, SimConfig(seed=5, runs=1000))
    large = simulate_gaps("ple", 0.3, 8, SimConfig(seed=5, runs=50_000))
    assert np.array_equal(small, large[:1000])


def test_z_score_helper():
    assert McEstimate(0.5, 0.1, 10).z_score(0.3) == pytest.approx(2.0)
    assert McEstimate(1.0, 0.0, 10).z_score(1.0) == 0.0
    assert McEstimate(0.9, 0.0, 10).z_score(1.0) == -math.inf


# --- private games --------------------------------------------------------------------


def test_empty_trajectory():
    rng = np.random.default_rng(0)
    assert simulate_gap_trajectory("ssle", 0.3, 0, rng) == 0


def test_single_trajectories_follow_the_pmf():
    rng = np.random.default_rng(11)
    runs = 20_000
    gaps = np.array([simulate_gap_trajectory("ple", 0.33, 6, rng) for _ in range(runs)])
    freq = np.bincount(gaps + 6, minlength=13) / runs
    assert np.all(np.abs(binomial_z(freq, gap_pmf("ple", 0.33, 6).probs(), runs)) < 4.5)


@pytest.mark.parametrize("kind", list(GameKind))
def test_gap_pmf_estimate_within_four_sigma(kind):
    cfg = SimConfig(seed=21, runs=MILLION)
    _, freq, _ = estimate_gap_pmf(kind, 0.33, 10, cfg)
    assert np.all(np.abs(binomial_z(freq, gap_pmf(kind, 0.33, 10).probs(), cfg.runs)) < 4)


def test_ssle_mean_gap_within_three_standard_errors():
    est = estimate_mean_gap("ssle", 0.33, 50, SimConfig(seed=4, runs=MILLION))
    assert abs(est.z_score(expected_gap("ssle", 0.33, 50))) < 3


@pytest.mark.slow
def test_ple_mean_gap_over_a_thousand_rounds():
    est = estimate_mean_gap("ple", 0.33, 1000, SimConfig(seed=4, runs=MILLION))
    assert abs(est.z_score(expected_gap("ple", 0.33, 1000))) < 3


def test_win_estimate_for_one_round():
    est = estimate_win_probability("ssle", 1 / 3, 1, SimConfig(seed=1, runs=MILLION, catchup_horizon_multiplier=50))
    assert abs(est.mean - 2 / 3) <= 3 * est.std_error + est.truncation_residual


def test_win_estimate_for_the_empty_game():
    for kind in GameKind:
        est = estimate_win_probability(kind, 0.4, 0, SimConfig(runs=1000))
        assert est.mean == 1.0 and est.std_error == 0.0 and est.z_score(1.0) == 0.0


@pytest.mark.slow
def test_ple_win_estimate_at_thirty_rounds():
    est = estimate_win_probability("ple", 0.25, 30, SimConfig(seed=2, runs=MILLION))
    exact = win_probability("ple", 0.25, 30).prob
    assert abs(est.mean - exact) <= 3 * est.std_error + est.truncation_residual


def test_truncation_residual_accounts_for_the_bias():
    # a short catch-up window loses mass; the reported residual must cover it
    est = estimate_win_probability("ssle", 0.45, 4, SimConfig(seed=9, runs=200_000, catchup_horizon_multiplier=1))
    exact = win_probability("ssle", 0.45, 4).prob
    assert est.mean < exact
    assert exact - est.mean <= est.truncation_residual + 4 * est.std_error


def test_catch_up_first_passage():
    est = estimate_catch_up_probability("ple", 0.33, 2, SimConfig(seed=6, runs=400_000, horizon=10_000))
    exact = catch_up_probability("ple", 0.33, 2).prob
    assert abs(est.mean - exact) <= 3 * est.std_error + est.truncation_residual


# --- branching random walk ------------------------------------------------------------


def test_brw_empty_game():
    assert np.all(simulate_brw_max("ssle", 0.3, 0, SimConfig(runs=100)) == 0)


def test_brw_cdf_matches_ssle_table():
    cfg = SimConfig(seed=13, runs=MILLION)
    js, p, _ = estimate_brw_cdf("ssle", 0.3, 5, cfg)
    exact = grinding_table("ssle", 0.3, 5).probs()[5]
    assert np.all(np.abs(binomial_z(p, exact[js], cfg.runs)) < 4)


def test_brw_cell_matches_ple_table():
    cfg = SimConfig(seed=17, runs=MILLION)
    _, p, _ = estimate_brw_cdf("ple", 0.2, 5, cfg, js=[3])
    exact = grinding_table("ple", 0.2, 5).cell(5, 3).prob
    assert abs(binomial_z(p[0], exact, cfg.runs)) < 3


def test_grinding_win_estimate():
    cfg = SimConfig(seed=19, runs=300_000)
    for kind in ("ssle", "ple"):
        est = estimate_grinding_win_probability(kind, 0.2, 20, cfg)
        assert abs(est.z_score(grinding_win_probability(kind, 0.2, 20).prob)) < 4


BRW_VALIDATION_GRID = [("ssle", 0.3, 5), ("ple", 0.2, 5), ("ssle", 0.3, 30), ("ple", 0.2, 30)]


@pytest.mark.parametrize("kind,alpha,n", BRW_VALIDATION_GRID)
def test_saturation_cap_is_irrelevant_on_the_validation_grid(kind, alpha, n):
    runs = 20_000
    lo = estimate_brw_cdf(kind, alpha, n, SimConfig(seed=23, runs=runs, saturation_cap=10**4))
    hi = estimate_brw_cdf(kind, alpha, n, SimConfig(seed=23, runs=runs, saturation_cap=2 * 10**4))
    se = np.maximum(lo[2], hi[2])
    assert np.all(np.abs(lo[1] - hi[1]) <= se)


def test_saturation_introduces_no_detectable_bias():
    # here cells do saturate; once counts differ the two streams decouple, so
    # compare as independent samples
    runs = 40_000
    lo = estimate_brw_cdf("ple", 0.45, 40, SimConfig(seed=23, runs=runs, saturation_cap=10**4))
    hi = estimate_brw_cdf("ple", 0.45, 40, SimConfig(seed=31, runs=runs, saturation_cap=2 * 10**4))
    pooled = (lo[1] + hi[1]) / 2
    se_diff = np.sqrt(2 * pooled * (1 - pooled) / runs)
    assert np.all(np.abs(lo[1] - hi[1]) <= 4 * se_diff + 1e-12)


def test_brw_validation_guards():
    with pytest.raises(ParameterError):
        simulate_brw_max("ssle", 0.3, 5, SimConfig(saturation_cap=100))
    assert simulate_brw_max("ssle", 0.3, 5, SimConfig(runs=10, saturation_cap=100), validation=False).shape == (10,)
    with pytest.raises(ParameterError):
        simulate_brw_max("ind", 0.3, 5, SimConfig())


@pytest.mark.slow
def test_brw_speed_at_two_thousand_rounds():
    maxima = simulate_brw_max("ple", 0.2, 2000, SimConfig(seed=29, runs=1000))
    assert maxima.mean() / 2000 == pytest.approx(-speed_gamma(0.2).gamma, abs=0.01)
