"""Config parsing, trial orchestration, aggregation, CSV emission, and the
recovery estimators."""

import math
import os

import numpy as np
import pytest

from remas import harness, resilience
from remas.harness import (AggregateCurves, ConfigError, ExperimentConfig,
                           aggregate_curves, fraction_optimal_crossing,
                           load_config, metrics_rows, moving_average,
                           run_experiment, run_trial, sweep, total_recovery)

SMALL = dict(trials=2, n_agents=6, n_arms=6, horizon=800, sigma=1.0,
             changes=((400, 1),), change_rule="tiered", min_gap=0.24,
             min_drop=1.0, n0=40, ucb_sigma=0.35, eta_epi=8.0,
             exceed_threshold=13, window_len=30)


def small_config(**overrides):
    return ExperimentConfig(**{**SMALL, **overrides})


def test_load_config_and_overrides(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text("""
[experiment]
name = demo
modes = independent_ducb,cooperative_ducb
trials = 4
horizon = 1000

[env]
arms = 8
sigma = 0.5
changes = 300:1

[topology]
kind = smallworld
n = 20

[detector]
epsilon1 = 1.4
exceed_threshold = 12
""")
    cfg = load_config(str(path))
    assert cfg.name == "demo"
    assert cfg.modes == ("independent_ducb", "cooperative_ducb")
    assert cfg.trials == 4 and cfg.horizon == 1000
    assert cfg.n_arms == 8 and cfg.sigma == 0.5
    assert cfg.changes == ((300, 1),)
    assert cfg.topology == "smallworld" and cfg.n_agents == 20
    assert cfg.epsilon1 == 1.4 and cfg.exceed_threshold == 12

    cfg2 = load_config(str(path), overrides=["experiment.trials=7",
                                             "env.sigma=1.0"])
    assert cfg2.trials == 7 and cfg2.sigma == 1.0


def test_load_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[experiment]\nbogus = 1\n")
    with pytest.raises(ConfigError):
        load_config(str(path))
    path.write_text("[made_up]\nx = 1\n")
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_resid_threshold_units():
    cfg = small_config(epsilon1=1.6, sigma=0.5, epsilon1_units="sigma")
    assert cfg.resid_threshold() == pytest.approx(0.8)
    cfg = small_config(epsilon1=1.6, sigma=0.5, epsilon1_units="reward")
    assert cfg.resid_threshold() == pytest.approx(1.6)


def test_time_budget_warning_fires_exactly():
    base = dict(alpha1=10, beta1=10, alpha2=5, beta2=5)
    # budget = max(20, 20) = 20; warn iff the gap is <= 20
    cfg = small_config(changes=((100, 1), (120, 0)), **base)
    assert any("time budget" in w for w in cfg.validate())
    cfg = small_config(changes=((100, 1), (121, 0)), **base)
    assert cfg.validate() == []
    cfg = small_config(changes=((100, 1),), **base)  # single change: no gap
    assert cfg.validate() == []


def test_run_trial_deterministic():
    cfg = small_config()
    a = run_trial(cfg, "cooperative_kripke", 0)
    b = run_trial(cfg, "cooperative_kripke", 0)
    assert np.array_equal(a.cum_regret, b.cum_regret)
    assert np.array_equal(a.fraction_optimal, b.fraction_optimal)
    assert a.msgs_total == b.msgs_total


def test_trial_cumulative_arrays_are_prefix_sums():
    cfg = small_config()
    r = run_trial(cfg, "independent_ducb", 0)
    assert np.allclose(np.diff(r.cum_reward), r.total_reward[1:])
    assert np.allclose(np.diff(r.cum_regret), r.regret_step[1:])
    assert ((0.0 <= r.fraction_optimal) & (r.fraction_optimal <= 1.0)).all()


def test_noiseless_stationary_regret_flat():
    cfg = small_config(sigma=1e-9, changes=(), trials=1, ucb_sigma=-1.0)
    r = run_trial(cfg, "independent_ducb", 0)
    burn = 3 * cfg.n_arms
    assert r.cum_regret[-1] - r.cum_regret[burn] == pytest.approx(0.0, abs=1e-6)


def test_moving_average_matches_naive():
    rng = np.random.default_rng(0)
    x = rng.normal(size=60)
    sm = moving_average(x, 7)
    for t in range(60):
        lo = max(0, t - 6)
        assert sm[t] == pytest.approx(x[lo:t + 1].mean())
    assert np.array_equal(moving_average(x, 1), x)


def test_aggregate_curves_zero_ci_cases():
    cfg = small_config(sigma=1e-9, trials=1)
    results = [run_trial(cfg, "independent_ducb", 0)]
    for agg in aggregate_curves(cfg, results):
        assert np.allclose(agg.ci, 0.0)

    # identical trials also give zero CI
    r = results[0]
    for agg in aggregate_curves(small_config(trials=2), [r, r]):
        assert np.allclose(agg.ci, 0.0)


def test_aggregate_curves_ci_formula():
    cfg = small_config()
    results = [run_trial(cfg, "independent_ducb", k) for k in range(2)]
    aggs = {a.metric: a for a in aggregate_curves(cfg, results)}
    series = np.stack([moving_average(r.cum_regret, cfg.smoothing_window)
                       for r in results])
    expect = 1.96 * series.std(axis=0, ddof=1) / math.sqrt(2)
    assert np.allclose(aggs["cum_regret"].ci, expect)


def test_metrics_rows_censoring_conventions():
    cfg = small_config()
    r = run_trial(cfg, "independent_ducb", 0)
    row = metrics_rows(cfg, [r])[0]
    header = harness.METRICS_HEADER
    by = dict(zip(header, row))
    assert by["t_v"] == 400
    assert by["cens_det"] == 1 and by["t_det"] == cfg.horizon
    assert by["cens_rec_epi"] == 1
    assert by["dt_rec_epi"] == cfg.horizon - 400  # remaining horizon


def test_run_experiment_writes_csvs(tmp_path):
    cfg = small_config(modes=("independent_ducb", "lightcoop_kripke"))
    out = str(tmp_path / "out")
    run_experiment(cfg, out_dir=out)
    curves = (tmp_path / "out" / "curves.csv").read_text().splitlines()
    assert curves[0] == "step,mode,metric,mean,ci"
    # two modes x four metrics x horizon rows
    assert len(curves) == 1 + 2 * 4 * cfg.horizon
    metrics = (tmp_path / "out" / "metrics.csv").read_text().splitlines()
    assert metrics[0] == ",".join(harness.METRICS_HEADER)
    assert len(metrics) == 1 + 2 * cfg.trials


def test_run_experiment_reproducible_bytes(tmp_path):
    cfg = small_config(modes=("cooperative_kripke",))
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    run_experiment(cfg, out_dir=out1)
    run_experiment(cfg, threads=2, out_dir=out2)
    for name in ("curves.csv", "metrics.csv"):
        b1 = (tmp_path / "a" / name).read_bytes()
        b2 = (tmp_path / "b" / name).read_bytes()
        assert b1 == b2


def test_total_recovery_basic_and_censored():
    cfg = small_config(recovery_window=5, recovery_sustain=10)
    r = run_trial(cfg, "cooperative_kripke", 0)
    value, censored = total_recovery(r, cfg)
    assert not censored and 0 < value < cfg.horizon - 400

    # a mode that never recovers is censored at the remaining horizon
    flat = harness.TrialResult(
        mode="x", trial=0, t_v=200, horizon=400, n_agents=6,
        total_reward=np.zeros(400), cum_reward=np.zeros(400),
        cum_regret=np.zeros(400), regret_step=np.full(400, 6 * 0.5),
        fraction_optimal=np.zeros(400), reward_mean=np.zeros(400),
        metrics=None, msgs_total=0, msgs_flood=0, optimal_mean_post=1.0)
    value, censored = total_recovery(flat, cfg)
    assert censored and value == 200


def test_fraction_crossing_ignores_prechange_leak():
    fo = np.concatenate([np.ones(200), np.zeros(100), np.ones(100)])
    r = harness.TrialResult(
        mode="x", trial=0, t_v=200, horizon=400, n_agents=6,
        total_reward=np.zeros(400), cum_reward=np.zeros(400),
        cum_regret=np.zeros(400), regret_step=np.zeros(400),
        fraction_optimal=fo, reward_mean=np.zeros(400),
        metrics=None, msgs_total=0, msgs_flood=0, optimal_mean_post=1.0)
    cfg = small_config(smoothing_window=50)
    cross = fraction_optimal_crossing(r, cfg)
    assert cross > 300  # the pre-change plateau must not count


def test_sweep_writes_table(tmp_path):
    cfg = small_config(trials=1, modes=("independent_ducb",))
    rows = sweep(cfg, sizes=[6, 8], topologies=["ring"], out_dir=str(tmp_path),
                 modes=["independent_ducb", "cooperative_ducb"])
    assert len(rows) == 4
    text = (tmp_path / "table2.csv").read_text().splitlines()
    assert text[0] == ("n,topology,mode,recovery,recovery_censored,"
                       "reward_after,msgs_total,msgs_per_agent_step")
    assert len(text) == 5
    by = {(r[0], r[2]): r for r in rows}
    assert by[(6, "cooperative_ducb")][6] == 2 * 6 * cfg.horizon


def test_csv_float_formatting_stable(tmp_path):
    harness.write_csv(str(tmp_path / "x.csv"), ["a"],
                      [[1.0], [0.1234567890123], [float("inf")], [3]])
    text = (tmp_path / "x.csv").read_text()
    assert text == "a\n1\n0.123456789\ninf\n3\n"


PAPERISH = dict(n_agents=12, n_arms=16, horizon=2500, sigma=1.0,
                epsilon1=1.6, exceed_threshold=13, window_len=30,
                eta_epi=10.0, changes=((1400, 1),), change_rule="tiered",
                min_gap=0.24, min_drop=1.0, n0=85, ucb_sigma=0.35,
                gamma=0.998, kripke_gamma=1.0)


def test_prechange_regret_is_sublinear():
    """Average regret per step falls over the pre-change window for every
    learning mode."""
    cfg = ExperimentConfig(**PAPERISH, trials=3)
    for mode in ("independent_ducb", "cooperative_ducb", "lightcoop_kripke",
                 "cooperative_kripke"):
        curves = np.stack([run_trial(cfg, mode, k).cum_regret
                           for k in range(cfg.trials)]).mean(axis=0)
        rates = [curves[t] / t for t in (500, 900, 1399)]
        assert rates[0] > rates[1] > rates[2], (mode, rates)


def test_commit_correctness_rate():
    """At the headline settings the committed world matches the true
    post-change world in at least 90% of trials."""
    cfg = ExperimentConfig(**PAPERISH, trials=10)
    for mode in ("lightcoop_kripke", "cooperative_kripke"):
        good = 0
        for k in range(cfg.trials):
            r = run_trial(cfg, mode, k, keep_record=True)
            good += bool((r.record.believed[-1] == 1).all())
        assert good >= 9, (mode, good)


def test_independent_baseline_shows_postchange_dip():
    """The forgetting-only baseline's fraction-optimal drops right after
    the change point."""
    cfg = ExperimentConfig(**PAPERISH, trials=3)
    fo = np.stack([run_trial(cfg, "independent_ducb", k).fraction_optimal
                   for k in range(cfg.trials)]).mean(axis=0)
    assert fo[1400:1500].mean() < fo[1300:1400].mean()


def test_phi2_formula_string_in_config():
    """A formula string in the config replaces the default post-world
    identity condition for the mutual-knowledge timeline."""
    base = small_config(modes=("cooperative_kripke",))
    r_default = run_trial(base, "cooperative_kripke", 0)

    # the identity formula of the post-change world, written out as text,
    # must reproduce the default timeline metric exactly
    cat = harness._trial_catalog(base, 0)
    identity = " & ".join(f"p_{a}_1" for a in range(base.n_arms))
    cfg = small_config(modes=("cooperative_kripke",), phi2=identity)
    r_same = run_trial(cfg, "cooperative_kripke", 0)
    assert r_same.metrics.dt_rec_epi == r_default.metrics.dt_rec_epi

    # a tautology is mutually known from the start: recovery after one step
    cfg = small_config(modes=("cooperative_kripke",), phi2="top")
    r_top = run_trial(cfg, "cooperative_kripke", 0)
    assert r_top.metrics.dt_rec_epi == 1
