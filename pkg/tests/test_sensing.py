"""Residual windows, Gaussian evidence ledgers, stopping, and broadcast
conflict resolution, with Monte-Carlo checks of the detection operating
point."""

import math

import numpy as np
import pytest

from remas.sensing import (BroadcastMsg, EvidenceLedger, ResidualWindow,
                           SensingError, gaussian_llr, residual,
                           resolve_conflicts)


def test_residual_basic():
    assert residual(0.7, 0.7) == 0
    assert residual(1.5, 0.3) == pytest.approx(1.2)
    assert residual(0.3, 1.5) == pytest.approx(1.2)


def test_residual_half_normal_under_correct_hypothesis():
    """With a correct predictor the residual is |N(0, sigma^2)|; its mean
    is sigma * sqrt(2/pi)."""
    rng = np.random.default_rng(0)
    sigma = 0.7
    draws = np.abs(rng.normal(0.0, sigma, 200_000))
    expect = sigma * math.sqrt(2 / math.pi)
    assert abs(draws.mean() - expect) < 4 * sigma / math.sqrt(200_000)


def test_window_counts_all_below_and_all_above():
    w = ResidualWindow(threshold=1.4, length=30, exceed_threshold=12)
    for _ in range(30):
        w.update(0.5)
    assert w.count == 0 and not w.detect()
    for _ in range(30):
        w.update(2.0)
    assert w.count == 30 and w.detect()


def test_window_partial_pattern_and_eviction():
    w = ResidualWindow(threshold=1.4, length=30, exceed_threshold=12)
    values = [2.0] * 12 + [0.1] * 18
    for v in values:
        w.update(v)
    assert w.count == 12
    assert w.detect()  # count == threshold fires
    for _ in range(12):
        w.update(0.1)  # evict the twelve exceedances
    assert w.count == 0 and not w.detect()


def test_window_first_crossing_index():
    w = ResidualWindow(threshold=1.0, length=5, exceed_threshold=3)
    script = [2, 0, 2, 0, 2, 0]  # crossings at indices 0,2,4 -> fires at 4
    fired_at = None
    for i, v in enumerate(script):
        w.update(v)
        if fired_at is None and w.detect():
            fired_at = i
    assert fired_at == 4


def test_window_validation():
    with pytest.raises(SensingError):
        ResidualWindow(1.0, 0, 1)
    with pytest.raises(SensingError):
        ResidualWindow(1.0, 10, 11)
    with pytest.raises(SensingError):
        ResidualWindow(1.0, 10, 0)


def test_window_reset():
    w = ResidualWindow(1.0, 10, 2)
    w.update(5.0)
    w.update(5.0)
    assert w.detect()
    w.reset()
    assert w.count == 0 and not w.detect()


# -- log-likelihood evidence --------------------------------------------------


def test_llr_zero_for_equal_means():
    for y in (-3.0, 0.0, 2.5):
        assert gaussian_llr(y, 0.8, 0.8, 1.0) == 0.0


def test_llr_at_hypothesis_mean():
    mu_k, mu_l, sigma = 0.9, 0.4, 0.7
    val = gaussian_llr(mu_k, mu_k, mu_l, sigma)
    assert val == pytest.approx((mu_k - mu_l) ** 2 / (2 * sigma ** 2))
    assert val > 0


def test_llr_value_against_direct_densities():
    """Cross-check the closed form against two Gaussian log densities."""
    y, mu_k, mu_l, sigma = 1.0, 1.0, 0.5, 1.0
    assert gaussian_llr(y, mu_k, mu_l, sigma) == pytest.approx(0.125)

    def logpdf(x, mu, s):
        return -0.5 * math.log(2 * math.pi * s * s) - (x - mu) ** 2 / (2 * s * s)

    direct = logpdf(y, mu_k, sigma) - logpdf(y, mu_l, sigma)
    assert gaussian_llr(y, mu_k, mu_l, sigma) == pytest.approx(direct)


def test_llr_requires_positive_sigma():
    with pytest.raises(SensingError):
        gaussian_llr(0.0, 0.0, 1.0, 0.0)


def ledger_for(means):
    return EvidenceLedger(tuple(range(len(means))), eta=10.0), means


def test_ledger_unchanged_for_identical_means():
    ledger, means = ledger_for([[0.5, 0.5], [0.5, 0.5]])
    ledger.update(0, 1.7, means, 1.0)
    assert all(v == 0.0 for row in ledger.lam.values() for v in row.values())


def test_ledger_antisymmetry_after_random_updates():
    rng = np.random.default_rng(3)
    means = rng.uniform(0.1, 1.2, (4, 6)).tolist()
    ledger = EvidenceLedger(tuple(range(4)), eta=5.0)
    for _ in range(300):
        ledger.update(int(rng.integers(6)), float(rng.normal(0.6, 1.0)),
                      means, 1.0)
    for k in range(4):
        for l in range(4):
            if k != l:
                assert ledger.lam[k][l] == -ledger.lam[l][k]


def test_maximin_worked_example():
    """Three hypotheses with lam[1][2]=4, lam[1][3]=2, lam[2][3]=1 under
    antisymmetric fill: maximin picks hypothesis 1 with score 2."""
    ledger = EvidenceLedger((1, 2, 3), eta=10.0)
    ledger.lam[1][2] = 4.0
    ledger.lam[2][1] = -4.0
    ledger.lam[1][3] = 2.0
    ledger.lam[3][1] = -2.0
    ledger.lam[2][3] = 1.0
    ledger.lam[3][2] = -1.0
    best, score = ledger.best_hypothesis()
    assert (best, score) == (1, 2.0)


def test_maximin_tie_break_lowest_id():
    ledger = EvidenceLedger((0, 1, 2), eta=1.0)
    best, score = ledger.best_hypothesis()
    assert best == 0 and score == 0.0


def test_evidence_accumulates_toward_truth():
    """Sampling from the true world grows its maximin score about linearly
    with the per-step KL gap as slope."""
    rng = np.random.default_rng(12)
    means = [[1.0, 0.2], [0.4, 0.8]]
    sigma = 1.0
    true = 0
    ledger = EvidenceLedger((0, 1), eta=1e9)
    scores = []
    for t in range(200):
        arm = t % 2
        y = means[true][arm] + sigma * rng.standard_normal()
        ledger.update(arm, y, means, sigma)
        scores.append(ledger.best_hypothesis())
    best, score = scores[-1]
    assert best == true
    kl_per_step = np.mean([(means[0][a] - means[1][a]) ** 2 / (2 * sigma ** 2)
                           for a in (0, 1)])
    assert score == pytest.approx(200 * kl_per_step, rel=0.5)


def test_should_stop_threshold_and_monotonicity():
    ledger = EvidenceLedger((0, 1), eta=13.0)
    ledger.lam[0][1] = 12.9
    ledger.lam[1][0] = -12.9
    assert not ledger.should_stop()
    ledger.eta = 0.0
    assert ledger.should_stop()

    # firing at eta implies firing at any smaller eta at the same or
    # earlier step of an increasing evidence stream
    rng = np.random.default_rng(5)
    means = [[1.0], [0.2]]
    stops = {}
    for eta in (10.0, 5.0):
        rng = np.random.default_rng(5)
        ledger = EvidenceLedger((0, 1), eta=eta)
        stop_at = None
        for t in range(600):
            y = means[0][0] + rng.standard_normal()
            ledger.update(0, y, means, 1.0)
            if stop_at is None and ledger.should_stop():
                stop_at = t
        stops[eta] = stop_at
    assert stops[5.0] is not None and stops[10.0] is not None
    assert stops[5.0] <= stops[10.0]


def test_ledger_needs_two_hypotheses():
    with pytest.raises(SensingError):
        EvidenceLedger((0,), eta=1.0)


# -- broadcasts ---------------------------------------------------------------


def test_resolve_single_broadcast():
    msg = BroadcastMsg(3, 100, 2, 11.0, 5)
    assert resolve_conflicts([msg]) is msg


def test_resolve_picks_highest_score():
    a = BroadcastMsg(3, 100, 2, 11.0, 5)
    b = BroadcastMsg(7, 101, 5, 14.0, 5)
    assert resolve_conflicts([a, b]) is b


def test_resolve_tie_breaks():
    a = BroadcastMsg(9, 100, 4, 11.0, 5)
    b = BroadcastMsg(2, 101, 6, 11.0, 5)
    assert resolve_conflicts([a, b]) is b  # lower sender id
    c = BroadcastMsg(2, 99, 1, 11.0, 5)
    assert resolve_conflicts([b, c]) is c  # then lower hypothesis id


def test_broadcast_requires_finite_score():
    with pytest.raises(SensingError):
        BroadcastMsg(1, 0, 0, math.inf, 3)


def test_resolve_empty_is_error():
    with pytest.raises(SensingError):
        resolve_conflicts([])


# -- detection operating point ------------------------------------------------


def simulate_detection(rng, shift, sigma, eps1, length, e_th, pre_steps=60):
    """First post-change detection index (or None) for one run; the
    threshold is the configured multiple of the noise scale."""
    thr = eps1 * sigma
    w = ResidualWindow(thr, length, e_th)
    for _ in range(pre_steps):
        w.update(abs(rng.normal(0.0, sigma)))
    for t in range(length):
        w.update(abs(rng.normal(shift, sigma)))
        if w.detect():
            return t
    return None


def test_detection_delay_within_window():
    """At the moderate-noise settings, a pulled-arm mean shift of at least
    0.7 is detected within one window length in at least 95% of runs."""
    rng = np.random.default_rng(2024)
    runs = 500
    hits = 0
    for _ in range(runs):
        shift = rng.uniform(0.7, 1.1)
        if simulate_detection(rng, shift, 0.5, 1.4, 30, 12) is not None:
            hits += 1
    assert hits / runs >= 0.95


def test_false_alarm_rate_per_window():
    """Under the correct hypothesis the per-window false-detection rate
    stays below 1% at the moderate-noise settings."""
    rng = np.random.default_rng(77)
    runs = 20_000
    thr = 1.4 * 0.5
    flags = np.abs(rng.normal(0.0, 0.5, (runs, 30))) > thr
    rate = (flags.sum(axis=1) >= 12).mean()
    assert rate <= 0.01
