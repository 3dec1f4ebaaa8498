"""Pure-numpy reference implementations of the per-step batch kernels.

Semantically identical to the compiled versions in _core.pyx; floating
point results may differ from them at rounding level because accumulation
orders differ (dense BLAS here, explicit loops there).  Either backend is
deterministic run-to-run on the same machine.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def ucb_select_batch(counts, sums, t, sigma, active):
    """Chosen arm per agent: argmax of mean + sigma*sqrt(4 ln(t+1)/count);
    unpulled arms win outright, ties go to the lowest arm id.  Rows where
    active is 0 return -1."""
    with np.errstate(divide="ignore", invalid="ignore"):
        idx = sums / counts + sigma * np.sqrt(4.0 * np.log(t + 1.0) / counts)
    idx[counts <= 0] = np.inf
    arms = np.argmax(idx, axis=1).astype(np.int64)
    arms[active == 0] = -1
    return arms


def discounted_update_batch(counts, sums, arms, rewards, gamma):
    """In place: scale all stats by gamma, then credit each pulled arm.
    Rows with arm < 0 are scaled but not credited."""
    if gamma != 1.0:
        counts *= gamma
        sums *= gamma
    rows = np.flatnonzero(arms >= 0)
    np.add.at(counts, (rows, arms[rows]), 1.0)
    np.add.at(sums, (rows, arms[rows]), rewards[rows])


def window_update_batch(flags, wcounts, head, residuals, thresholds, active):
    """Ring-buffer exceedance update at column ``head`` for active rows.

    Inactive rows keep their buffers frozen.  Returns nothing; wcounts is
    maintained incrementally."""
    act = active != 0
    new = (residuals > thresholds) & act
    old = flags[:, head].astype(bool)
    upd = act
    wcounts[upd] += new[upd].astype(np.int64) - old[upd].astype(np.int64)
    flags[upd, head] = new[upd]


def ledger_update_batch(ledger, arms, rewards, means, sigma, active):
    """Pairwise Gaussian log-likelihood increments for active rows.

    ledger has shape (n, K, K); means (K, A).  Antisymmetry is exact: each
    unordered pair is computed once and mirrored."""
    rows = np.flatnonzero((active != 0) & (arms >= 0))
    if rows.size == 0:
        return
    inv = 1.0 / (2.0 * sigma * sigma)
    y = rewards[rows]
    a = arms[rows]
    k_count = means.shape[0]
    for k in range(k_count):
        dk = y - means[k, a]
        for l in range(k + 1, k_count):
            dl = y - means[l, a]
            inc = (dl * dl - dk * dk) * inv
            ledger[rows, k, l] += inc
            ledger[rows, l, k] -= inc


def maximin_batch(ledger):
    """Per agent: maximin hypothesis and score over the pairwise ledger.
    Scores are min over rivals; the winner is the first (lowest id) argmax."""
    n, k, _ = ledger.shape
    masked = ledger.copy()
    ii = np.arange(k)
    masked[:, ii, ii] = np.inf
    scores = masked.min(axis=2)
    best = np.argmax(scores, axis=1).astype(np.int64)
    return best, scores[np.arange(n), best]


def mix_batch(weights, x):
    """One consensus round, x' = W x, applied to a stacked (n, m) block."""
    return weights @ x
