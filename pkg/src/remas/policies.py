"""Arm-selection policies: Gaussian UCB with optional geometric forgetting,
consensus globalisation of sufficient statistics, the evidence-phase arm
rule, commit reinitialisation, and explicit best-policy identification with
confidence radii.

The UCB index is mean + sigma * sqrt(4 ln(t+1) / count); unpulled arms get
an infinite index so every arm is tried once.  The exploration constant is
a documented stand-in for the textbook Gaussian-UCB tuning and lives only
here, so recalibration is a one-line change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class PolicyError(Exception):
    pass


MODES = ("independent_ducb", "cooperative_ducb", "lightcoop_kripke",
         "lightcoop_kripke_fast", "cooperative_kripke")

KRIPKE_MODES = ("lightcoop_kripke", "lightcoop_kripke_fast", "cooperative_kripke")
CONSENSUS_MODES = ("cooperative_ducb", "cooperative_kripke")


@dataclass
class UcbStats:
    """Per-arm pull counts and reward sums, optionally discounted."""

    counts: np.ndarray
    sums: np.ndarray
    gamma: float = 1.0

    @classmethod
    def fresh(cls, n_arms: int, gamma: float = 1.0) -> "UcbStats":
        if not 0.0 < gamma <= 1.0:
            raise PolicyError("gamma must be in (0, 1]")
        return cls(np.zeros(n_arms), np.zeros(n_arms), gamma)

    @classmethod
    def virtual(cls, means: np.ndarray, n0: int, gamma: float = 1.0) -> "UcbStats":
        """Stats equivalent to n0 virtual pulls per arm at the given means."""
        means = np.asarray(means, dtype=np.float64)
        return cls(np.full(means.shape, float(n0)), n0 * means.copy(), gamma)

    def mean(self, arm: int) -> float:
        if self.counts[arm] <= 0:
            raise PolicyError("empirical mean undefined for unpulled arm")
        return float(self.sums[arm] / self.counts[arm])


def ucb_index(stats: UcbStats, arm: int, t: int, sigma: float) -> float:
    """Index value of one arm at step t; infinite when the arm is unpulled."""
    c = stats.counts[arm]
    if c <= 0:
        return math.inf
    bonus = sigma * math.sqrt(4.0 * math.log(t + 1.0) / c)
    return float(stats.sums[arm] / c) + bonus


def ucb_select(stats: UcbStats, t: int, sigma: float) -> int:
    """Argmax of the indices; ties break to the lowest arm id."""
    best_arm = 0
    best_val = -math.inf
    for arm in range(len(stats.counts)):
        v = ucb_index(stats, arm, t, sigma)
        if v > best_val:
            best_val, best_arm = v, arm
    return best_arm


def discounted_update(stats: UcbStats, arm: int, reward: float) -> UcbStats:
    """Scale all arms by gamma, then credit the pulled arm."""
    counts = stats.counts * stats.gamma
    sums = stats.sums * stats.gamma
    counts[arm] += 1.0
    sums[arm] += reward
    return UcbStats(counts, sums, stats.gamma)


def cooperative_mix(all_counts: np.ndarray, all_sums: np.ndarray,
                    weights, n_agents: int):
    """One consensus round over every agent's counts and sums.

    Returns (mixed_counts, mixed_sums, global_counts, global_sums): the
    mixed arrays feed the next round, the n-scaled copies are the
    globalised decision statistics approximating network totals.
    """
    w = weights.matrix
    mixed_counts = w @ all_counts
    mixed_sums = w @ all_sums
    return mixed_counts, mixed_sums, n_agents * mixed_counts, n_agents * mixed_sums


class AgentMode(Enum):
    NORMAL = "normal"
    EVIDENCE = "evidence"
    COMMITTED = "committed"


def round_robin_arm(t: int, n_arms: int) -> int:
    """Evidence-phase arm rule: cycle through all arms by absolute step."""
    return t % n_arms


def discriminative_arm(catalog_means: np.ndarray, k1: int, k2: int) -> int:
    """Alternative evidence rule: the arm separating the two leading
    hypotheses the most (largest absolute mean gap, ties to lowest id)."""
    gap = np.abs(catalog_means[k1] - catalog_means[k2])
    return int(np.argmax(gap))


def commit_stats(catalog_means: np.ndarray, world: int, n0: int,
                 gamma: float = 1.0) -> UcbStats:
    """Reinitialised learner after committing to a world: n0 virtual pulls
    per arm at that world's means, so its optimal arm leads immediately."""
    if not 0 <= world < catalog_means.shape[0]:
        raise PolicyError(f"unknown world {world}")
    return UcbStats.virtual(catalog_means[world], n0, gamma)


# ---------------------------------------------------------------------------
# Best-policy identification (explicit confidence-interval route)


@dataclass
class ActionIdentifier:
    """Empirical means with confidence radii over a finite candidate set.

    Radii use zeta = sigma * sqrt(2 ln(2 |Pi| / eta_act) / samples) and
    shrink as rollouts accumulate.  In reward orientation the identifier
    stops when one candidate's pessimistic value beats every rival's
    optimistic value; cost orientation flips the inequality.
    """

    n_candidates: int
    sigma: float
    eta_act: float
    higher_is_better: bool = True
    counts: np.ndarray = field(default=None)
    sums: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.n_candidates < 2:
            raise PolicyError("need at least two candidate policies")
        if not 0.0 < self.eta_act < 1.0:
            raise PolicyError("eta_act must be in (0, 1)")
        if self.counts is None:
            self.counts = np.zeros(self.n_candidates)
            self.sums = np.zeros(self.n_candidates)

    def record(self, candidate: int, value: float) -> None:
        self.counts[candidate] += 1.0
        self.sums[candidate] += value

    def radius(self, candidate: int) -> float:
        c = self.counts[candidate]
        if c <= 0:
            return math.inf
        return self.sigma * math.sqrt(
            2.0 * math.log(2.0 * self.n_candidates / self.eta_act) / c)

    def next_candidate(self) -> int:
        """Explore the most promising uncertain candidate: highest optimistic
        value in reward orientation, lowest pessimistic cost otherwise."""
        scores = []
        for i in range(self.n_candidates):
            if self.counts[i] <= 0:
                return i
            m = self.sums[i] / self.counts[i]
            r = self.radius(i)
            scores.append(m + r if self.higher_is_better else -(m - r))
        return int(np.argmax(scores))

    def decide(self) -> tuple[bool, int]:
        """(stop, best candidate): stop once the leader is statistically
        separated from every other candidate."""
        if np.any(self.counts <= 0):
            leader = int(np.argmin(self.counts))
            return False, leader
        means = self.sums / self.counts
        radii = np.array([self.radius(i) for i in range(self.n_candidates)])
        if self.higher_is_better:
            leader = int(np.argmax(means))
            lo = means[leader] - radii[leader]
            rival_hi = max(means[i] + radii[i]
                           for i in range(self.n_candidates) if i != leader)
            return lo > rival_hi, leader
        leader = int(np.argmin(means))
        hi = means[leader] + radii[leader]
        rival_lo = min(means[i] - radii[i]
                       for i in range(self.n_candidates) if i != leader)
        return hi < rival_lo, leader


def identify_best_policy(identifier: ActionIdentifier, rollouts) -> tuple[bool, int]:
    """Feed (candidate, value) rollout results, then return the stop
    decision and the chosen policy."""
    for candidate, value in rollouts:
        identifier.record(candidate, value)
    return identifier.decide()
