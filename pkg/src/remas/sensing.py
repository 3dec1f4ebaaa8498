"""Change sensing: prediction residuals, sliding-window exceedance counting,
pairwise log-likelihood evidence, maximin hypothesis selection and stopping,
and resolution among competing broadcasts.

A detector keeps the last L boolean exceedance flags (residual above the
threshold) in a ring buffer and declares a contradiction the first time the
count reaches the exceedance threshold.  After detection an evidence ledger
accumulates pairwise Gaussian log-likelihood ratios between candidate
worlds; the running best hypothesis is the maximin row of the ledger and
evidence gathering stops once its score clears the stopping margin.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field


class SensingError(Exception):
    pass


def residual(observed: float, predicted: float) -> float:
    """Scalar prediction residual: absolute difference."""
    return abs(observed - predicted)


class ResidualWindow:
    """Sliding count of residual-threshold exceedances over the last L steps.

    ``threshold`` is an absolute residual bound in observation units; config
    layers that express the bound as a multiple of the noise scale convert
    before constructing the window.
    """

    def __init__(self, threshold: float, length: int, exceed_threshold: int):
        if length < 1:
            raise SensingError("window length must be >= 1")
        if not 1 <= exceed_threshold <= length:
            raise SensingError("exceedance threshold must lie in [1, L]")
        self.threshold = threshold
        self.length = length
        self.exceed_threshold = exceed_threshold
        self._flags = deque(maxlen=length)
        self._count = 0

    def update(self, residual_value: float) -> int:
        """Push one flag, evict the oldest beyond L, return the count."""
        flag = residual_value > self.threshold
        if len(self._flags) == self.length:
            self._count -= self._flags[0]
        self._flags.append(flag)
        self._count += flag
        return self._count

    @property
    def count(self) -> int:
        return self._count

    def detect(self) -> bool:
        return self._count >= self.exceed_threshold

    def reset(self) -> None:
        self._flags.clear()
        self._count = 0


def gaussian_llr(y: float, mu_k: float, mu_l: float, sigma: float) -> float:
    """Log density ratio of hypothesis k over l for one Gaussian observation."""
    if sigma <= 0:
        raise SensingError("sigma must be positive")
    return ((y - mu_l) ** 2 - (y - mu_k) ** 2) / (2.0 * sigma * sigma)


@dataclass
class EvidenceLedger:
    """Cumulative pairwise evidence over a hypothesis set of world ids.

    lam[k][l] accumulates log-likelihood evidence for hypothesis k against
    l; the matrix stays antisymmetric with a zero diagonal by construction.
    """

    hypotheses: tuple
    eta: float
    t_det: int = 0
    lam: dict = field(default_factory=dict)

    def __post_init__(self):
        self.hypotheses = tuple(self.hypotheses)
        if len(self.hypotheses) < 2:
            raise SensingError("need at least two hypotheses")
        if not self.lam:
            self.lam = {k: {l: 0.0 for l in self.hypotheses if l != k}
                        for k in self.hypotheses}

    def update(self, arm: int, reward: float, means, sigma: float) -> None:
        """Add the pairwise increments for one observed pull.

        ``means[h][arm]`` is the reward mean of the pulled arm under
        hypothesis h.  Antisymmetry is exact: each pair is computed once
        and mirrored with its negation.
        """
        hs = self.hypotheses
        for i, k in enumerate(hs):
            for l in hs[i + 1:]:
                inc = gaussian_llr(reward, means[k][arm], means[l][arm], sigma)
                self.lam[k][l] += inc
                self.lam[l][k] -= inc

    def maximin_scores(self) -> dict:
        return {k: min(self.lam[k].values()) for k in self.hypotheses}

    def best_hypothesis(self) -> tuple[int, float]:
        """Argmax of the maximin scores; ties break to the lowest world id."""
        scores = self.maximin_scores()
        best = min(self.hypotheses, key=lambda k: (-scores[k], k))
        return best, scores[best]

    def should_stop(self) -> bool:
        _, score = self.best_hypothesis()
        return score >= self.eta


@dataclass(frozen=True)
class BroadcastMsg:
    """Commit announcement: sender id, stop time, chosen hypothesis, score,
    remaining hop budget."""

    sender: int
    tau: int
    hypothesis: int
    score: float
    ttl: int

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise SensingError("broadcast score must be finite")


def resolve_conflicts(broadcasts) -> BroadcastMsg:
    """Winner among received broadcasts: highest evidence score, ties to the
    lowest sender id, then the lowest hypothesis id."""
    msgs = list(broadcasts)
    if not msgs:
        raise SensingError("no broadcasts to resolve")
    return min(msgs, key=lambda m: (-m.score, m.sender, m.hypothesis))
