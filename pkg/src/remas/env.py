"""Piecewise-stationary Gaussian bandit environment.

A world catalog holds one mean-reward vector per candidate world; the
disturbance schedule switches the active world at change points.  The
catalog also induces the epistemic vocabulary: per-arm mean atoms p_{a,h},
optimal-arm atoms b_a, world-identity formulas (conjunction of a world's
p-atoms) and their actionable consequences (disjunction of its optimal
b-atoms), plus the matching Kripke valuation.

Change rules control how consecutive worlds relate.  ``fresh`` redraws the
whole mean vector until the optimal arm moves; ``permutation`` shuffles the
previous vector; ``degrade_best`` keeps all arms except the previously
optimal one, whose mean is redrawn low enough that the pulled-arm residual
jumps at the change point; ``degrade_promote`` additionally raises the
previously worst arm into a new clear optimum.

``tiered`` builds worlds with an explicit interference geometry: one
dominant arm sits min_drop-ish above a clear runner-up, which in turn sits
above a low field of background arms; the stressor knocks the dominant arm
to just below the runner-up.  The geometry keeps the change detectable on
the exploited arm (drop at least min_drop), the new optimum separated by
at least min_gap in every world, and the stale-statistics penalty of
forgetting-based baselines maximal.  This is the regime used for the
headline experiments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import logic

MEAN_LOW = 0.1
MEAN_HIGH = 1.2

CHANGE_RULES = ("fresh", "permutation", "degrade_best", "degrade_promote",
                "tiered")


class EnvError(Exception):
    pass


@dataclass
class WorldCatalog:
    """H candidate worlds over A arms; means[h, a] in [low, high]."""

    means: np.ndarray
    low: float = MEAN_LOW
    high: float = MEAN_HIGH

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        if self.means.ndim != 2:
            raise EnvError("means must be an H x A matrix")
        if np.any(self.means < self.low) or np.any(self.means > self.high):
            raise EnvError(f"means must lie in [{self.low}, {self.high}]")
        for h in range(self.n_worlds):
            for h2 in range(h + 1, self.n_worlds):
                if np.array_equal(self.means[h], self.means[h2]):
                    raise EnvError(f"worlds {h} and {h2} have identical means")

    @property
    def n_worlds(self) -> int:
        return self.means.shape[0]

    @property
    def n_arms(self) -> int:
        return self.means.shape[1]

    def optimal_arms(self, h: int) -> set[int]:
        row = self.means[h]
        return set(np.flatnonzero(row == row.max()).tolist())

    def optimal_mean(self, h: int) -> float:
        return float(self.means[h].max())


def true_optimal_arms(catalog: WorldCatalog, h: int) -> set[int]:
    """Argmax of world h's mean row, ties included."""
    return catalog.optimal_arms(h)


def make_catalog(seed, n_arms: int, n_worlds: int,
                 change_rule: str = "fresh",
                 min_gap: float = 0.0,
                 min_drop: float = 0.0,
                 low: float = MEAN_LOW,
                 high: float = MEAN_HIGH) -> WorldCatalog:
    """Draw a catalog; deterministic under the seed.

    World 0 is uniform over [low, high]; each later world is produced from
    its predecessor by the change rule and redrawn until its optimal arm
    differs from the predecessor's.  ``min_gap`` additionally enforces a
    margin between every world's best and second-best mean (keeps the
    optimal arm statistically identifiable), and ``min_drop`` a minimum
    fall of the previously optimal arm's mean across a change (keeps the
    change detectable on the arm agents are actually pulling).
    """
    if n_arms < 2 or n_worlds < 2:
        raise EnvError("need at least two arms and two worlds")
    if change_rule not in CHANGE_RULES:
        raise EnvError(f"unknown change rule {change_rule!r}")
    if min_drop > 0 and change_rule == "permutation":
        raise EnvError("min_drop is not meaningful for permutation changes")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    if change_rule == "tiered":
        return _tiered_catalog(rng, n_arms, n_worlds, min_gap, min_drop, low, high)
    worlds = [_draw_base_world(rng, n_arms, low, high, min_gap, min_drop, change_rule)]
    for _ in range(1, n_worlds):
        worlds.append(_draw_next_world(rng, worlds[-1], change_rule,
                                       min_gap, min_drop, low, high))
    return WorldCatalog(np.stack(worlds), low=low, high=high)


def _tiered_catalog(rng, n_arms, n_worlds, min_gap, min_drop, low, high):
    """Dominant arm / runner-up / low-field geometry; each change drops the
    current dominant arm to just below the runner-up, which then becomes
    the new dominant arm of the next tier pair."""
    if n_arms < 3:
        raise EnvError("tiered catalogs need at least three arms")
    if min_gap <= 0 or min_drop <= 0:
        raise EnvError("tiered catalogs need positive min_gap and min_drop")
    drop_below = rng.uniform(min_gap + 0.06, min_gap + 0.10)       # runner - new value
    gap12 = rng.uniform(min_drop - drop_below, min_drop - drop_below + 0.04)
    if gap12 <= min_gap:
        raise EnvError("tiered geometry needs min_drop well above min_gap")
    mu2_lo = max(low + drop_below + 0.02, high - gap12 - 0.16)
    mu2_hi = high - gap12 - 0.02
    if mu2_hi <= mu2_lo:
        raise EnvError("tiered geometry does not fit the mean range")
    mu2 = rng.uniform(mu2_lo, mu2_hi)
    field_hi = mu2 - min_gap - 0.02
    if field_hi <= low:
        raise EnvError("no room for the background field")
    field = rng.uniform(low, field_hi, n_arms - 2)
    dominant, runner = 0, 1
    base = np.empty(n_arms)
    base[dominant] = mu2 + gap12
    base[runner] = mu2
    base[2:] = field
    worlds = [base]
    for _ in range(1, n_worlds):
        prev = worlds[-1]
        best = int(np.argmax(prev))
        second_val = np.partition(prev, -2)[-2]
        row = prev.copy()
        row[best] = second_val - drop_below
        if row[best] < low:
            raise EnvError("tiered drop falls below the mean range")
        worlds.append(row)
    return WorldCatalog(np.stack(worlds), low=low, high=high)


def _top3(row: np.ndarray):
    order = np.argsort(row)[::-1]
    return row[order[0]], row[order[1]], row[order[2]] if len(order) > 2 else -np.inf


def _draw_base_world(rng, n_arms, low, high, min_gap, min_drop, change_rule):
    for _ in range(2_000_000):
        row = rng.uniform(low, high, n_arms)
        best, second, third = _top3(row)
        if best - second < min_gap:
            continue
        if change_rule == "degrade_best":
            # The successor's optimum will be this world's runner-up, so its
            # own margin must already exist, and the drop must fit the range.
            if second - third < min_gap or best - min_drop < low:
                continue
        if change_rule == "degrade_promote":
            if best - min_drop < low or second + min_gap > high:
                continue
        if min_drop > 0 and change_rule == "fresh" and best - min_drop < low:
            continue
        return row
    raise EnvError("could not draw a base world satisfying the constraints")


def _draw_next_world(rng, prev, change_rule, min_gap, min_drop, low, high):
    prev_best_arm = int(np.argmax(prev))
    prev_best = prev[prev_best_arm]
    if change_rule == "degrade_best":
        second = np.partition(prev, -2)[-2]
        hi = min(prev_best - min_drop, second - max(min_gap, 1e-9))
        if hi < low:
            raise EnvError("degrade_best infeasible for this base world")
        row = prev.copy()
        row[prev_best_arm] = rng.uniform(low, hi)
        return row
    if change_rule == "degrade_promote":
        second = np.partition(prev, -2)[-2]
        worst_arm = int(np.argmin(prev))
        drop_hi = min(prev_best - min_drop, second - 1e-9)
        promote_lo = second + min_gap
        if drop_hi < low or promote_lo > high:
            raise EnvError("degrade_promote infeasible for this base world")
        row = prev.copy()
        row[prev_best_arm] = rng.uniform(low, drop_hi)
        row[worst_arm] = rng.uniform(promote_lo, high)
        return row
    for _ in range(2_000_000):
        if change_rule == "fresh":
            row = rng.uniform(low, high, len(prev))
        else:  # permutation
            row = prev[rng.permutation(len(prev))]
        best, second, _ = _top3(row)
        if int(np.argmax(row)) == prev_best_arm:
            continue
        if best - second < min_gap:
            continue
        if min_drop > 0 and prev_best - row[prev_best_arm] < min_drop:
            continue
        return row
    raise EnvError("could not draw a successor world satisfying the constraints")


@dataclass(frozen=True)
class Schedule:
    """Change points (step, world index); the regime at t is the last change
    at or before t.  Consecutive change times must respect the declared
    minimum gap."""

    initial_world: int = 0
    changes: tuple = ()
    min_gap: int = 0

    def __post_init__(self):
        times = [t for t, _ in self.changes]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise EnvError("change times must be strictly increasing")
        if self.min_gap and any(t2 - t1 < self.min_gap for t1, t2 in zip(times, times[1:])):
            raise EnvError(f"changes closer than the declared gap {self.min_gap}")

    def world_at(self, t: int) -> int:
        w = self.initial_world
        for tc, h in self.changes:
            if tc <= t:
                w = h
            else:
                break
        return w

    def world_per_step(self, horizon: int) -> np.ndarray:
        out = np.full(horizon, self.initial_world, dtype=np.int64)
        for tc, h in self.changes:
            if tc < horizon:
                out[tc:] = h
        return out

    def delta(self) -> float:
        times = [t for t, _ in self.changes]
        if len(times) < 2:
            return float("inf")
        return min(t2 - t1 for t1, t2 in zip(times, times[1:]))


class RewardSampler:
    """Seeded Gaussian reward stream with one independent substream per agent."""

    def __init__(self, sigma: float, seed, n_agents: int = 1):
        if sigma <= 0:
            raise EnvError("sigma must be positive")
        self.sigma = sigma
        seq = np.random.SeedSequence(entropy=seed)
        self._rngs = [np.random.default_rng(s) for s in seq.spawn(n_agents)]

    def draw(self, catalog: WorldCatalog, world: int, arm: int, agent: int = 0) -> float:
        mu = float(catalog.means[world, arm])
        return mu + self.sigma * float(self._rngs[agent].standard_normal())

    def noise_matrix(self, horizon: int, n_agents: int) -> np.ndarray:
        """Standard-normal noise, one column per agent, pull-independent.

        Rewards are mu[world, arm] + sigma * z[t, agent], so different
        policies see the same noise realisation regardless of which arms
        they pull; this pairs algorithm variants trial by trial.
        """
        cols = [self._rngs[i].standard_normal(horizon) for i in range(n_agents)]
        return np.column_stack(cols)


def atom_p(arm: int, world: int) -> str:
    return f"p_{arm}_{world}"


def atom_b(arm: int) -> str:
    return f"b_{arm}"


@dataclass(frozen=True)
class CatalogVocabulary:
    atoms: frozenset
    phi: tuple  # world-identity formula per world
    psi: tuple  # actionable consequence per world
    valuation: dict  # world id -> frozenset of atoms


def build_atoms_and_formulas(catalog: WorldCatalog) -> CatalogVocabulary:
    """Atoms, world-identity and consequence formulas, and the valuation.

    p_{a,h} holds exactly in world h (one p-atom per arm per world), b_a
    holds in world h iff arm a is optimal there.  phi_h conjoins world h's
    p-atoms; psi_h disjoins its optimal b-atoms.
    """
    atoms = set()
    valuation = {}
    phi = []
    psi = []
    for h in range(catalog.n_worlds):
        world_atoms = {atom_p(a, h) for a in range(catalog.n_arms)}
        opt = sorted(catalog.optimal_arms(h))
        world_atoms |= {atom_b(a) for a in opt}
        valuation[h] = frozenset(world_atoms)
        atoms |= world_atoms

        conj: logic.Formula = logic.Atom(atom_p(0, h))
        for a in range(1, catalog.n_arms):
            conj = logic.And(conj, logic.Atom(atom_p(a, h)))
        phi.append(conj)

        disj: logic.Formula = logic.Atom(atom_b(opt[0]))
        for a in opt[1:]:
            disj = logic.Or(disj, logic.Atom(atom_b(a)))
        psi.append(disj)
    atoms |= {atom_b(a) for a in range(catalog.n_arms)}
    return CatalogVocabulary(frozenset(atoms), tuple(phi), tuple(psi), valuation)
