"""Resilience specifications, the four recovery/durability metrics, and the
finite-horizon monitor.

The epistemic specification is (!E_N phi2) U[0,a1] (G[0,b1) E_N phi2) and the
action specification is (!pi_opt) U[0,a2] (G[0,b2) pi_opt), both evaluated at
the violation time.  A violation of the conjunction is always witnessed
within B = max(a1+b1, a2+b2) steps, so the monitor only ever inspects the
window [t_v, t_v+B) and reports Censored when the trace ends earlier.

Metrics follow the inequality directions of the definitions exactly:
epistemic recovery scans t > t_v, epistemic durability t > t_rec_epi,
action recovery t >= t_rec_epi, action durability t >= t_rec_act.
Empty scan sets yield the INFINITE sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import logic

INFINITE = math.inf


class ResilienceError(Exception):
    pass


@dataclass(frozen=True)
class ResilienceSpec:
    alpha1: int
    beta1: int
    alpha2: int
    beta2: int
    phi2: logic.Formula | None = None
    agents: frozenset = frozenset()
    opt_atom: str = "pi_opt"

    def __post_init__(self):
        for name in ("alpha1", "beta1", "alpha2", "beta2"):
            if getattr(self, name) <= 0:
                raise ResilienceError(f"{name} must be a positive step count")

    def epistemic_formula(self) -> logic.Formula:
        if self.phi2 is None or not self.agents:
            raise ResilienceError("spec lacks phi2 or an agent set")
        goal = logic.Mutual(self.agents, self.phi2)
        return logic.Until(self.alpha1, logic.Not(goal), logic.Globally(self.beta1, goal))

    def action_formula(self) -> logic.Formula:
        goal = logic.Atom(self.opt_atom)
        return logic.Until(self.alpha2, logic.Not(goal), logic.Globally(self.beta2, goal))


def bound_b(spec: ResilienceSpec) -> int:
    """Steps after t_v that suffice to witness any violation."""
    return max(spec.alpha1 + spec.beta1, spec.alpha2 + spec.beta2)


def time_budget_ok(spec: ResilienceSpec, delta: float) -> bool:
    """Necessary inter-disturbance budget: delta must exceed both the
    epistemic and the epistemic+action recovery/durability sums."""
    return delta > max(spec.alpha1 + spec.beta1,
                       spec.alpha1 + spec.alpha2 + spec.beta2)


@dataclass(frozen=True)
class MetricsRecord:
    t_v: int
    t_det: float
    dt_rec_epi: float
    dt_dur_epi: float
    dt_rec_act: float
    dt_dur_act: float

    @property
    def t_rec_epi(self) -> float:
        return self.t_v + self.dt_rec_epi

    @property
    def t_rec_act(self) -> float:
        return self.t_rec_epi + self.dt_rec_act


@dataclass(frozen=True)
class Satisfied:
    pass


@dataclass(frozen=True)
class ViolatedAt:
    t: int


@dataclass(frozen=True)
class Censored:
    reason: str


Verdict = Satisfied | ViolatedAt | Censored


# ---------------------------------------------------------------------------
# Boolean timelines
#
# The monitor consumes two per-step boolean sequences: mutual knowledge of
# the post-change condition, and the everyone-acts-optimally predicate.


@dataclass(frozen=True)
class Timelines:
    mutual: tuple  # bool per step: E_N phi2 holds
    optimal: tuple  # bool per step: pi_opt holds

    def __post_init__(self):
        if len(self.mutual) != len(self.optimal):
            raise ResilienceError("timeline lengths differ")

    @property
    def length(self) -> int:
        return len(self.mutual)


def timelines_from_trace(trace, phi2: logic.Formula, agents,
                         opt_atom: str = "pi_opt") -> Timelines:
    """Evaluate the two timeline predicates on a Kripke trace via the logic
    module.  The optimal-action predicate is read from the trace valuation
    when the atom exists, else taken as never-true."""
    goal = logic.Mutual(frozenset(agents), phi2)
    mutual = tuple(
        logic.eval_formula(logic.EvalPoint(trace, t), goal)
        for t in range(trace.length))
    if trace.has_atom(opt_atom):
        opt = tuple(
            logic.eval_formula(logic.EvalPoint(trace, t), logic.Atom(opt_atom))
            for t in range(trace.length))
    else:
        opt = tuple(False for _ in range(trace.length))
    return Timelines(mutual, opt)


# ---------------------------------------------------------------------------
# Scalar metrics (independent linear scans)


def epistemic_recoverability(tl: Timelines, t_v: int) -> float:
    """Smallest t - t_v with t > t_v where mutual knowledge holds."""
    if not 0 <= t_v < tl.length:
        raise ResilienceError(f"t_v {t_v} outside trace")
    for t in range(t_v + 1, tl.length):
        if tl.mutual[t]:
            return t - t_v
    return INFINITE


def epistemic_durability(tl: Timelines, t_rec_epi: float) -> float:
    """Smallest t - t_rec_epi with t > t_rec_epi where mutual knowledge fails."""
    if t_rec_epi == INFINITE:
        raise ResilienceError("durability undefined for unrecovered trace")
    t_rec = int(t_rec_epi)
    for t in range(t_rec + 1, tl.length):
        if not tl.mutual[t]:
            return t - t_rec
    return INFINITE


def action_recoverability(tl: Timelines, t_rec_epi: float) -> float:
    """Smallest t - t_rec_epi with t >= t_rec_epi where pi_opt holds."""
    if t_rec_epi == INFINITE:
        raise ResilienceError("action recovery undefined for unrecovered trace")
    t_rec = int(t_rec_epi)
    for t in range(t_rec, tl.length):
        if tl.optimal[t]:
            return t - t_rec
    return INFINITE


def action_durability(tl: Timelines, t_rec_act: float) -> float:
    """Smallest t - t_rec_act with t >= t_rec_act where pi_opt fails."""
    if t_rec_act == INFINITE:
        raise ResilienceError("action durability undefined for unrecovered trace")
    t_rec = int(t_rec_act)
    for t in range(t_rec, tl.length):
        if not tl.optimal[t]:
            return t - t_rec
    return INFINITE


def measure(tl: Timelines, t_v: int, t_det: float = INFINITE) -> MetricsRecord:
    """All four metrics in one pass, chained per their definitions."""
    dt_rec_epi = epistemic_recoverability(tl, t_v)
    if dt_rec_epi == INFINITE:
        return MetricsRecord(t_v, t_det, INFINITE, INFINITE, INFINITE, INFINITE)
    dt_dur_epi = epistemic_durability(tl, t_v + dt_rec_epi)
    dt_rec_act = action_recoverability(tl, t_v + dt_rec_epi)
    if dt_rec_act == INFINITE:
        return MetricsRecord(t_v, t_det, dt_rec_epi, dt_dur_epi, INFINITE, INFINITE)
    dt_dur_act = action_durability(tl, t_v + dt_rec_epi + dt_rec_act)
    return MetricsRecord(t_v, t_det, dt_rec_epi, dt_dur_epi, dt_rec_act, dt_dur_act)


# ---------------------------------------------------------------------------
# Bounded-horizon verdicts


def _check_one(track: tuple, t_v: int, alpha: int, beta: int):
    """Verdict for (!q) U[0,alpha] (G[0,beta) q) on one boolean track.

    Returns Satisfied() or ViolatedAt(t) with the earliest step at which the
    violation is decided.  A witness t'' must be the first time q holds at
    or after t_v (the !q prefix forbids anything later), so the check
    reduces to locating that first rise and scanning its durability window.
    """
    rise = None
    for t in range(t_v, min(t_v + alpha, len(track) - 1) + 1):
        if track[t]:
            rise = t
            break
    if rise is None:
        # No recovery within the deadline: decided once t_v+alpha has passed.
        return ViolatedAt(t_v + alpha)
    for t in range(rise, rise + beta):
        if t >= len(track) or not track[t]:
            return ViolatedAt(t)
    return Satisfied()


def check_resilience(tl: Timelines, t_v: int, spec: ResilienceSpec) -> Verdict:
    """Monitor verdict for the conjoined epistemic and action specifications.

    The trace must cover [t_v, t_v + B) with B the violation bound; shorter
    traces yield Censored.  On violation the earliest witnessing step is
    reported.
    """
    b = bound_b(spec)
    if t_v < 0 or t_v >= tl.length:
        return Censored(f"t_v {t_v} outside trace")
    if tl.length < t_v + b:
        return Censored(f"trace ends before t_v + B = {t_v + b}")
    epi = _check_one(tl.mutual, t_v, spec.alpha1, spec.beta1)
    act = _check_one(tl.optimal, t_v, spec.alpha2, spec.beta2)
    witnesses = [v.t for v in (epi, act) if isinstance(v, ViolatedAt)]
    if witnesses:
        return ViolatedAt(min(witnesses))
    return Satisfied()


# ---------------------------------------------------------------------------
# Cross-check route: evaluate the specification formulas with the generic
# logic evaluator on a derived two-atom propositional trace.


class _TimelineTrace:
    """Timelines viewed as a two-atom Kripke trace (one world per step)."""

    ATOM_MUTUAL = "en_phi2"
    ATOM_OPT = "pi_opt"

    def __init__(self, tl: Timelines):
        self.tl = tl

    @property
    def length(self) -> int:
        return self.tl.length

    def actual_world(self, t: int) -> int:
        return t

    def atoms_of(self, w: int):
        atoms = set()
        if self.tl.mutual[w]:
            atoms.add(self.ATOM_MUTUAL)
        if self.tl.optimal[w]:
            atoms.add(self.ATOM_OPT)
        return atoms

    def accessible(self, agent: int, w: int, t: int):
        return ()

    def has_atom(self, name: str) -> bool:
        return name in (self.ATOM_MUTUAL, self.ATOM_OPT)

    def has_agent(self, agent: int) -> bool:
        return False


def check_resilience_via_logic(tl: Timelines, t_v: int, spec: ResilienceSpec) -> bool:
    """Boolean satisfaction of Eq-(2) and Eq-(4) via the formula evaluator.

    Independent of the scan in check_resilience; raises HorizonExceededError
    where the scan would report Censored.
    """
    trace = _TimelineTrace(tl)
    goal_e = logic.Atom(_TimelineTrace.ATOM_MUTUAL)
    goal_a = logic.Atom(_TimelineTrace.ATOM_OPT)
    f_epi = logic.Until(spec.alpha1, logic.Not(goal_e), logic.Globally(spec.beta1, goal_e))
    f_act = logic.Until(spec.alpha2, logic.Not(goal_a), logic.Globally(spec.beta2, goal_a))
    point = logic.EvalPoint(trace, t_v)
    return logic.eval_formula(point, f_epi) and logic.eval_formula(point, f_act)
