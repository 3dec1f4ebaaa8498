"""Vectorized multi-agent trial engine.

One engine runs one trial of one learning mode over the full horizon,
keeping per-agent state in arrays and dispatching the numeric inner steps
to the kernel backend (compiled extension or numpy reference).

Step order (all agents in lockstep; message receipt and commits precede
arm selection, statistics mix after pulls):

1. deliver broadcast receipts due now; update each holder's winning message
2. execute commits: in the broadcast-only mode every holder of a pending
   winner revises at the winner's timestamp + ttl, so the whole network
   updates in one step; the fast variant and the pooled mode commit
   immediately (consensus mixing keeps their beliefs synchronized without
   a dissemination wait)
3. select arms: round robin while gathering evidence, UCB otherwise
4. draw rewards from the active world (pull-independent noise pairing)
5. residual detection for agents not gathering evidence
6. evidence updates and local stop checks
7. consensus mixing of counts/sums and, for the pooled mode, of evidence
8. stop checks on pooled (post-mix) evidence
9. record the step

The recorded believed-world row for step t is the post-update epistemic
state, while arms/rewards are the step's pulls; knowledge thus leads
action by one step, matching the update order of the agent loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from . import net
from .env import Schedule, WorldCatalog
from .policies import CONSENSUS_MODES, KRIPKE_MODES, MODES, PolicyError


@dataclass
class EngineParams:
    mode: str
    n_agents: int
    n_arms: int
    horizon: int
    sigma: float
    gamma: float = 0.998            # forgetting for the discounted baselines
    kripke_gamma: float = 1.0       # forgetting inside the epistemic modes
    resid_threshold: float = 0.0    # absolute residual bound (observation units)
    window_len: int = 30
    exceed_threshold: int = 12
    eta_epi: float = 10.0
    n0: int = 5
    ucb_sigma: float | None = None  # exploration scale; defaults to sigma
    evidence_rule: str = "round_robin"
    include_current_world: bool = True
    min_evidence_pulls: int = 4   # own informative pulls required to stop
    evidence_decay: float = 1.0    # global pooled-ledger forgetting per step
    evidence_drain: float = 0.99   # idle agents' pooled slots decay per step

    def __post_init__(self):
        if self.mode not in MODES:
            raise PolicyError(f"unknown mode {self.mode!r}")
        if self.evidence_rule not in ("round_robin", "discriminative"):
            raise PolicyError(f"unknown evidence rule {self.evidence_rule!r}")

    @property
    def is_kripke(self) -> bool:
        return self.mode in KRIPKE_MODES

    @property
    def uses_consensus(self) -> bool:
        return self.mode in CONSENSUS_MODES

    @property
    def is_fast(self) -> bool:
        return self.mode == "lightcoop_kripke_fast"

    @property
    def pools_evidence(self) -> bool:
        return self.mode == "cooperative_kripke"

    @property
    def immediate_commit(self) -> bool:
        """Commit without the dissemination wait: the fast variant by
        design, and the pooled mode because consensus mixing keeps beliefs
        synchronized without long commit-propagation phases."""
        return self.mode in ("lightcoop_kripke_fast", "cooperative_kripke")


@dataclass
class TrialRecord:
    believed: np.ndarray        # (T, n) world believed after each step
    arms: np.ndarray            # (T, n)
    rewards: np.ndarray         # (T, n) sampled rewards
    optimal_pull: np.ndarray    # (T, n) bool, pulled arm optimal in true world
    regret_step: np.ndarray     # (T,) summed over agents
    world: np.ndarray           # (T,) active world id
    msgs_total: int
    msgs_flood: int
    detections: list            # (t, agent)
    broadcasts: list            # (t, agent, hypothesis, score)
    commits: list               # (t, agent, hypothesis)

    @property
    def horizon(self) -> int:
        return self.believed.shape[0]

    @property
    def n_agents(self) -> int:
        return self.believed.shape[1]

    def fraction_optimal(self) -> np.ndarray:
        return self.optimal_pull.mean(axis=1)

    def reward_mean(self) -> np.ndarray:
        return self.rewards.mean(axis=1)

    def mutual_knowledge_of(self, world: int) -> np.ndarray:
        return (self.believed == world).all(axis=1)

    def group_optimal(self) -> np.ndarray:
        return self.optimal_pull.all(axis=1)


class _Pending:
    """Best broadcast an agent currently holds (the running winner of the
    conflict-resolution rule)."""

    __slots__ = ("score", "sender", "hypothesis", "tau")

    def __init__(self):
        self.clear()

    def consider(self, sender: int, tau: int, hypothesis: int, score: float) -> None:
        key = (-score, sender, hypothesis)
        cur = (-self.score, self.sender, self.hypothesis)
        if self.sender < 0 or key < cur:
            self.score = score
            self.sender = sender
            self.hypothesis = hypothesis
            self.tau = tau

    @property
    def empty(self) -> bool:
        return self.sender < 0

    def clear(self) -> None:
        self.score, self.sender, self.hypothesis, self.tau = -math.inf, -1, -1, -1


class TrialEngine:
    def __init__(self, params: EngineParams, catalog: WorldCatalog,
                 schedule: Schedule, noise: np.ndarray,
                 graph: net.Graph | None = None):
        if catalog.n_arms != params.n_arms:
            raise PolicyError("catalog arm count mismatch")
        if noise.shape != (params.horizon, params.n_agents):
            raise PolicyError("noise must have shape (horizon, n_agents)")
        self.p = params
        self.catalog = catalog
        self.means = np.ascontiguousarray(catalog.means)
        self.schedule = schedule
        self.noise = noise
        self.graph = graph
        if params.mode != "independent_ducb" and graph is None:
            raise PolicyError(f"mode {params.mode} needs a communication graph")
        if graph is not None:
            self.l_comm = net.diameter(graph)
            self.n_edges = graph.n_edges
            self.weights = np.ascontiguousarray(net.mh_weights(graph).matrix)
            self._flood_cache: dict = {}
        opt = np.zeros((catalog.n_worlds, catalog.n_arms), dtype=bool)
        for h in range(catalog.n_worlds):
            for a in catalog.optimal_arms(h):
                opt[h, a] = True
        self.opt_mask = opt
        self.arm_informative = np.array(
            [len(set(float(v) for v in self.means[:, a])) > 1
             for a in range(catalog.n_arms)])

    # -- main loop -----------------------------------------------------------

    def run(self) -> TrialRecord:
        p = self.p
        n, a_count, horizon = p.n_agents, p.n_arms, p.horizon
        k_count = self.catalog.n_worlds

        self.counts = np.zeros((n, a_count))
        self.sums = np.zeros((n, a_count))
        if p.uses_consensus:
            self.zc_counts = np.zeros((n, a_count))
            self.zc_sums = np.zeros((n, a_count))
        self.believed = np.full(n, self.schedule.initial_world, dtype=np.int64)
        self.in_evidence = np.zeros(n, dtype=bool)
        self.flags = np.zeros((n, p.window_len), dtype=np.uint8)
        self.wcounts = np.zeros(n, dtype=np.int64)
        self.ledger = np.zeros((n, k_count, k_count))
        if p.pools_evidence:
            self.zl = np.zeros((n, k_count, k_count))
            self.zl_inc = np.zeros((n, k_count, k_count))
        self.has_broadcast = np.zeros(n, dtype=bool)
        self.committed_score = np.full(n, -math.inf)
        self.belief_tau = np.full(n, -(10 ** 9), dtype=np.int64)
        self.evid_pulls = np.zeros(n, dtype=np.int64)
        self._belief_version = 0
        self._mix_cache_key = -1
        self._mix_cache = None
        self._pending_agents: set = set()
        self.pending = [_Pending() for _ in range(n)]
        self._receipts: dict = {}
        self.msgs_consensus = 0
        self.msgs_flood = 0
        self.detections: list = []
        self.broadcasts: list = []
        self.commits: list = []

        world_at = self.schedule.world_per_step(horizon)
        thresholds = np.full(n, p.resid_threshold)

        believed_tr = np.zeros((horizon, n), dtype=np.int16)
        arms_tr = np.zeros((horizon, n), dtype=np.int16)
        rewards_tr = np.zeros((horizon, n))
        optimal_tr = np.zeros((horizon, n), dtype=bool)
        regret_tr = np.zeros(horizon)

        for t in range(horizon):
            if p.is_kripke:
                self._process_receipts_and_commits(t)

            # arm selection
            if p.uses_consensus:
                dec_counts = np.ascontiguousarray(p.n_agents * self.zc_counts)
                dec_sums = np.ascontiguousarray(p.n_agents * self.zc_sums)
            else:
                dec_counts, dec_sums = self.counts, self.sums
            active = np.ascontiguousarray((~self.in_evidence).astype(np.uint8))
            ucb_sigma = p.sigma if p.ucb_sigma is None else p.ucb_sigma
            arms = K.ucb_select_batch(dec_counts, dec_sums, float(t), ucb_sigma, active)
            evidence_rows = np.flatnonzero(self.in_evidence)
            if evidence_rows.size:
                arms[evidence_rows] = self._evidence_arms(evidence_rows, t)

            # rewards (pull-independent noise pairing)
            h = int(world_at[t])
            mu = self.means[h, arms]
            rewards = mu + p.sigma * self.noise[t]

            # detection
            evidence_started = None
            if p.is_kripke:
                predicted = self.means[self.believed, arms]
                resid = np.abs(rewards - predicted)
                K.window_update_batch(self.flags, self.wcounts, t % p.window_len,
                                      resid, thresholds, active)
                newly = (~self.in_evidence) & (self.wcounts >= p.exceed_threshold)
                if newly.any() and self._pending_agents:
                    for i in self._pending_agents:
                        newly[i] = False
                if newly.any():
                    for i in np.flatnonzero(newly):
                        self.detections.append((t, int(i)))
                        self.ledger[i] = 0.0
                        self.evid_pulls[i] = 0
                        if p.pools_evidence:
                            self.zl[i] = 0.0
                    self.in_evidence |= newly
                    evidence_started = newly

            # evidence accumulation; pairwise scores start after detection
            if p.is_kripke and self.in_evidence.any():
                gathering = self.in_evidence.copy()
                if evidence_started is not None:
                    gathering &= ~evidence_started
                gact = np.ascontiguousarray(gathering.astype(np.uint8))
                self.evid_pulls[gathering & self.arm_informative[arms]] += 1
                if p.pools_evidence:
                    self.zl_inc[:] = 0.0
                    K.ledger_update_batch(self.zl_inc, arms, rewards,
                                          self.means, p.sigma, gact)
                else:
                    K.ledger_update_batch(self.ledger, arms, rewards,
                                          self.means, p.sigma, gact)
                    self._stop_checks(t)

            # statistics update / consensus mixing
            gamma = p.kripke_gamma if p.is_kripke else p.gamma
            if p.uses_consensus:
                rows = np.arange(n)
                inc_c = np.zeros((n, a_count))
                inc_s = np.zeros((n, a_count))
                inc_c[rows, arms] = 1.0
                inc_s[rows, arms] = rewards
                stacked = np.hstack([gamma * self.zc_counts + inc_c,
                                     gamma * self.zc_sums + inc_s])
                mixed = K.mix_batch(self._mixing_matrix(), np.ascontiguousarray(stacked))
                self.zc_counts = np.ascontiguousarray(mixed[:, :a_count])
                self.zc_sums = np.ascontiguousarray(mixed[:, a_count:2 * a_count])
                if p.pools_evidence:
                    # evidence is a network total, so it diffuses over the
                    # full graph, unlike the regime-conditional statistics;
                    # slots of agents outside any evidence episode decay so
                    # that mass from closed episodes drains away, which
                    # per-agent resets alone cannot achieve once it
                    # circulates
                    pool = p.evidence_decay * self.zl
                    idle = ~self.in_evidence
                    if idle.any():
                        pool[idle] *= p.evidence_drain
                    zl_mixed = K.mix_batch(
                        self.weights,
                        np.ascontiguousarray((pool + self.zl_inc).reshape(n, -1)))
                    self.zl = np.ascontiguousarray(zl_mixed).reshape(n, k_count, k_count)
                    self.zl_inc[:] = 0.0
                self.msgs_consensus += 2 * self.n_edges
            K.discounted_update_batch(self.counts, self.sums, arms, rewards, gamma)

            if p.pools_evidence and self.in_evidence.any():
                self._stop_checks(t)

            believed_tr[t] = self.believed
            arms_tr[t] = arms
            rewards_tr[t] = rewards
            optimal_tr[t] = self.opt_mask[h, arms]
            regret_tr[t] = float((self.means[h].max() - mu).sum())

        return TrialRecord(
            believed=believed_tr, arms=arms_tr, rewards=rewards_tr,
            optimal_pull=optimal_tr, regret_step=regret_tr,
            world=world_at, msgs_total=self.msgs_consensus + self.msgs_flood,
            msgs_flood=self.msgs_flood, detections=self.detections,
            broadcasts=self.broadcasts, commits=self.commits)

    # -- phases ----------------------------------------------------------------

    def _process_receipts_and_commits(self, t: int) -> None:
        p = self.p
        for (node, sender, tau, hypothesis, score) in self._receipts.pop(t, ()):
            pend = self.pending[node]
            pend.consider(sender, tau, hypothesis, score)
            self._pending_agents.add(node)
            if not p.immediate_commit:
                # Adopting a pending winner ends local evidence gathering;
                # the state update itself waits for the winner's timestamp
                # + ttl so that the whole network revises in the same step.
                self.in_evidence[node] = False
        if p.immediate_commit:
            self._fast_commits(t)
            return
        for i in sorted(self._pending_agents):
            pend = self.pending[i]
            if not pend.empty and t >= pend.tau + self.l_comm:
                if pend.hypothesis != self.believed[i]:
                    self._commit(i, pend.hypothesis, pend.score, t, pend.tau)
                else:
                    self._absorb(i, pend.score, pend.tau)

    def _fast_commits(self, t: int) -> None:
        """Immediate adoption rules of the fast variant.

        Scores are comparable only within one evidence episode; a broadcast
        whose timestamp lies beyond the previous episode's horizon counts
        as fresh news and is not blocked by confidence absorbed earlier."""
        for i in sorted(self._pending_agents):
            pend = self.pending[i]
            if pend.empty or pend.sender == i:
                continue
            if pend.hypothesis == self.believed[i]:
                self._absorb(i, pend.score, pend.tau)
                continue
            if self.in_evidence[i]:
                _, ref = self._agent_score(i)
            elif pend.tau <= self.belief_tau[i] + self.l_comm:
                ref = self.committed_score[i]
                if self.p.pools_evidence:
                    # the live pooled ledger keeps supporting the current
                    # belief after the commit; a stale minority report must
                    # beat that evidence too, not just the adoption score
                    best, score = self._agent_score(i)
                    if best == self.believed[i]:
                        ref = max(ref, score)
            else:
                ref = -math.inf
            if pend.score > ref:
                self._commit(i, pend.hypothesis, pend.score, t, pend.tau)
            else:
                pend.clear()
                self._pending_agents.discard(i)

    def _evidence_arms(self, rows: np.ndarray, t: int) -> np.ndarray:
        p = self.p
        if p.evidence_rule == "round_robin":
            return np.full(rows.shape, t % p.n_arms, dtype=np.int64)
        out = np.empty(rows.shape, dtype=np.int64)
        for j, i in enumerate(rows):
            k1, _ = self._agent_score(int(i))
            lam = (self.zl[i] if p.pools_evidence else self.ledger[i]).copy()
            np.fill_diagonal(lam, math.inf)
            k2 = int(np.argmin(lam[k1]))
            gap = np.abs(self.means[k1] - self.means[k2])
            out[j] = int(np.argmax(gap))
        return out

    def _agent_score(self, i: int) -> tuple[int, float]:
        """Stop-rule hypothesis and effective score for one agent."""
        p = self.p
        lam = self.zl[i] if p.pools_evidence else self.ledger[i]
        exclude = int(self.believed[i]) if not p.include_current_world else -1
        best, score = _maximin_single(lam, exclude)
        if p.pools_evidence:
            score *= p.n_agents
        return best, score

    def _stop_checks(self, t: int) -> None:
        p = self.p
        candidates = self.in_evidence & ~self.has_broadcast
        rows = np.flatnonzero(candidates)
        if rows.size == 0:
            return
        if p.include_current_world:
            ledger = self.zl if p.pools_evidence else self.ledger
            best, scores = K.maximin_batch(np.ascontiguousarray(ledger[rows]))
            if p.pools_evidence:
                scores = scores * p.n_agents
        else:
            best = np.empty(rows.shape, dtype=np.int64)
            scores = np.empty(rows.shape)
            for j, i in enumerate(rows):
                best[j], scores[j] = self._agent_score(int(i))
        for j, i in enumerate(rows):
            if scores[j] >= p.eta_epi and self.evid_pulls[i] >= p.min_evidence_pulls:
                self._broadcast(int(i), t, int(best[j]), float(scores[j]))
                if p.immediate_commit:
                    if int(best[j]) != self.believed[i]:
                        self._commit(int(i), int(best[j]), float(scores[j]), t, t)
                    else:
                        self._absorb(int(i), float(scores[j]), t)

    def _broadcast(self, i: int, t: int, hypothesis: int, score: float) -> None:
        res = self._flood(i)
        for node, hop in enumerate(res.receipt):
            if hop > 0:
                self._receipts.setdefault(t + hop, []).append(
                    (node, i, t, hypothesis, score))
        self.msgs_flood += res.traversals
        self.has_broadcast[i] = True
        self.pending[i].consider(i, t, hypothesis, score)
        self._pending_agents.add(i)
        if not self.p.immediate_commit:
            self.in_evidence[i] = False
        self.broadcasts.append((t, i, hypothesis, score))

    def _flood(self, origin: int) -> net.FloodResult:
        res = self._flood_cache.get(origin)
        if res is None:
            res = net.flood(self.graph, origin, self.l_comm)
            self._flood_cache[origin] = res
        return res

    def _mixing_matrix(self) -> np.ndarray:
        """Consensus weights, restricted to belief-agreeing neighbours in
        the epistemic mode.  Statistics are estimates conditional on a
        world hypothesis; averaging across disagreeing regimes would let
        stale pre-change mass leak back into freshly revised learners.
        Excluded weight folds into the diagonal, so the matrix stays
        symmetric and doubly stochastic and the message count is untouched
        (payloads are exchanged either way)."""
        if not self.p.is_kripke:
            return self.weights
        key = self._belief_version
        if key == self._mix_cache_key:
            return self._mix_cache
        same = self.believed[:, None] == self.believed[None, :]
        w = np.where(same, self.weights, 0.0)
        np.fill_diagonal(w, 0.0)
        np.fill_diagonal(w, 1.0 - w.sum(axis=1))
        w = np.ascontiguousarray(w)
        self._mix_cache_key = key
        self._mix_cache = w
        return w

    def _commit(self, i: int, world: int, score: float, t: int, tau: int) -> None:
        """Revise to the winning hypothesis and reinitialise the learner."""
        p = self.p
        self.believed[i] = world
        self._belief_version += 1
        if p.uses_consensus:
            self.zc_counts[i] = float(p.n0) / p.n_agents
            self.zc_sums[i] = p.n0 * self.means[world] / p.n_agents
        self.counts[i] = float(p.n0)
        self.sums[i] = p.n0 * self.means[world]
        self._absorb(i, score, tau)
        self.commits.append((t, i, world))

    def _absorb(self, i: int, score: float, tau: int) -> None:
        """Close the evidence episode without touching the learner: clear
        the detector window, the ledgers and any pending message.  Keeps a
        confirmed false alarm from disturbing accumulated statistics."""
        self.in_evidence[i] = False
        self.committed_score[i] = score
        self.belief_tau[i] = max(self.belief_tau[i], tau)
        if self.p.pools_evidence:
            self.zl[i] = 0.0
        self.ledger[i] = 0.0
        self.evid_pulls[i] = 0
        self.flags[i] = 0
        self.wcounts[i] = 0
        self.has_broadcast[i] = False
        self.pending[i].clear()
        self._pending_agents.discard(i)


def _maximin_single(lam: np.ndarray, exclude: int = -1) -> tuple[int, float]:
    """Maximin hypothesis over one pairwise matrix; rivals and candidates
    skip the excluded id.  Ties break to the lowest hypothesis id."""
    k_count = lam.shape[0]
    best_k, best_score = -1, -math.inf
    for k in range(k_count):
        if k == exclude:
            continue
        rivals = [lam[k, l] for l in range(k_count) if l != k and l != exclude]
        score = min(rivals) if rivals else math.inf
        if score > best_score:
            best_k, best_score = k, score
    return best_k, best_score
