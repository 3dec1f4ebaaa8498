"""Communication layer: undirected graphs (ring, small-world), BFS
diameter, Metropolis-Hastings consensus weights, reliable one-step
delivery, and TTL-limited broadcast flooding with per-edge accounting.

Delivery is synchronous and lossless: a message sent over an edge at step
t is readable by the far endpoint at step t+1, so a flood front advances
one hop per step and a broadcast with TTL equal to the graph diameter
reaches every node.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


class NetError(Exception):
    pass


@dataclass
class Graph:
    n: int
    adjacency: list  # node -> sorted list of neighbours

    def __post_init__(self):
        for i, nbrs in enumerate(self.adjacency):
            if i in nbrs:
                raise NetError("self-loops are not allowed")
            for j in nbrs:
                if i not in self.adjacency[j]:
                    raise NetError("adjacency must be symmetric")
        if not self.is_connected():
            raise NetError("graph must be connected")

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self):
        for i, nbrs in enumerate(self.adjacency):
            for j in nbrs:
                if i < j:
                    yield (i, j)

    def is_connected(self) -> bool:
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in self.adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == self.n

    def bfs_distances(self, source: int) -> list:
        dist = [-1] * self.n
        dist[source] = 0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in self.adjacency[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist


def ring(n: int) -> Graph:
    """Cycle graph: node i adjacent to (i +/- 1) mod n."""
    if n < 3:
        raise NetError("a ring needs at least 3 nodes")
    adjacency = [sorted({(i - 1) % n, (i + 1) % n}) for i in range(n)]
    return Graph(n, adjacency)


def small_world(n: int, mean_degree: int = 4, rewire_prob: float = 0.1,
                seed: int = 0) -> Graph:
    """Watts-Strogatz small world: ring lattice plus random rewiring.

    Each lattice edge (i, i+j) for j up to mean_degree/2 is rewired with
    the given probability to a fresh endpoint; edge count stays exactly
    n * mean_degree / 2.  Redraws until connected; deterministic in seed.
    """
    if mean_degree % 2 != 0 or mean_degree < 2:
        raise NetError("mean degree must be even and >= 2")
    if n <= mean_degree:
        raise NetError("need n > mean_degree")
    if not 0.0 <= rewire_prob <= 1.0:
        raise NetError("rewire probability must be in [0, 1]")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    half = mean_degree // 2
    for _ in range(1000):
        nbrs = [set() for _ in range(n)]
        for j in range(1, half + 1):
            for i in range(n):
                nbrs[i].add((i + j) % n)
                nbrs[(i + j) % n].add(i)
        for j in range(1, half + 1):
            for i in range(n):
                k = (i + j) % n
                if k not in nbrs[i]:
                    continue  # already rewired away
                if rng.random() < rewire_prob:
                    candidates = [v for v in range(n) if v != i and v not in nbrs[i]]
                    if not candidates:
                        continue
                    new = candidates[rng.integers(len(candidates))]
                    nbrs[i].discard(k)
                    nbrs[k].discard(i)
                    nbrs[i].add(new)
                    nbrs[new].add(i)
        try:
            return Graph(n, [sorted(s) for s in nbrs])
        except NetError:
            continue
    raise NetError("failed to generate a connected small-world graph")


def diameter(graph: Graph) -> int:
    """Max BFS eccentricity; the hop budget for network-wide dissemination."""
    best = 0
    for s in range(graph.n):
        dist = graph.bfs_distances(s)
        ecc = max(dist)
        if ecc > best:
            best = ecc
    return best


@dataclass
class ConsensusWeights:
    """Symmetric doubly-stochastic mixing matrix on the graph's edges."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)


def mh_weights(graph: Graph) -> ConsensusWeights:
    """Metropolis-Hastings weights: w_ij = 1/(1+max(d_i,d_j)) on edges,
    diagonal absorbs the remainder so rows sum to one."""
    n = graph.n
    w = np.zeros((n, n))
    for i, j in graph.edges():
        wij = 1.0 / (1.0 + max(graph.degree(i), graph.degree(j)))
        w[i, j] = wij
        w[j, i] = wij
    for i in range(n):
        w[i, i] = 1.0 - w[i].sum()
    return ConsensusWeights(w)


@dataclass(frozen=True)
class FloodResult:
    """Outcome of one TTL-limited flood: per-node receipt step offsets
    (-1 when unreached) and the number of edge traversals used."""

    receipt: tuple
    traversals: int

    def receivers(self) -> set[int]:
        return {i for i, r in enumerate(self.receipt) if r >= 0}


def flood(graph: Graph, origin: int, ttl: int) -> FloodResult:
    """Breadth-limited flood from the origin.

    Every node forwards the message once to each neighbour it did not hear
    it from, as long as hops remain; each traversal is counted even when
    the far endpoint already holds the message.  One hop costs one step,
    so receipt[i] is both the hop distance and the delivery latency.
    """
    if ttl < 1:
        raise NetError("ttl must be >= 1")
    receipt = [-1] * graph.n
    received_from = [set() for _ in range(graph.n)]
    receipt[origin] = 0
    frontier = [origin]
    traversals = 0
    depth = 0
    while frontier and depth < ttl:
        depth += 1
        sends = []
        for u in frontier:
            for v in graph.adjacency[u]:
                if v in received_from[u]:
                    continue
                sends.append((u, v))
        next_frontier = set()
        for u, v in sends:
            traversals += 1
            if receipt[v] < 0:
                receipt[v] = depth
                next_frontier.add(v)
            if receipt[v] == depth:
                received_from[v].add(u)
        frontier = sorted(next_frontier)
    return FloodResult(tuple(receipt), traversals)


@dataclass
class MessageBus:
    """Per-step inboxes with reliable one-step delivery and counting.

    send() enqueues for the next step; a flood enqueues along its hop
    schedule.  inbox(agent, t) returns everything readable at step t.
    Besides the total, per-receiver delivery counts support the
    per-agent-per-step accounting of the scalability table.
    """

    graph: Graph
    total_messages: int = 0
    per_agent: dict = field(default_factory=dict)  # receiver -> deliveries
    _queues: dict = field(default_factory=dict)  # (agent, step) -> list

    def _count(self, receiver: int, n: int = 1) -> None:
        self.total_messages += n
        self.per_agent[receiver] = self.per_agent.get(receiver, 0) + n

    def send(self, sender: int, receiver: int, step: int, payload) -> None:
        if receiver not in self.graph.adjacency[sender]:
            raise NetError(f"no edge {sender}-{receiver}")
        self._queues.setdefault((receiver, step + 1), []).append(payload)
        self._count(receiver)

    def broadcast_flood(self, origin: int, step: int, payload, ttl: int) -> FloodResult:
        result = flood(self.graph, origin, ttl)
        for node, hop in enumerate(result.receipt):
            if hop > 0:
                self._queues.setdefault((node, step + hop), []).append(payload)
                self._count(node)
        self.total_messages += result.traversals - len(result.receivers()) + 1
        return result

    def count_consensus_round(self) -> None:
        """One payload each way over every edge."""
        for i, nbrs in enumerate(self.graph.adjacency):
            self._count(i, len(nbrs))

    def inbox(self, agent: int, step: int) -> list:
        return self._queues.pop((agent, step), [])


def consensus_step(values: np.ndarray, weights: ConsensusWeights,
                   bus: MessageBus | None = None) -> np.ndarray:
    """One synchronous mixing round: x' = W x, applied per column."""
    w = weights.matrix
    x = np.asarray(values, dtype=np.float64)
    if x.shape[0] != w.shape[0]:
        raise NetError("value rows must match the agent count")
    if bus is not None:
        bus.count_consensus_round()
    return w @ x
