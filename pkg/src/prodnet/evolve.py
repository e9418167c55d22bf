"""Discrete entry/exit simulator for firm networks.

Each step adds one firm wired to existing firms by preferential attachment,
then with probability n/m deletes one pre-existing firm chosen with
probability proportional to 1/degree. Sampling only depends on the ordered
set of live nodes and their degrees, so a trajectory can be replayed step by
step from intermediate graphs.
"""

from __future__ import annotations

import bisect
import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, EarlyTerminationError
from .netcore import Graph, graph_to_dict

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvolutionConfig:
    initial: Graph
    steps: int
    n_over_m: float | Fraction = Fraction(1, 2)
    edges_per_new_node: int = 1
    seed: int = 0
    record_every: int = 1
    new_edge_weight: float = 1.0

    def __post_init__(self):
        if self.initial.n == 0:
            raise ConfigurationError("initial graph is empty")
        if self.initial.directed:
            raise ConfigurationError("the simulator evolves undirected graphs")
        if self.steps < 1:
            raise ConfigurationError("steps must be >= 1")
        if not 0 <= self.n_over_m < 1:
            raise ConfigurationError(f"n/m must lie in [0, 1), got {self.n_over_m}")
        if self.edges_per_new_node < 1:
            raise ConfigurationError("edges_per_new_node must be >= 1")
        if self.record_every < 1:
            raise ConfigurationError("record_every must be >= 1")

    def to_dict(self) -> dict:
        return {
            "initial": graph_to_dict(self.initial),
            "steps": self.steps,
            "n_over_m": str(self.n_over_m),
            "edges_per_new_node": self.edges_per_new_node,
            "seed": self.seed,
            "record_every": self.record_every,
            "new_edge_weight": self.new_edge_weight,
        }


@dataclass(frozen=True)
class Event:
    t: int
    action: str
    node_id: object
    targets: tuple = ()


@dataclass(frozen=True)
class Snapshot:
    t: int
    histogram: dict
    n_nodes: int
    mean_degree: float
    # (1 - n/m) t, the raw attachment denominator; compare with degree_mass
    attachment_denominator: float
    degree_mass: int


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)
    events: list = field(default_factory=list)
    final_graph: Graph | None = None

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for s in self.snapshots:
                doc = {
                    "t": s.t,
                    "n_nodes": s.n_nodes,
                    "mean_degree": s.mean_degree,
                    "attachment_denominator": s.attachment_denominator,
                    "degree_mass": s.degree_mass,
                    "histogram": {str(k): v for k, v in s.histogram.items()},
                }
                fh.write(json.dumps(doc) + "\n")

    def write_events_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "action", "node_id", "target_ids"])
            for e in self.events:
                writer.writerow([e.t, e.action, e.node_id, " ".join(map(str, e.targets))])


class _Fenwick:
    """Integer prefix sums with O(log n) point updates and inverse lookup."""

    def __init__(self, size: int):
        self.size = size
        self.tree = [0] * (size + 1)
        self.vals = [0] * size
        self.total = 0
        self._top = 1 << max(size.bit_length() - 1, 0)

    def grow(self, size: int) -> None:
        if size <= self.size:
            return
        vals = self.vals + [0] * (size - self.size)
        self.__init__(size)
        for i, v in enumerate(vals):
            if v:
                self.set(i, v)

    def set(self, i: int, value: int) -> None:
        delta = value - self.vals[i]
        if not delta:
            return
        self.vals[i] = value
        self.total += delta
        i += 1
        while i <= self.size:
            self.tree[i] += delta
            i += i & -i

    def find(self, u: int) -> int:
        """Smallest index whose inclusive prefix sum exceeds ``u``."""
        pos = 0
        rem = u
        step = self._top
        while step:
            nxt = pos + step
            if nxt <= self.size and self.tree[nxt] <= rem:
                pos = nxt
                rem -= self.tree[nxt]
            step >>= 1
        return pos


class _State:
    """Mutable working copy of a graph used inside the simulator."""

    def __init__(self, g: Graph, capacity: int = 0):
        self.directed = g.directed
        self.slot_node: list = list(g.nodes)
        self.node_slot = {x: i for i, x in enumerate(self.slot_node)}
        self.alive = [True] * len(self.slot_node)
        self.adj = {x: set() for x in g.nodes}
        self.edges: dict = {}
        for u, v, w in g.edges:
            self.adj[u].add(v)
            self.adj[v].add(u)
            self.edges[frozenset((u, v))] = (u, v, w)
        self.fen = _Fenwick(max(len(self.slot_node) + capacity, 1))
        self.buckets: dict[int, list] = {}
        for x in g.nodes:
            k = len(self.adj[x])
            self.fen.set(self.node_slot[x], k)
            self.buckets.setdefault(k, []).append(self.node_slot[x])
        self.n_alive = len(self.slot_node)
        self.n_edges = len(self.edges)

    def degree(self, x) -> int:
        return len(self.adj[x])

    def _move(self, slot: int, old: int, new: int) -> None:
        lst = self.buckets[old]
        del lst[bisect.bisect_left(lst, slot)]
        if not lst:
            del self.buckets[old]
        bisect.insort(self.buckets.setdefault(new, []), slot)
        self.fen.set(slot, new)

    def add_node(self, x) -> int:
        slot = len(self.slot_node)
        self.slot_node.append(x)
        self.node_slot[x] = slot
        self.alive.append(True)
        self.adj[x] = set()
        self.fen.grow(slot + 1)
        bisect.insort(self.buckets.setdefault(0, []), slot)
        self.n_alive += 1
        return slot

    def add_edge(self, u, v, w: float) -> None:
        for x in (u, v):
            k = self.degree(x)
            self._move(self.node_slot[x], k, k + 1)
        self.adj[u].add(v)
        self.adj[v].add(u)
        self.edges[frozenset((u, v))] = (u, v, w)
        self.n_edges += 1

    def remove_node(self, x) -> tuple:
        neighbors = tuple(sorted(self.adj[x], key=self.node_slot.__getitem__))
        for y in neighbors:
            k = self.degree(y)
            self._move(self.node_slot[y], k, k - 1)
            self.adj[y].discard(x)
            del self.edges[frozenset((x, y))]
        self.n_edges -= len(neighbors)
        slot = self.node_slot[x]
        k = self.degree(x)
        lst = self.buckets[k]
        del lst[bisect.bisect_left(lst, slot)]
        if not lst:
            del self.buckets[k]
        self.fen.set(slot, 0)
        self.alive[slot] = False
        del self.adj[x]
        self.n_alive -= 1
        return neighbors

    def histogram(self) -> dict:
        return {k: len(self.buckets[k]) for k in sorted(self.buckets)}

    def to_graph(self) -> Graph:
        nodes = [x for x, ok in zip(self.slot_node, self.alive) if ok]
        order = {x: i for i, x in enumerate(nodes)}
        edges = sorted(self.edges.values(), key=lambda e: (order[e[0]], order[e[1]]))
        return Graph(nodes, edges, self.directed)

    # -- sampling -------------------------------------------------------

    def attach_targets(self, count: int, exclude, rng: np.random.Generator) -> list:
        chosen: list = []
        saved = []
        ex_slot = self.node_slot[exclude]
        saved.append((ex_slot, self.fen.vals[ex_slot]))
        self.fen.set(ex_slot, 0)
        while len(chosen) < count and self.fen.total > 0:
            slot = self.fen.find(int(rng.integers(self.fen.total)))
            chosen.append(self.slot_node[slot])
            saved.append((slot, self.fen.vals[slot]))
            self.fen.set(slot, 0)
        for slot, val in reversed(saved):
            self.fen.set(slot, val)

        if len(chosen) < count:
            taken = set(chosen) | {exclude}
            pool = [x for x, ok in zip(self.slot_node, self.alive) if ok and x not in taken]
            if pool:
                log.info("no attachment mass left; choosing %d target(s) uniformly", min(count - len(chosen), len(pool)))
            while len(chosen) < count and pool:
                chosen.append(pool.pop(int(rng.integers(len(pool)))))
        return chosen

    def deletion_target(self, exclude, rng: np.random.Generator):
        """Draw a node with probability proportional to 1/degree (degree >= 1)."""
        if exclude is None:
            ex_slot, ex_k = -1, None
        else:
            ex_slot, ex_k = self.node_slot[exclude], self.degree(exclude)
        classes = []
        total = 0.0
        for k in sorted(self.buckets):
            if k == 0:
                continue
            count = len(self.buckets[k]) - (1 if k == ex_k else 0)
            if count:
                classes.append((k, count))
                total += count / k
        if not classes:
            return None
        u = rng.random() * total
        for k, count in classes:
            mass = count / k
            if u < mass or (k, count) == classes[-1]:
                j = min(int(u * k), count - 1)
                slots = self.buckets[k]
                if k == ex_k:
                    idx = bisect.bisect_left(slots, ex_slot)
                    if j >= idx:
                        j += 1
                return self.slot_node[slots[j]]
            u -= mass
        raise AssertionError("unreachable")

    def step(self, t: int, cfg: EvolutionConfig, new_id, rng: np.random.Generator) -> list:
        events = []
        self.add_node(new_id)
        targets = self.attach_targets(cfg.edges_per_new_node, new_id, rng)
        for y in targets:
            self.add_edge(new_id, y, cfg.new_edge_weight)
        events.append(Event(t, "add", new_id, tuple(targets)))

        if cfg.n_over_m > 0 and rng.random() < float(cfg.n_over_m):
            victim = self.deletion_target(new_id, rng)
            if victim is None:
                log.warning("t=%d: no deletable node with positive degree; deletion skipped", t)
            else:
                lost = self.remove_node(victim)
                events.append(Event(t, "delete", victim, lost))
        return events

    def snapshot(self, t: int, cfg: EvolutionConfig) -> Snapshot:
        mass = 2 * self.n_edges
        return Snapshot(
            t=t,
            histogram=self.histogram(),
            n_nodes=self.n_alive,
            mean_degree=mass / self.n_alive if self.n_alive else 0.0,
            attachment_denominator=float((1 - Fraction(cfg.n_over_m)) * t),
            degree_mass=mass,
        )


def _next_id(nodes) -> object:
    ints = [x for x in nodes if isinstance(x, (int, np.integer))]
    return (max(ints) if ints else 0) + 1


def evolve_step(g: Graph, t: int, cfg: EvolutionConfig, rng: np.random.Generator, new_id=None):
    """Advance ``g`` by one entry (and possibly one exit). Returns ``(graph, events)``.

    ``new_id`` defaults to one past the largest integer id in ``g``; callers
    chaining steps should pass fresh ids so identities stay unique.
    """
    if g.n == 0:
        raise ConfigurationError("cannot evolve an empty graph")
    if t < 1:
        raise ConfigurationError("t must be >= 1")
    state = _State(g, capacity=1)
    events = state.step(t, cfg, _next_id(g.nodes) if new_id is None else new_id, rng)
    return state.to_graph(), events


def evolve(cfg: EvolutionConfig, rng: np.random.Generator | None = None) -> Trajectory:
    """Run ``cfg.steps`` steps from ``cfg.initial``; node ids are ``base + t``."""
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    state = _State(cfg.initial, capacity=cfg.steps)
    base = _next_id(cfg.initial.nodes) - 1
    traj = Trajectory()
    traj.snapshots.append(state.snapshot(0, cfg))
    for t in range(1, cfg.steps + 1):
        traj.events.extend(state.step(t, cfg, base + t, rng))
        if state.n_alive == 0:
            traj.final_graph = state.to_graph()
            raise EarlyTerminationError(f"graph emptied at t={t}", traj)
        if t % cfg.record_every == 0 or t == cfg.steps:
            traj.snapshots.append(state.snapshot(t, cfg))
    traj.final_graph = state.to_graph()
    return traj


def empirical_degree_distribution(traj: Trajectory, window: int = 1) -> dict:
    """Degree pmf averaged over the last ``window`` snapshots."""
    if window < 1 or not traj.snapshots:
        raise ConfigurationError("window must cover at least one snapshot")
    chosen = traj.snapshots[-window:]
    acc: Counter = Counter()
    for s in chosen:
        for k, c in s.histogram.items():
            acc[k] += c / s.n_nodes
    return {k: acc[k] / len(chosen) for k in sorted(acc)}
