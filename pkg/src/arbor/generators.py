"""Seeded random instance families.

Every generator is a pure function of its arguments: the same seed gives
the same instance, and :func:`arbor.io.emit_instance` then gives the same
bytes.
"""

from __future__ import annotations

from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .exceptions import InputError
from .instance import Instance
from .metric import DirectedGraph, Edge

FAMILIES: Dict[str, Callable[..., Instance]] = {}


def _family(name):
    def wrap(fn):
        FAMILIES[name] = fn
        return fn
    return wrap


def _rewards(rng, n, root, hi=9):
    return {v: int(rng.integers(0, hi + 1)) for v in range(n) if v != root}


def _terminals(rng, n, root, k, levels=None):
    k = max(1, min(k, n - 1))
    picks = sorted(int(v) for v in rng.choice([v for v in range(n) if v != root], size=k, replace=False))
    if levels is None:
        return {t: None for t in picks}
    return {t: int(rng.integers(1, levels + 1)) for t in picks}


def _reach_all(rng, n, edges, root, cost_range, extra=lambda: ()):
    """Add a random spanning path out of ``root`` so every vertex is reachable."""
    order = [root] + [int(v) for v in rng.permutation([v for v in range(n) if v != root])]
    for a, b in zip(order, order[1:]):
        edges.append(Edge(a, b, int(rng.integers(cost_range[0], cost_range[1] + 1)), *extra()))


@_family("random-metric")
def random_metric(n: int, seed: int, cost_range: Tuple[int, int] = (1, 20), density: float = 0.6,
                  k: Optional[int] = None) -> Instance:
    """Random digraph, random rewards, a budget between the cheapest and the costliest root edge."""
    rng = np.random.default_rng(seed)
    edges = []
    _reach_all(rng, n, edges, 0, cost_range)
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < density:
                edges.append(Edge(u, v, int(rng.integers(cost_range[0], cost_range[1] + 1))))
    g = DirectedGraph(n, edges)
    budget = int(rng.integers(0, max(1, cost_range[1] * max(1, n // 2)) + 1))
    return Instance("sto", g, 0, budget, rewards=_rewards(rng, n, 0),
                    terminals=_terminals(rng, n, 0, k or max(1, (n - 1) // 2)))


@_family("layered")
def layered(n: int, seed: int, cost_range: Tuple[int, int] = (1, 20), layers: int = 3,
            k: Optional[int] = None) -> Instance:
    """Root above ``layers`` levels; edges only go one level down, plus sparse skips."""
    rng = np.random.default_rng(seed)
    rest = list(range(1, n))
    level = {0: 0}
    for idx, v in enumerate(rest):
        level[v] = 1 + idx * layers // max(1, len(rest))
    edges = []
    for u in range(n):
        for v in rest:
            if level[v] == level[u] + 1 and (rng.random() < 0.7 or u == 0):
                edges.append(Edge(u, v, int(rng.integers(cost_range[0], cost_range[1] + 1))))
            elif level[v] > level[u] + 1 and rng.random() < 0.15:
                edges.append(Edge(u, v, int(rng.integers(cost_range[1], 2 * cost_range[1] + 1))))
    for v in rest:
        if not any(e.v == v for e in edges):
            parents = [u for u in range(n) if level[u] == level[v] - 1]
            edges.append(Edge(int(rng.choice(parents)), v, int(rng.integers(cost_range[0], cost_range[1] + 1))))
    g = DirectedGraph(n, edges)
    budget = int(rng.integers(cost_range[1], cost_range[1] * layers + 1))
    return Instance("sto", g, 0, budget, rewards=_rewards(rng, n, 0),
                    terminals=_terminals(rng, n, 0, k or max(1, (n - 1) // 2)))


@_family("star-trap")
def star_trap(n: int, seed: int, cost_range: Tuple[int, int] = (1, 20), k: Optional[int] = None) -> Instance:
    """Cheap direct edges to low rewards next to a costly hub that unlocks the big rewards.

    Taking the cheap leaves first is the greedy trap; the hub route is optimal.
    """
    rng = np.random.default_rng(seed)
    lo, hi = cost_range
    hub = 1
    rest = list(range(2, n))
    split = max(1, len(rest) // 2)
    cheap, rich = rest[:split], rest[split:]
    hub_cost = int(rng.integers(max(lo, hi // 2), hi + 1))
    edges = [Edge(0, hub, hub_cost)]
    rewards = {hub: 0}
    for v in cheap:
        edges.append(Edge(0, v, int(rng.integers(lo, max(lo, hi // 4) + 1))))
        rewards[v] = int(rng.integers(1, 4))
    for v in rich:
        edges.append(Edge(hub, v, lo))
        edges.append(Edge(0, v, hub_cost + lo * len(rich)))
        rewards[v] = int(rng.integers(5, 10))
    g = DirectedGraph(n, edges)
    budget = hub_cost + lo * len(rich)
    return Instance("sto", g, 0, budget, rewards=rewards,
                    terminals=_terminals(rng, n, 0, k or max(1, (n - 1) // 2)))


@_family("two-cost")
def two_cost(n: int, seed: int, cost_range: Tuple[int, int] = (0, 8), length_range: Tuple[int, int] = (0, 4),
             density: float = 0.5, lbudget: Optional[int] = None, k: Optional[int] = None) -> Instance:
    """Random multigraph with ``(cost, length)`` edges, a total-length budget, deadlines and terminals."""
    rng = np.random.default_rng(seed)

    def draw():
        return (int(rng.integers(length_range[0], length_range[1] + 1)),)

    edges = []
    _reach_all(rng, n, edges, 0, cost_range, draw)
    for u in range(n):
        for v in range(n):
            if u != v:
                for _ in range(2):
                    if rng.random() < density / 2:
                        edges.append(Edge(u, v, int(rng.integers(cost_range[0], cost_range[1] + 1)), *draw()))
    g = DirectedGraph(n, edges)
    budget = int(rng.integers(3, max(4, cost_range[1] * max(1, n // 2)) + 1))
    L = int(rng.integers(0, 13)) if lbudget is None else lbudget
    deadlines = {v: int(rng.integers(0, 2 * length_range[1] + 1)) for v in range(1, n)}
    return Instance("stolc", g, 0, budget, L, rewards=_rewards(rng, n, 0), deadlines=deadlines,
                    terminals=_terminals(rng, n, 0, k or max(1, (n - 1) // 2)))


@_family("priority")
def priority(n: int, seed: int, cost_range: Tuple[int, int] = (0, 8), levels: int = 2, density: float = 0.5,
             k: Optional[int] = None) -> Instance:
    """Random digraph whose edges carry priorities in ``1..levels``; terminals carry requirements.

    A top-priority route to every vertex keeps every requirement satisfiable.
    """
    rng = np.random.default_rng(seed)
    edges = []
    _reach_all(rng, n, edges, 0, (cost_range[1], 2 * cost_range[1] + 1), lambda: (None, levels))
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < density:
                edges.append(Edge(u, v, int(rng.integers(cost_range[0], cost_range[1] + 1)), None,
                                  int(rng.integers(1, levels + 1))))
    g = DirectedGraph(n, edges)
    budget = int(rng.integers(3, max(4, cost_range[1] * max(1, n // 2)) + 1))
    return Instance("prio", g, 0, budget, rewards=_rewards(rng, n, 0),
                    terminals=_terminals(rng, n, 0, k or max(1, (n - 1) // 2), levels))


def generate(family: str, n: int, seed: int, **kw) -> Instance:
    """Dispatch to a family by name; raises :class:`InputError` for unknown names."""
    if family not in FAMILIES:
        raise InputError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    if n < 2:
        raise InputError("generators need n >= 2")
    if family == "star-trap" and n < 3:
        raise InputError("star-trap needs n >= 3")
    return FAMILIES[family](n, seed, **kw)
