"""Reference data sources: Golden Mean, Even, Simple Nonunifilar Source.

Generators are general edge-labelled HMMs; unifilarity is not required, so
the SNS (two ``1``-edges out of state A) is representable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .machine import Topology, as_series, stationary_from_matrix

BUILTIN_NAMES = ("golden-mean", "even", "sns")


@dataclass(frozen=True)
class GeneratorHMM:
    """Weighted edges ``(from, symbol, to, probability)``."""

    n_states: int
    alphabet_size: int
    edges: tuple[tuple[int, int, int, float], ...]
    name: str = ""

    def __post_init__(self):
        edges = tuple((int(a), int(x), int(b), float(p)) for a, x, b, p in self.edges)
        object.__setattr__(self, "edges", edges)
        out = np.zeros(self.n_states)
        for a, x, b, p in edges:
            if not (0 <= a < self.n_states and 0 <= b < self.n_states):
                raise ValueError(f"edge {a}->{b} references an unknown state")
            if not 0 <= x < self.alphabet_size:
                raise ValueError(f"edge symbol {x} outside the alphabet")
            if not 0.0 < p <= 1.0:
                raise ValueError("edge probabilities must lie in (0, 1]")
            out[a] += p
        if np.any(np.abs(out - 1.0) > 1e-12):
            raise ValueError("outgoing probabilities of every state must sum to 1")
        topo = [set() for _ in range(self.n_states)]
        for a, _, b, _ in edges:
            topo[a].add(b)
        if not _strongly_connected(topo):
            raise ValueError("generator must be strongly connected")

    @property
    def is_unifilar(self) -> bool:
        keys = [(a, x) for a, x, _, _ in self.edges]
        return len(keys) == len(set(keys))

    def state_matrix(self) -> np.ndarray:
        T = np.zeros((self.n_states, self.n_states))
        for a, _, b, p in self.edges:
            T[a, b] += p
        return T

    def symbol_matrices(self) -> np.ndarray:
        Tx = np.zeros((self.alphabet_size, self.n_states, self.n_states))
        for a, x, b, p in self.edges:
            Tx[x, a, b] += p
        return Tx

    def stationary(self) -> np.ndarray:
        return stationary_from_matrix(self.state_matrix())

    def symbol_probabilities(self) -> np.ndarray:
        """Stationary single-symbol distribution."""
        pi = self.stationary()
        return np.array([pi @ Tx.sum(axis=1) for Tx in self.symbol_matrices()])

    def topology(self) -> Topology:
        if not self.is_unifilar:
            raise ValueError("a nonunifilar generator has no unifilar topology")
        return Topology.from_edges(self.n_states, self.alphabet_size,
                                   [(a, x, b) for a, x, b, _ in self.edges], id=self.name)


def _strongly_connected(adj: list[set]) -> bool:
    n = len(adj)
    rev = [set() for _ in range(n)]
    for a, targets in enumerate(adj):
        for b in targets:
            rev[b].add(a)
    for graph in (adj, rev):
        seen, stack = {0}, [0]
        while stack:
            for v in graph[stack.pop()]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) != n:
            return False
    return True


def builtin(name: str) -> GeneratorHMM:
    """One of ``golden-mean``, ``even`` or ``sns`` (state A is 0, B is 1)."""
    if name == "golden-mean":
        edges = [(0, 1, 0, 0.5), (0, 0, 1, 0.5), (1, 1, 0, 1.0)]
    elif name == "even":
        edges = [(0, 0, 0, 0.5), (0, 1, 1, 0.5), (1, 1, 0, 1.0)]
    elif name == "sns":
        edges = [(0, 1, 0, 0.5), (0, 1, 1, 0.5), (1, 1, 1, 0.5), (1, 0, 0, 0.5)]
    else:
        raise KeyError(f"unknown process {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    return GeneratorHMM(2, 2, tuple(edges), name=name)


def load_generator(path) -> GeneratorHMM:
    """Read a machine file: ``{"n", "k", "edges": [[from, sym, to, p], ...]}``."""
    with open(path, encoding="utf-8") as fh:
        rec = json.load(fh)
    edges = []
    for e in rec["edges"]:
        if isinstance(e, dict):
            edges.append((e["from"], e["symbol"], e["to"], e["p"]))
        else:
            edges.append(tuple(e))
    return GeneratorHMM(int(rec["n"]), int(rec["k"]), tuple(edges), name=rec.get("id", ""))


def generate_series(hmm: GeneratorHMM, length: int, seed: int,
                    start: int | None = None) -> np.ndarray:
    """Simulate ``length`` symbols.

    The start state is drawn from the stationary distribution unless pinned.
    """
    if length < 0:
        raise ValueError("length must be nonnegative")
    rng = np.random.default_rng(seed)
    pi = hmm.stationary()
    if start is None:
        state = int(np.searchsorted(np.cumsum(pi), rng.random(), side="right"))
        state = min(state, hmm.n_states - 1)
    else:
        if not 0 <= start < hmm.n_states:
            raise ValueError(f"start state {start} outside 0..{hmm.n_states - 1}")
        state = start
    by_state = [[] for _ in range(hmm.n_states)]
    for a, x, b, p in hmm.edges:
        by_state[a].append((x, b, p))
    cum = [np.cumsum([p for _, _, p in outs]) for outs in by_state]
    choices = [[(x, b) for x, b, _ in outs] for outs in by_state]
    u = rng.random(length)
    out = np.empty(length, dtype=np.uint8)
    for t in range(length):
        j = int(np.searchsorted(cum[state], u[t] * cum[state][-1], side="right"))
        j = min(j, len(choices[state]) - 1)
        x, state = choices[state][j]
        out[t] = x
    return as_series(out, hmm.alphabet_size)
