"""Unifilar machine topologies, path tracing and information measures.

States are dense integers ``0..n-1`` and symbols dense integers ``0..k-1``.
A topology is stored as an ``(n, k)`` successor table where ``-1`` marks an
absent edge, so unifilarity holds by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ABSENT = -1


def as_series(data, alphabet_size: int | None = None) -> np.ndarray:
    """Convert ``data`` to a read-only ``uint8`` symbol array.

    ``data`` may be a string of digits (whitespace ignored), any integer
    sequence, or an ndarray.  Symbols must be ``< alphabet_size`` when given.
    """
    if isinstance(data, str):
        chars = "".join(data.split())
        if chars and not chars.isdigit():
            raise ValueError("data strings must contain only decimal digits")
        arr = np.frombuffer(chars.encode("ascii"), dtype=np.uint8) - ord("0")
        arr = arr.astype(np.uint8)
    else:
        arr = np.asarray(data)
        if arr.size and (arr.min() < 0 or not np.issubdtype(arr.dtype, np.integer)):
            raise ValueError("symbols must be nonnegative integers")
        arr = arr.astype(np.uint8).ravel()
    if alphabet_size is not None and arr.size and int(arr.max()) >= alphabet_size:
        raise ValueError(
            f"symbol {int(arr.max())} outside alphabet of size {alphabet_size}"
        )
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Topology:
    """An edge-labelled unifilar machine without probabilities.

    Parameters
    ----------
    transitions : tuple of tuples
        ``transitions[s][x]`` is the successor of state ``s`` on symbol ``x``,
        or ``-1`` when that edge does not exist.
    id : str
        Identifier; library machines use ``"n{n}k{k}c{index}"``.
    """

    transitions: tuple[tuple[int, ...], ...]
    id: str = ""

    def __post_init__(self):
        rows = tuple(tuple(int(t) for t in row) for row in self.transitions)
        object.__setattr__(self, "transitions", rows)
        if not rows:
            raise ValueError("a topology needs at least one state")
        k = len(rows[0])
        if k < 1 or any(len(r) != k for r in rows):
            raise ValueError("every state needs one table entry per symbol")
        n = len(rows)
        for s, row in enumerate(rows):
            if all(t == ABSENT for t in row):
                raise ValueError(f"state {s} has no outgoing edge")
            for t in row:
                if t != ABSENT and not 0 <= t < n:
                    raise ValueError(f"state {s} points at unknown state {t}")

    @classmethod
    def from_edges(cls, n_states: int, alphabet_size: int,
                   edges: Iterable[Sequence[int]], id: str = "") -> "Topology":
        """Build from ``(from, symbol, to)`` triples."""
        table = [[ABSENT] * alphabet_size for _ in range(n_states)]
        for src, sym, dst in edges:
            if table[src][sym] != ABSENT:
                raise ValueError(f"two edges leave state {src} on symbol {sym}")
            table[src][sym] = dst
        return cls(tuple(map(tuple, table)), id=id)

    @property
    def n_states(self) -> int:
        return len(self.transitions)

    @property
    def alphabet_size(self) -> int:
        return len(self.transitions[0])

    @property
    def table(self) -> np.ndarray:
        arr = np.array(self.transitions, dtype=np.int64)
        arr.flags.writeable = False
        return arr

    def edges(self) -> list[tuple[int, int, int]]:
        """``(from, symbol, to)`` triples sorted by ``(from, symbol)``."""
        return [(s, x, t) for s, row in enumerate(self.transitions)
                for x, t in enumerate(row) if t != ABSENT]

    def out_degree(self) -> np.ndarray:
        return (self.table != ABSENT).sum(axis=1)

    def multi_edge_states(self) -> list[int]:
        """States with more than one outgoing edge (the only free parameters)."""
        return [s for s, d in enumerate(self.out_degree()) if d >= 2]

    def successor(self, state: int, symbol: int) -> int:
        return self.transitions[state][symbol]

    def with_id(self, id: str) -> "Topology":
        return Topology(self.transitions, id=id)

    def __repr__(self):
        edges = " ".join(f"{s}-{x}->{t}" for s, x, t in self.edges())
        return f"Topology({self.id!r}, n={self.n_states}, k={self.alphabet_size}, {edges})"


@dataclass(frozen=True)
class TransitionAssignment:
    """Concrete edge probabilities ``p(x | s)`` for one topology.

    ``probs`` has the topology's table shape; absent edges hold exactly 0.
    """

    topology: Topology
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        mask = self.topology.table != ABSENT
        if p.shape != mask.shape:
            raise ValueError(f"probability table has shape {p.shape}, expected {mask.shape}")
        if np.any(p[~mask] != 0.0):
            raise ValueError("absent edges must carry probability 0")
        if np.any(p[mask] <= 0.0) or np.any(p[mask] > 1.0):
            raise ValueError("edge probabilities must lie in (0, 1]")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("outgoing probabilities of every state must sum to 1")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, topology: Topology) -> "TransitionAssignment":
        mask = topology.table != ABSENT
        return cls(topology, mask / mask.sum(axis=1, keepdims=True))

    @classmethod
    def from_dict(cls, topology: Topology, probs: dict) -> "TransitionAssignment":
        """``probs`` maps ``(state, symbol)`` to a probability.

        Edges leaving out-degree-1 states may be omitted; they get 1.
        """
        mask = topology.table != ABSENT
        p = np.zeros(mask.shape)
        for (s, x), v in probs.items():
            if not mask[s, x]:
                raise ValueError(f"no edge leaves state {s} on symbol {x}")
            p[s, x] = v
        single = mask.sum(axis=1) == 1
        p[single] = mask[single]
        return cls(topology, p)

    def state_matrix(self) -> np.ndarray:
        """State-to-state matrix ``T = sum_x T^(x)``."""
        n = self.topology.n_states
        T = np.zeros((n, n))
        for s, x, t in self.topology.edges():
            T[s, t] += self.probs[s, x]
        return T


@dataclass(frozen=True)
class EdgeCounts:
    """Edge traversal counts ``n(s x | start)`` for one traced series."""

    start_state: int
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @property
    def visits(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other):
        if not isinstance(other, EdgeCounts):
            return NotImplemented
        return (self.start_state == other.start_state
                and np.array_equal(self.counts, other.counts))

    def __hash__(self):
        return hash((self.start_state, self.counts.tobytes()))


def trace_path(topology: Topology, start: int, data) -> EdgeCounts | None:
    """Follow the unique hidden path for ``data`` from ``start``.

    Returns
    -------
    EdgeCounts or None
        ``None`` when some symbol has no outgoing edge from the current state,
        i.e. the series has zero likelihood from this start.
    """
    n, k = topology.n_states, topology.alphabet_size
    if not 0 <= start < n:
        raise ValueError(f"start state {start} outside 0..{n - 1}")
    series = as_series(data, k)
    table = topology.transitions
    counts = [[0] * k for _ in range(n)]
    s = start
    for x in series.tolist():
        t = table[s][x]
        if t == ABSENT:
            return None
        counts[s][x] += 1
        s = t
    return EdgeCounts(start, np.array(counts, dtype=np.int64).reshape(n, k))


def _reaches_all(adj: list[list[int]]) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        for v in adj[stack.pop()]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(adj)


def is_strongly_connected(topology: Topology) -> bool:
    """Every state reaches every other along directed edges."""
    n = topology.n_states
    forward = [[t for t in row if t != ABSENT] for row in topology.transitions]
    backward = [[] for _ in range(n)]
    for s, row in enumerate(forward):
        for t in row:
            backward[t].append(s)
    return _reaches_all(forward) and _reaches_all(backward)


def stationary_from_matrix(T: np.ndarray) -> np.ndarray:
    """Stationary vector of a row-stochastic, irreducible matrix.

    Solves ``(T^T - I) pi = 0`` with one row replaced by ``sum(pi) = 1``; this
    is exact for periodic chains where power iteration would oscillate.
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    if n == 1:
        return np.ones(1)
    A = T.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise ValueError("transition matrix is not irreducible") from exc
    if np.any(pi < -1e-9):
        raise ValueError("transition matrix is not irreducible")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def stationary_distribution(topology: Topology, theta: TransitionAssignment) -> np.ndarray:
    """Asymptotic state distribution ``pi`` with ``pi T = pi``."""
    if theta.topology.transitions != topology.transitions:
        raise ValueError("assignment belongs to a different topology")
    if not is_strongly_connected(topology):
        raise ValueError("stationary distribution needs a strongly connected topology")
    return stationary_from_matrix(theta.state_matrix())


def _plogp(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p, dtype=float)
    nz = p > 0
    out[nz] = p[nz] * np.log2(p[nz])
    return out


def entropy_rate(topology: Topology, theta: TransitionAssignment, pi) -> float:
    """Entropy rate in bits per symbol, ``-sum_s pi(s) sum_x p log2 p``."""
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (topology.n_states,):
        raise ValueError("pi must have one entry per state")
    h = -(pi * _plogp(theta.probs).sum(axis=1)).sum()
    return float(max(h, 0.0))


def statistical_complexity(pi) -> float:
    """Shannon entropy of the state distribution, in bits."""
    pi = np.asarray(pi, dtype=float)
    return float(max(-_plogp(pi).sum(), 0.0)) + 0.0   # no -0.0
