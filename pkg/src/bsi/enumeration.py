"""Census of topological epsilon-machines and the on-disk library format.

Candidates are generated directly in breadth-first normal form: transition
slots are filled in ``(state, symbol)`` order and a previously unseen target
always receives the next free label.  Each strongly connected machine is
therefore produced once per distinct root, and only the root whose
relabelling is lexicographically least is kept.
"""

from __future__ import annotations

import gzip
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterator

import numpy as np

from .machine import ABSENT, Topology, is_strongly_connected

__all__ = [
    "CapacityError",
    "MachineLibrary",
    "canonical_encoding",
    "canonicalize",
    "enumerate_topological_ems",
    "is_full_alphabet",
    "is_minimal_uniform",
    "is_strongly_connected",
    "build_library",
    "load_library",
    "save_library",
    "shipped_library",
]

_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"
# Breadth-first candidates per (n, k) above which enumeration is refused.
MAX_CANDIDATES = 5_000_000


class CapacityError(RuntimeError):
    """Raised when an enumeration request is too large to finish."""


def _encode_flat(flat: list[int], k: int) -> str:
    rows = []
    for i in range(0, len(flat), k):
        rows.append("".join("." if t == ABSENT else _DIGITS[t] for t in flat[i:i + k]))
    return "|".join(rows)


def _relabel_from(table, n: int, k: int, root: int) -> list[int]:
    label = {root: 0}
    order = [root]
    flat = []
    i = 0
    while i < len(order):
        for t in table[order[i]]:
            if t == ABSENT:
                flat.append(ABSENT)
            else:
                if t not in label:
                    label[t] = len(order)
                    order.append(t)
                flat.append(label[t])
        i += 1
    return flat


def canonical_encoding(topology: Topology) -> str:
    """Encoding of the lexicographically least breadth-first relabelling.

    Each state contributes ``k`` characters, its successor labels in base 36
    or ``"."`` for an absent edge; states are joined by ``"|"``.
    """
    n, k = topology.n_states, topology.alphabet_size
    if n > len(_DIGITS):
        raise CapacityError(f"encoding supports at most {len(_DIGITS)} states")
    if not is_strongly_connected(topology):
        raise ValueError("canonical form is defined for strongly connected topologies")
    best = min(_relabel_from(topology.transitions, n, k, r) for r in range(n))
    return _encode_flat(best, k)


def canonicalize(topology: Topology) -> tuple[Topology, str]:
    """Return the canonical relabelling of ``topology`` and its encoding."""
    enc = canonical_encoding(topology)
    n, k = topology.n_states, topology.alphabet_size
    rows = tuple(
        tuple(ABSENT if c == "." else _DIGITS.index(c) for c in row)
        for row in enc.split("|")
    )
    return Topology(rows, id=topology.id or f"n{n}k{k}-{enc}"), enc


def is_full_alphabet(topology: Topology) -> bool:
    table = topology.table
    return bool(np.all((table != ABSENT).any(axis=0)))


def is_minimal_uniform(topology: Topology) -> bool:
    """True iff no two states merge when every out-edge is equally likely.

    Moore-style refinement: states start grouped by their per-symbol uniform
    emission probabilities, and blocks split on disagreeing successor blocks
    until a fixed point.
    """
    rows = topology.transitions
    n = len(rows)
    # The emission signature p(x|s) = 1/outdeg on present edges is fixed by
    # which symbols are present.
    ids: dict = {}
    block = [ids.setdefault(tuple(t != ABSENT for t in row), len(ids)) for row in rows]
    n_blocks = len(ids)
    while n_blocks < n:
        ids = {}
        block = [
            ids.setdefault((block[s],) + tuple(block[t] if t != ABSENT else -1 for t in row), len(ids))
            for s, row in enumerate(rows)
        ]
        if len(ids) == n_blocks:
            return False
        n_blocks = len(ids)
    return True


def _is_canonical_root(table, n: int, k: int) -> bool:
    own = [t for row in table for t in row]
    for r in range(1, n):
        if _relabel_from(table, n, k, r) < own:
            return False
    return True


def _candidates(n: int, k: int, prefix: tuple[int, ...] = ()) -> Iterator[list[list[int]]]:
    """Breadth-first-normal partial transition maps rooted at state 0.

    ``prefix`` pins the first slots; the generator is otherwise exhaustive.
    Every yielded table has each state reachable from 0 and out-degree >= 1.
    """
    table = [[ABSENT] * k for _ in range(n)]
    total = n * k

    def rec(slot: int, seen: int):
        if slot == total:
            if seen == n:
                yield table
            return
        s, x = divmod(slot, k)
        if s >= seen:
            return
        if slot < len(prefix):
            choices = (prefix[slot],)
        else:
            choices = range(ABSENT, min(seen, n - 1) + 1)
        for c in choices:
            if c > seen or c >= n:
                continue
            table[s][x] = c
            if x == k - 1 and all(t == ABSENT for t in table[s]):
                continue
            yield from rec(slot + 1, seen + 1 if c == seen else seen)
        table[s][x] = ABSENT

    yield from rec(0, 1)


def _enumerate_prefix(args) -> list[str]:
    n, k, prefix = args
    found = []
    for table in _candidates(n, k, prefix):
        if not all(any(table[s][x] != ABSENT for s in range(n)) for x in range(k)):
            continue
        top = Topology(tuple(map(tuple, table)))
        if not is_strongly_connected(top) or not is_minimal_uniform(top):
            continue
        if _is_canonical_root(top.transitions, n, k):
            found.append(_encode_flat([t for row in table for t in row], k))
    return found


def _estimate_candidates(n: int, k: int) -> float:
    # Breadth-first normal form divides the (n+1)^(nk) raw maps by roughly (n-1)!.
    return (n + 1) ** (n * k) / float(np.prod(np.arange(1, n)) if n > 1 else 1)


def enumerate_topological_ems(n: int, k: int, workers: int = 1) -> list[Topology]:
    """All topological epsilon-machines with ``n`` states over ``k`` symbols.

    One representative per isomorphism class, in canonical form, sorted by
    canonical encoding and labelled ``"n{n}k{k}c{index:05d}"``.

    Parameters
    ----------
    workers : int
        Processes used to split the search tree on the first state's slots.
        The result does not depend on it.
    """
    if n < 1 or k < 2:
        raise ValueError("need n >= 1 states and k >= 2 symbols")
    if n > len(_DIGITS) or _estimate_candidates(n, k) > MAX_CANDIDATES:
        raise CapacityError(f"enumeration of n={n}, k={k} exceeds the supported size")
    prefixes = [p for p in _first_state_prefixes(n, k)]
    jobs = [(n, k, p) for p in prefixes]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_enumerate_prefix, jobs))
    else:
        chunks = [_enumerate_prefix(j) for j in jobs]
    # Dedup on canonical encoding; the root test already guarantees
    # uniqueness, the set makes merging worker output safe.
    encodings = sorted({e for chunk in chunks for e in chunk})
    width = max(5, len(str(len(encodings))))
    out = []
    for i, enc in enumerate(encodings):
        rows = tuple(tuple(ABSENT if c == "." else _DIGITS.index(c) for c in row)
                     for row in enc.split("|"))
        out.append(Topology(rows, id=f"n{n}k{k}c{i:0{width}d}"))
    return out


def _first_state_prefixes(n: int, k: int) -> list[tuple[int, ...]]:
    """Valid assignments of state 0's slots, used as independent subtrees."""
    out = []

    def rec(x: int, seen: int, acc: tuple[int, ...]):
        if x == k:
            if any(t != ABSENT for t in acc):
                out.append(acc)
            return
        for c in range(ABSENT, min(seen, n - 1) + 1):
            rec(x + 1, seen + 1 if c == seen else seen, acc + (c,))

    rec(0, 1, ())
    return out


@dataclass
class MachineLibrary:
    """An ordered candidate set of canonical topologies.

    Machines are ordered by state count, then canonical encoding.
    """

    machines: list[Topology]
    max_states: int
    alphabet_size: int
    census: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.census:
            self.census = [0] * self.max_states
            for m in self.machines:
                self.census[m.n_states - 1] += 1
        self._index = {m.id: i for i, m in enumerate(self.machines)}
        if len(self._index) != len(self.machines):
            raise ValueError("library contains duplicate machine ids")

    def __len__(self):
        return len(self.machines)

    def __iter__(self):
        return iter(self.machines)

    def __getitem__(self, key):
        if isinstance(key, str):
            return self.machines[self._index[key]]
        return self.machines[key]

    def __eq__(self, other):
        if not isinstance(other, MachineLibrary):
            return NotImplemented
        return (self.max_states == other.max_states
                and self.alphabet_size == other.alphabet_size
                and self.census == other.census
                and self.machines == other.machines)

    def index_of(self, id: str) -> int:
        return self._index[id]

    def find(self, topology: Topology) -> Topology | None:
        """Library entry structurally equal to ``topology``, if any."""
        by_enc = getattr(self, "_by_encoding", None)
        if by_enc is None:
            by_enc = {(m.n_states, canonical_encoding(m)): m for m in self.machines}
            self._by_encoding = by_enc
        return by_enc.get((topology.n_states, canonical_encoding(topology)))

    def subset(self, max_states: int) -> "MachineLibrary":
        keep = [m for m in self.machines if m.n_states <= max_states]
        return MachineLibrary(keep, max_states, self.alphabet_size)

    def packed(self) -> tuple[np.ndarray, np.ndarray]:
        """``(tables, n_states)`` with tables padded to ``(M, n_max, k)`` by -1."""
        cached = getattr(self, "_packed", None)
        if cached is not None:
            return cached
        n_max = max((m.n_states for m in self.machines), default=1)
        tables = np.full((len(self.machines), n_max, self.alphabet_size), ABSENT, dtype=np.int64)
        sizes = np.zeros(len(self.machines), dtype=np.int64)
        for i, m in enumerate(self.machines):
            tables[i, :m.n_states] = m.transitions
            sizes[i] = m.n_states
        tables.flags.writeable = False
        sizes.flags.writeable = False
        self._packed = (tables, sizes)
        return self._packed


def build_library(min_states: int, max_states: int, k: int, workers: int = 1) -> MachineLibrary:
    if min_states < 1 or max_states < min_states:
        raise ValueError("state range must satisfy 1 <= min <= max")
    machines = []
    for n in range(min_states, max_states + 1):
        machines.extend(enumerate_topological_ems(n, k, workers=workers))
    return MachineLibrary(machines, max_states, k)


def _open(path, mode: str):
    path = os.fspath(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def save_library(lib: MachineLibrary, path) -> None:
    """Write one JSON header line then one machine per line."""
    with _open(path, "w") as fh:
        header = {"max_states": lib.max_states, "alphabet_size": lib.alphabet_size,
                  "census": lib.census}
        fh.write(json.dumps(header) + "\n")
        for m in lib.machines:
            rec = {"id": m.id, "n": m.n_states, "k": m.alphabet_size,
                   "edges": [list(e) for e in m.edges()]}
            fh.write(json.dumps(rec) + "\n")


def load_library(path) -> MachineLibrary:
    with _open(path, "r") as fh:
        lines = [ln for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty library file")
    header = json.loads(lines[0])
    try:
        max_states = int(header["max_states"])
        k = int(header["alphabet_size"])
        census = [int(c) for c in header["census"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed header") from exc
    machines = []
    seen_ids = set()
    seen_enc = set()
    for lineno, line in enumerate(lines[1:], start=2):
        rec = json.loads(line)
        if rec["id"] in seen_ids:
            raise ValueError(f"{path}:{lineno}: duplicate machine id {rec['id']!r}")
        if int(rec["k"]) != k:
            raise ValueError(f"{path}:{lineno}: alphabet size differs from header")
        top = Topology.from_edges(int(rec["n"]), k, rec["edges"], id=rec["id"])
        enc = (top.n_states, canonical_encoding(top))
        if enc in seen_enc:
            raise ValueError(f"{path}:{lineno}: {rec['id']!r} duplicates an earlier machine")
        seen_ids.add(rec["id"])
        seen_enc.add(enc)
        machines.append(top)
    lib = MachineLibrary(machines, max_states, k)
    if lib.census != census:
        raise ValueError(f"{path}: census {lib.census} disagrees with header {census}")
    return lib


def shipped_library(max_states: int = 5) -> MachineLibrary:
    """The bundled binary library, optionally truncated to fewer states."""
    if not 1 <= max_states <= 5:
        raise ValueError("the bundled library covers 1 to 5 states")
    name = "topological_k2_n1-2.jsonl" if max_states <= 2 else "topological_k2_n1-5.jsonl.gz"
    with resources.as_file(resources.files("bsi") / "data" / name) as p:
        lib = load_library(p)
    return lib if lib.max_states == max_states else lib.subset(max_states)
