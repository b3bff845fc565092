"""Closed-form evidence and posteriors over parameters, start states and topologies.

All arithmetic is in natural-log space: at ``L = 2**17`` raw likelihoods
underflow any floating-point type.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from ._kernels import trace_library
from .enumeration import MachineLibrary
from .machine import ABSENT, EdgeCounts, Topology, TransitionAssignment, as_series, trace_path


class NoAcceptingTopologyError(ValueError):
    """No candidate machine can generate the observed series."""


@dataclass(frozen=True)
class DirichletPrior:
    """Dirichlet concentration ``alpha`` shared by every edge (1 = uniform on the simplex)."""

    alpha: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("Dirichlet concentrations must be positive")

    def for_topology(self, topology: Topology) -> np.ndarray:
        return np.where(topology.table != ABSENT, float(self.alpha), 0.0)


@dataclass(frozen=True)
class ModelPriorSpec:
    """Structural prior ``exp(-beta * n_states)``; start states uniform."""

    beta: float = 4.0

    def __post_init__(self):
        if not self.beta >= 0:
            raise ValueError("beta must be nonnegative")


def _uniform_start(n: int, start_prior) -> np.ndarray:
    if start_prior is None:
        return np.full(n, 1.0 / n)
    p = np.asarray(start_prior, dtype=float)
    if p.shape != (n,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("start prior must be a probability vector over the states")
    return p


def _log_evidence_terms(counts: np.ndarray, mask: np.ndarray, alpha: float) -> np.ndarray:
    """Per-state log-evidence terms, broadcast over leading axes.

    ``counts`` is ``(..., n, k)`` and ``mask`` broadcasts against it.
    Out-degree-1 states contribute exactly 0.
    """
    a = np.where(mask, alpha, 1.0)
    per_edge = np.where(mask, gammaln(a + counts) - gammaln(a), 0.0)
    multi = mask.sum(axis=-1) >= 2
    a_tot = np.where(multi, np.where(mask, alpha, 0.0).sum(axis=-1), 1.0)
    n_tot = counts.sum(axis=-1)
    term = gammaln(a_tot) - gammaln(a_tot + n_tot) + per_edge.sum(axis=-1)
    return np.where(multi, term, 0.0)


def log_evidence_given_start(topology: Topology, counts: EdgeCounts,
                             prior: DirichletPrior = DirichletPrior()) -> float:
    """``log Pr(D | start, M)`` from traced edge counts."""
    mask = topology.table != ABSENT
    c = counts.counts
    if c.shape != mask.shape or np.any(c[~mask]):
        raise ValueError("counts were not traced on this topology")
    return float(_log_evidence_terms(c, mask, prior.alpha).sum())


def transition_posterior_mean(topology: Topology, counts: EdgeCounts,
                              prior: DirichletPrior = DirichletPrior()) -> np.ndarray:
    """Posterior mean ``(alpha + n) / (alpha_tot + n_tot)`` per edge.

    Returns an ``(n, k)`` array; out-degree-1 states get exactly 1 on their edge.
    """
    a = prior.for_topology(topology) + counts.counts
    mean = a / a.sum(axis=1, keepdims=True)
    single = topology.out_degree() == 1
    mean[single] = (topology.table[single] != ABSENT).astype(float)
    return mean


def _start_log_evidence(topology, data, prior) -> np.ndarray:
    series = as_series(data, topology.alphabet_size)
    out = np.full(topology.n_states, -np.inf)
    for s0 in range(topology.n_states):
        counts = trace_path(topology, s0, series)
        if counts is not None:
            out[s0] = log_evidence_given_start(topology, counts, prior)
    return out


def start_state_posterior(topology: Topology, data, prior: DirichletPrior = DirichletPrior(),
                          start_prior=None) -> np.ndarray | None:
    """``Pr(start | D, M)``, or ``None`` when every start rejects."""
    le = _start_log_evidence(topology, data, prior)
    if np.all(np.isneginf(le)):
        return None
    with np.errstate(divide="ignore"):
        joint = le + np.log(_uniform_start(topology.n_states, start_prior))
    return np.exp(joint - logsumexp(joint))


def model_log_evidence(topology: Topology, data, prior: DirichletPrior = DirichletPrior(),
                       start_prior=None) -> float | None:
    """``log Pr(D | M)`` averaged over start states, or ``None`` on rejection."""
    le = _start_log_evidence(topology, data, prior)
    if np.all(np.isneginf(le)):
        return None
    with np.errstate(divide="ignore"):
        return float(logsumexp(le + np.log(_uniform_start(topology.n_states, start_prior))))


def start_state_posterior_given_theta(theta: TransitionAssignment, data,
                                      start_prior=None) -> np.ndarray | None:
    """``Pr(start | D, theta, M)`` for known transition probabilities."""
    topology = theta.topology
    series = as_series(data, topology.alphabet_size)
    with np.errstate(divide="ignore"):
        logp = np.log(theta.probs)
        loglik = np.full(topology.n_states, -np.inf)
        for s0 in range(topology.n_states):
            counts = trace_path(topology, s0, series)
            if counts is not None:
                c = counts.counts
                loglik[s0] = float((c * np.where(c > 0, logp, 0.0)).sum())
        if np.all(np.isneginf(loglik)):
            return None
        joint = loglik + np.log(_uniform_start(topology.n_states, start_prior))
    return np.exp(joint - logsumexp(joint))


def model_prior(library: MachineLibrary, spec: ModelPriorSpec = ModelPriorSpec()) -> np.ndarray:
    """``Pr(M | library)`` proportional to ``exp(-beta * n_states)``."""
    return np.exp(_log_model_prior(library, spec))


def _log_model_prior(library, spec) -> np.ndarray:
    sizes = np.array([m.n_states for m in library.machines], dtype=float)
    logw = -spec.beta * sizes
    return logw - logsumexp(logw)


@dataclass
class PosteriorTable:
    """Evidence and posterior for every (topology, start state) of a library.

    Arrays are indexed by library position; start-state arrays are padded to
    the largest machine.  Rejecting rows carry ``-inf`` log-evidence and
    posterior exactly 0.
    """

    library: MachineLibrary
    data_length: int
    alpha: float
    beta: float
    accepted: np.ndarray
    log_evidence: np.ndarray
    log_prior: np.ndarray
    posterior: np.ndarray
    start_accepted: np.ndarray
    start_log_evidence: np.ndarray
    start_posterior: np.ndarray
    counts: np.ndarray = field(repr=False)

    @property
    def ids(self) -> list[str]:
        return [m.id for m in self.library.machines]

    @property
    def n_states(self) -> np.ndarray:
        return self.library.packed()[1]

    @property
    def accepting_count(self) -> int:
        return int(self.accepted.sum())

    def order(self) -> np.ndarray:
        """Row indices by posterior descending, ties by id."""
        ids = np.array(self.ids)
        return np.lexsort((ids, -self.posterior))

    def row(self, key) -> dict:
        i = self.library.index_of(key) if isinstance(key, str) else int(key)
        m = self.library.machines[i]
        return {
            "id": m.id,
            "n_states": m.n_states,
            "accepted": bool(self.accepted[i]),
            "log_evidence": float(self.log_evidence[i]),
            "posterior": float(self.posterior[i]),
            "start_posterior": [float(p) for p in self.start_posterior[i, :m.n_states]],
        }

    def edge_counts(self, index: int, start: int) -> EdgeCounts:
        n = self.library.machines[index].n_states
        return EdgeCounts(start, self.counts[index, start, :n, :])


def topology_posterior(library: MachineLibrary, data, prior: DirichletPrior = DirichletPrior(),
                       spec: ModelPriorSpec = ModelPriorSpec(), threads: int = 1) -> PosteriorTable:
    """Scan the library: per-start evidence, start posterior, topology posterior."""
    series = as_series(data, library.alphabet_size)
    tables, sizes = library.packed()
    counts, start_ok = trace_library(tables, sizes, series, threads=threads)
    M, n_max = start_ok.shape
    mask = tables != ABSENT                                   # (M, n, k)
    terms = _log_evidence_terms(counts, mask[:, None, :, :], prior.alpha)
    start_le = np.where(start_ok, terms.sum(axis=-1), -np.inf)

    state_idx = np.arange(n_max)[None, :]
    valid = state_idx < sizes[:, None]
    with np.errstate(divide="ignore"):
        log_start_prior = np.where(valid, -np.log(sizes)[:, None], -np.inf)
        joint = start_le + log_start_prior
    accepted = start_ok.any(axis=1)
    log_ev = np.full(M, -np.inf)
    start_post = np.zeros((M, n_max))
    if accepted.any():
        log_ev[accepted] = logsumexp(joint[accepted], axis=1)
        start_post[accepted] = np.exp(joint[accepted] - log_ev[accepted, None])

    log_prior = _log_model_prior(library, spec)
    post = np.zeros(M)
    if accepted.any():
        lp = log_ev[accepted] + log_prior[accepted]
        post[accepted] = np.exp(lp - logsumexp(lp))
    return PosteriorTable(
        library=library, data_length=int(series.size), alpha=prior.alpha, beta=spec.beta,
        accepted=accepted, log_evidence=log_ev, log_prior=log_prior, posterior=post,
        start_accepted=start_ok, start_log_evidence=start_le, start_posterior=start_post,
        counts=counts,
    )


def map_topology(table: PosteriorTable) -> str:
    """Id of the maximum a posteriori topology; ties go to the least id."""
    if not table.accepted.any():
        raise NoAcceptingTopologyError("no topology accepts the data")
    return table.ids[int(table.order()[0])]


def accepting_count(library: MachineLibrary, data, threads: int = 1) -> int:
    """Number of topologies with at least one start state that accepts ``data``."""
    tables, sizes = library.packed()
    _, ok = trace_library(tables, sizes, as_series(data, library.alphabet_size), threads=threads)
    return int(ok.any(axis=1).sum())
