"""Posterior sampling of machines and of the information measures h_mu, C_mu.

Every sample ``i`` draws from its own counter-based stream keyed on
``(seed, i)``, so a sample list is identical for any worker count.
"""

from __future__ import annotations

import csv
import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bayes import NoAcceptingTopologyError, PosteriorTable, map_topology
from .machine import ABSENT, stationary_from_matrix

SAMPLE_COLUMNS = ("index", "topology_id", "start_state", "h_mu", "c_mu")


class Mode(str, enum.Enum):
    FULL = "full"
    MAP = "map"


@dataclass(frozen=True)
class SamplerConfig:
    n_samples: int = 50_000
    seed: int = 0
    mode: Mode = Mode.FULL

    def __post_init__(self):
        if self.n_samples < 0:
            raise ValueError("n_samples must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        object.__setattr__(self, "mode", Mode(self.mode))


@dataclass(frozen=True)
class PosteriorSample:
    index: int
    topology_id: str
    start_state: int
    theta: np.ndarray = field(repr=False)
    pi: np.ndarray = field(repr=False)
    h_mu: float
    c_mu: float


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    ci_low: float
    ci_high: float
    n: int


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent Philox stream for one sample."""
    return np.random.Generator(np.random.Philox(key=(int(index) << 64) | int(seed)))


def dirichlet_sample(alphas, rng: np.random.Generator) -> np.ndarray:
    """Normalized independent Gamma(alpha_j, 1) draws."""
    a = np.asarray(alphas, dtype=float)
    if a.ndim != 1 or a.size == 0 or np.any(a <= 0):
        raise ValueError("Dirichlet parameters must be a nonempty vector of positive reals")
    g = rng.standard_gamma(a)
    total = g.sum()
    if total == 0.0:
        # All draws underflowed (tiny alphas); fall back to a vertex chosen by alpha.
        g = np.zeros_like(a)
        g[rng.choice(a.size, p=a / a.sum())] = 1.0
        total = 1.0
    return g / total


def _entropy_bits(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(max(-(nz * np.log2(nz)).sum(), 0.0)) + 0.0   # no -0.0


def _draw(i: int, seed: int, cum_topology, fixed: int | None, table: PosteriorTable,
          masks, sizes) -> tuple:
    rng = sample_rng(seed, i)
    if fixed is None:
        m = int(np.searchsorted(cum_topology, rng.random() * cum_topology[-1], side="right"))
        m = min(m, len(cum_topology) - 1)
        while table.posterior[m] == 0.0:
            m -= 1
    else:
        m = fixed
    n = int(sizes[m])
    start_p = table.start_posterior[m, :n]
    cum_start = np.cumsum(start_p)
    s0 = int(np.searchsorted(cum_start, rng.random() * cum_start[-1], side="right"))
    s0 = min(s0, n - 1)
    while start_p[s0] == 0.0:
        s0 -= 1
    mask = masks[m, :n]
    counts = table.counts[m, s0, :n]
    theta = mask.astype(float)
    h = 0.0
    for s in range(n):
        edges = np.flatnonzero(mask[s])
        if edges.size >= 2:
            theta[s, edges] = dirichlet_sample(table.alpha + counts[s, edges], rng)
    tmat = np.zeros((n, n))
    tables = table.library.packed()[0]
    for s in range(n):
        for x in np.flatnonzero(mask[s]):
            tmat[s, tables[m, s, x]] += theta[s, x]
    pi = stationary_from_matrix(tmat)
    for s in range(n):
        h += pi[s] * _entropy_bits(theta[s])
    return m, s0, theta, pi, float(h), _entropy_bits(pi)


def _draw_range(args) -> list[tuple]:
    lo, hi, seed, fixed, table = args
    tables, sizes = table.library.packed()
    masks = tables != ABSENT
    cum = np.cumsum(table.posterior)
    return [_draw(i, seed, cum, fixed, table, masks, sizes) for i in range(lo, hi)]


def sample_posterior(table: PosteriorTable, config: SamplerConfig = SamplerConfig(),
                     workers: int = 1) -> list[PosteriorSample]:
    """Draw topology, start state and transition probabilities per sample.

    In FULL mode the topology is drawn from the topology posterior each time;
    in MAP mode it is fixed to the maximum a posteriori topology.  A table
    built from an empty series yields exact draws from the prior hierarchy.
    """
    if not table.accepted.any():
        raise NoAcceptingTopologyError("no topology accepts the data; nothing to sample")
    if config.n_samples == 0:
        return []
    fixed = None
    if config.mode is Mode.MAP:
        fixed = table.library.index_of(map_topology(table))
    n = config.n_samples
    if workers > 1:
        bounds = np.linspace(0, n, workers + 1).astype(int)
        jobs = [(int(lo), int(hi), config.seed, fixed, table)
                for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = [r for chunk in pool.map(_draw_range, jobs) for r in chunk]
    else:
        raw = _draw_range((0, n, config.seed, fixed, table))
    ids = table.ids
    return [PosteriorSample(i, ids[m], s0, theta, pi, h, c)
            for i, (m, s0, theta, pi, h, c) in enumerate(raw)]


def credible_interval(samples, level: float = 0.95) -> tuple[float, float]:
    """Equal-tailed interval from linearly interpolated empirical quantiles."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("credible interval of an empty sample")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(x, [tail, 1.0 - tail], method="linear")
    return float(lo), float(hi)


def summarize(samples, level: float = 0.95) -> SummaryStats:
    x = np.asarray(samples, dtype=float)
    lo, hi = credible_interval(x, level)
    return SummaryStats(float(x.mean()), lo, hi, int(x.size))


@dataclass(frozen=True)
class DensityEstimate:
    """Gaussian KDE on a grid; ``degenerate`` when the samples have no spread."""

    grid: np.ndarray | None
    density: np.ndarray | None
    bandwidth: float | None
    degenerate: bool = False
    value: float | None = None


def silverman_bandwidth(samples) -> float:
    x = np.asarray(samples, dtype=float)
    if x.size < 2 or x.min() == x.max():
        return 0.0
    return 1.06 * float(x.std(ddof=1)) * x.size ** (-0.2)


def gaussian_kde(samples, grid=None, n_grid: int = 512, bandwidth="silverman",
                 chunk: int = 4096) -> DensityEstimate:
    """Mixture of Gaussians centred on the samples, evaluated on ``grid``.

    Parameters
    ----------
    grid : array_like, optional
        Evaluation points.  Default: ``n_grid`` points spanning the sample
        range widened by four bandwidths on each side.
    bandwidth : "silverman" or float
        Silverman's rule is ``1.06 * sd * N**(-1/5)``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("density of an empty sample")
    if bandwidth == "silverman":
        bw = silverman_bandwidth(x)
    else:
        bw = float(bandwidth)
        if not bw > 0:
            raise ValueError("bandwidth must be positive")
    if not bw > 0 or not math.isfinite(bw):
        return DensityEstimate(None, None, None, degenerate=True, value=float(x[0]))
    if grid is None:
        grid = np.linspace(x.min() - 4 * bw, x.max() + 4 * bw, n_grid)
    grid = np.asarray(grid, dtype=float)
    dens = np.zeros(grid.shape)
    norm = 1.0 / (x.size * bw * math.sqrt(2 * math.pi))
    for lo in range(0, x.size, chunk):
        z = (grid[:, None] - x[None, lo:lo + chunk]) / bw
        dens += np.exp(-0.5 * z * z).sum(axis=1)
    return DensityEstimate(grid, dens * norm, bw)


def write_samples_csv(samples: list[PosteriorSample], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_COLUMNS)
        for s in samples:
            w.writerow([s.index, s.topology_id, s.start_state, repr(float(s.h_mu)), repr(float(s.c_mu))])


def read_sample_column(path, column: str) -> np.ndarray:
    aliases = {"hmu": "h_mu", "cmu": "c_mu"}
    column = aliases.get(column, column)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise KeyError(f"column {column!r} not in {path}")
        return np.array([float(row[column]) for row in reader])
