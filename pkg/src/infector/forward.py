"""Forward epidemic runs and infector attribution.

Infection times are multi-source shortest-path distances from the seed
set on the epidemic graph; the infector of a vertex is its shortest-path
predecessor.  The eager path computes this on a materialized graph; the
lazy path samples contact lists only for vertices that actually become
infected and is distributionally identical.
"""

from __future__ import annotations

import heapq
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng as rngmod
from ._kernels import dijkstra
from .config import ExtremalTwoType, ModelConfig, mean_matrix
from .errors import DomainError, NoDataError
from .graph import EpidemicGraph, build_graph

__all__ = [
    "OutbreakResult",
    "RhoEstimate",
    "run_epidemic",
    "run_epidemic_lazy",
    "attribute_infectors",
    "is_large_outbreak",
    "replicate_rho",
    "replicate_records",
]


@dataclass
class OutbreakResult:
    """Outcome of one epidemic run.

    ``sigma[v]`` is the infection time (inf if never infected),
    ``infector[v]`` the shortest-path predecessor (-1 for seeds and the
    never infected).  ``attribution_counts[i, j]`` counts type-(j+1)
    infecteds whose infector has type i+1.
    """

    population: object
    sigma: np.ndarray
    infector: np.ndarray
    v_init: np.ndarray
    infected_counts: np.ndarray
    attribution_counts: np.ndarray
    large_outbreak: bool = False

    @property
    def total_infected(self) -> int:
        return int(np.isfinite(self.sigma).sum())

    def final_fraction(self) -> float:
        return self.total_infected / self.population.n


@dataclass(frozen=True)
class RhoEstimate:
    """Replicate-averaged attribution fractions with standard errors."""

    mean: np.ndarray
    stderr: np.ndarray
    replicates_used: int
    replicates_total: int


def _summarize(population, sigma, infector, v_init) -> OutbreakResult:
    k = population.k
    types = population.type_array()
    infected = np.isfinite(sigma)
    infected_counts = np.bincount(types[infected], minlength=k)
    has_parent = infector >= 0
    att = np.zeros((k, k), dtype=np.int64)
    if has_parent.any():
        src_t = types[infector[has_parent]]
        dst_t = types[has_parent.nonzero()[0]]
        np.add.at(att, (src_t, dst_t), 1)
    return OutbreakResult(
        population=population,
        sigma=sigma,
        infector=infector,
        v_init=np.asarray(v_init, dtype=np.int64),
        infected_counts=infected_counts,
        attribution_counts=att,
    )


def run_epidemic(graph: EpidemicGraph, v_init) -> OutbreakResult:
    """Exact multi-source shortest-path epidemic on a materialized graph."""
    v_init = np.asarray(sorted(set(int(v) for v in v_init)), dtype=np.int64)
    if len(v_init) == 0:
        raise DomainError("the initially infected set must be nonempty")
    if (v_init < 0).any() or (v_init >= graph.n).any():
        raise DomainError("seed vertex id out of range")
    dist, pred = dijkstra(graph.indptr, graph.heads, graph.weights, v_init)
    return _summarize(graph.population, dist, pred, v_init)


def run_epidemic_lazy(config: ModelConfig, rng: Optional[np.random.Generator] = None) -> OutbreakResult:
    """Event-driven epidemic: contact lists drawn only upon infection.

    Distributionally identical to ``run_epidemic(build_graph(config))``;
    memory is proportional to the number of infected vertices.
    """
    if rng is None:
        rng = rngmod.stream(config.seed, "lazy")
    pop = config.population
    kern = config.kernel
    n, k = pop.n, pop.k
    p = pop.proportions
    rates = kern.pair_rates()
    bounds = pop.boundaries
    counts = pop.counts
    extremal = isinstance(kern, ExtremalTwoType)
    fast_pair = kern.fast_pair if extremal else None

    sigma = np.full(n, np.inf)
    infector = np.full(n, -1, dtype=np.int64)
    v_init = np.asarray(sorted(set(config.initial_infecteds)), dtype=np.int64)
    if len(v_init) == 0:
        raise DomainError("the initially infected set must be nonempty")

    heap = []

    def expose(v: int, t: float) -> None:
        i0 = int(pop.type_of(v))
        lat = kern.latent[i0].sample(rng)
        iota = kern.infectious[i0].sample(rng)
        for j0 in range(k):
            mean_count = p[j0] * rates[i0, j0] * iota
            if mean_count <= 0:
                continue
            n_j = int(counts[j0])
            m = min(int(rng.poisson(mean_count)), n_j)
            if m == 0:
                continue
            if extremal:
                if (i0 + 1, j0 + 1) == fast_pair:
                    ws = rng.random(m) * n**-2.0
                else:
                    ws = n**-1.0 + rng.random(m) * n**-2.0
            else:
                ws = lat + iota * rng.random(m)
            if m == 1:
                hs = [int(rng.integers(bounds[j0], bounds[j0] + n_j))]
            else:
                seen = set()
                hs = []
                while len(hs) < m:
                    cand = int(rng.integers(bounds[j0], bounds[j0] + n_j))
                    if cand not in seen:
                        seen.add(cand)
                        hs.append(cand)
            for w, h in zip(ws, hs):
                if not np.isfinite(sigma[h]):
                    heapq.heappush(heap, (t + float(w), v, h))

    for s in v_init:
        sigma[s] = 0.0
    for s in v_init:
        expose(int(s), 0.0)

    while heap:
        t, u, v = heapq.heappop(heap)
        if np.isfinite(sigma[v]):
            continue
        sigma[v] = t
        infector[v] = u
        expose(v, t)

    return _summarize(pop, sigma, infector, v_init)


def attribute_infectors(result: OutbreakResult) -> np.ndarray:
    """Per-column attribution fractions.

    Entry (i, j) is the fraction of non-seed infected type-(j+1)
    vertices whose infector has type i+1; columns with no non-seed
    infections are NaN.
    """
    k = result.population.k
    att = result.attribution_counts.astype(float)
    denom = att.sum(axis=0)
    out = np.full((k, k), np.nan)
    pos = denom > 0
    out[:, pos] = att[:, pos] / denom[pos]
    return out


def is_large_outbreak(result: OutbreakResult, threshold_fraction: float) -> bool:
    """True iff the total infected count reaches threshold_fraction * n."""
    if not 0 < threshold_fraction < 1:
        raise DomainError("threshold_fraction must lie in (0, 1)")
    return result.total_infected >= threshold_fraction * result.population.n


def _one_replicate(config: ModelConfig, master_seed: int, index: int, threshold: float,
                   method: str) -> dict:
    rng = rngmod.stream(master_seed, "replicate", index)
    if method == "lazy":
        result = run_epidemic_lazy(config, rng)
    elif method == "eager":
        graph = build_graph(config, rng)
        result = run_epidemic(graph, config.v_init())
    else:
        raise DomainError(f"unknown simulation method {method!r}")
    large = is_large_outbreak(result, threshold)
    result.large_outbreak = large
    return {
        "replicate": index,
        "large_outbreak": large,
        "final_fraction": result.final_fraction(),
        "rho": attribute_infectors(result),
    }


def replicate_records(config: ModelConfig, R: int, threshold: float = 0.05,
                      master_seed: Optional[int] = None, method: str = "lazy",
                      threads: int = 1) -> list:
    """Run R independent replicates; returns one record dict per replicate."""
    if R < 1:
        raise DomainError("need at least one replicate")
    if master_seed is None:
        master_seed = config.seed
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(
                pool.map(lambda r: _one_replicate(config, master_seed, r, threshold, method),
                         range(R))
            )
    else:
        records = [_one_replicate(config, master_seed, r, threshold, method) for r in range(R)]
    return records


def replicate_rho(config: ModelConfig, R: int, threshold: float = 0.05,
                  master_seed: Optional[int] = None, method: str = "lazy",
                  threads: int = 1) -> RhoEstimate:
    """Average attribution over large-outbreak replicates.

    Each replicate owns an independent derived RNG stream, so results do
    not depend on worker scheduling.
    """
    records = replicate_records(config, R, threshold, master_seed, method, threads)
    used = [rec["rho"] for rec in records if rec["large_outbreak"]]
    if not used:
        raise NoDataError(f"no large outbreak among {R} replicates")
    stack = np.stack(used)
    mean = np.nanmean(stack, axis=0)
    with np.errstate(invalid="ignore"):
        count = np.sum(~np.isnan(stack), axis=0)
        std = np.nanstd(stack, axis=0, ddof=1) if len(used) > 1 else np.full(mean.shape, np.nan)
    stderr = std / np.sqrt(np.maximum(count, 1))
    return RhoEstimate(mean=mean, stderr=stderr, replicates_used=len(used),
                       replicates_total=R)
