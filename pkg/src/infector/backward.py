"""Backward exploration: susceptibility sets and their restricted sizes.

The susceptibility set of v collects every vertex with a directed path
to v; its time-t slice keeps paths of length at most t.  On a
materialized graph this is reverse-graph label-setting, which is
law-equivalent to the incremental reveal used for coupling arguments;
the reveal's flag events survive here only as a diagnostic collision
counter.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, OutOfHorizonError
from .graph import EpidemicGraph

__all__ = [
    "SusceptibilitySnapshot",
    "RestrictedSetSize",
    "explore_susceptibility",
    "susceptibility_counts",
    "restricted_susceptibility_size",
    "default_t_star",
]


@dataclass
class SusceptibilitySnapshot:
    """State of a backward exploration of one root up to a time horizon."""

    root: int
    explored: dict  # vertex -> distance to root, root included at 0
    active: set  # (vertex, best-known distance) with distance > horizon
    passive: set  # heads of revealed out-edges, not explored or active
    flagged: bool
    collision_count: int
    horizon: float
    population: object = None


def default_t_star(n: int, alpha: float, kappa: float = 0.5) -> float:
    """Coupling horizon (1 - kappa)/4 * log(n) / alpha."""
    if not 0 < kappa < 1:
        raise DomainError("kappa must lie in (0, 1)")
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    return (1.0 - kappa) / 4.0 * math.log(n) / alpha


def explore_susceptibility(graph: EpidemicGraph, v: int, t_star: float) -> SusceptibilitySnapshot:
    """Reverse label-setting from v, settling vertices with distance <= t_star.

    The collision counter increments whenever a relaxation reaches an
    already-discovered vertex -- the events that would flag the
    incremental-reveal coupling.
    """
    if t_star < 0:
        raise DomainError("t_star must be >= 0")
    r_indptr, r_tails, r_weights = graph.reverse_csr()
    dist = {v: 0.0}
    explored = {}
    collisions = 0
    heap = [(0.0, int(v))]
    while heap:
        d, u = heapq.heappop(heap)
        if u in explored or d > dist.get(u, np.inf):
            continue
        if d > t_star:
            break
        explored[u] = d
        for e in range(r_indptr[u], r_indptr[u + 1]):
            w = int(r_tails[e])
            nd = d + float(r_weights[e])
            if w in dist or w in explored:
                collisions += 1
            if nd < dist.get(w, np.inf) and w not in explored:
                dist[w] = nd
                heapq.heappush(heap, (nd, w))

    active = {(u, d) for u, d in dist.items() if u not in explored}
    passive = set()
    for u in explored:
        lo, hi = graph.indptr[u], graph.indptr[u + 1]
        passive.update(int(h) for h in graph.heads[lo:hi])
    for u, _ in active:
        lo, hi = graph.indptr[u], graph.indptr[u + 1]
        passive.update(int(h) for h in graph.heads[lo:hi])
    passive -= set(explored)
    passive -= {u for u, _ in active}
    return SusceptibilitySnapshot(
        root=int(v),
        explored=explored,
        active=active,
        passive=passive,
        flagged=collisions > 0,
        collision_count=collisions,
        horizon=float(t_star),
        population=graph.population,
    )


def susceptibility_counts(snapshot: SusceptibilitySnapshot, t: float, a: float, j: int) -> int:
    """Count type-j members of the t-slice whose distance exceeds t - a."""
    if t > snapshot.horizon:
        raise OutOfHorizonError(f"t={t} beyond explored horizon {snapshot.horizon}")
    if t < 0 or a < 0:
        raise DomainError("t and a must be >= 0")
    pop = snapshot.population
    j0 = int(j) - 1
    if not 0 <= j0 < pop.k:
        raise DomainError("type index out of range")
    return sum(
        1
        for u, d in snapshot.explored.items()
        if d <= t and d > t - a and pop.type_of(u) == j0
    )


@dataclass(frozen=True)
class RestrictedSetSize:
    y: int


def restricted_susceptibility_size(graph: EpidemicGraph, v_star: int, i: int, j: int) -> RestrictedSetSize:
    """Size of the reverse-reachable set of v_star in the restricted edge set.

    The restricted edge set keeps edges whose tail has type i or whose
    head does not have type j; v_star must have type j.  The count
    includes v_star itself.
    """
    pop = graph.population
    i0, j0 = int(i) - 1, int(j) - 1
    if not (0 <= i0 < pop.k and 0 <= j0 < pop.k):
        raise DomainError("type index out of range")
    if pop.type_of(v_star) != j0:
        raise DomainError(f"v_star={v_star} is not of type {j}")
    r_indptr, r_tails, _ = graph.reverse_csr()
    types = pop.type_array()
    seen = {int(v_star)}
    stack = [int(v_star)]
    while stack:
        w = stack.pop()
        w_is_j = types[w] == j0
        for e in range(r_indptr[w], r_indptr[w + 1]):
            u = int(r_tails[e])
            # edge (u -> w) is in the restricted set iff tail type is i
            # or head type is not j
            if (types[u] == i0 or not w_is_j) and u not in seen:
                seen.add(u)
                stack.append(u)
    return RestrictedSetSize(y=len(seen))
