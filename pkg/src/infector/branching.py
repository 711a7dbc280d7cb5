"""Backward multi-type branching process: simulation, Malthusian rate,
martingale-limit estimates, and the Monte Carlo attribution formula.

Particles of type j bear type-i children at ages drawn from the
normalized contact-age law of type i, with Poisson((p_i/p_j) m_ij)
counts; particles never die.  The Malthusian parameter makes the
Laplace-transformed backward mean matrix critical, and e^(-alpha t)
times the population converges to the martingale limit W.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng as rngmod
from .analytic import extinction_probs, r0
from .config import ModelConfig, mean_matrix
from .errors import CapExceededError, DomainError, NoDataError, NumericError

__all__ = [
    "BranchingRun",
    "MalthusianSolution",
    "WEstimate",
    "backward_mean_matrix",
    "laplace_mean_matrix",
    "solve_malthusian",
    "simulate_backward_bp",
    "estimate_W",
    "survival_probability",
    "extinction_frequency",
    "estimate_rho_bp",
]


@dataclass
class BranchingRun:
    """Event log of one backward branching realization.

    Events are sorted by birth time; types are 1-based; ``parents[e]``
    indexes the event list (-1 for the root at time 0).
    """

    root_type: int
    times: np.ndarray
    types: np.ndarray
    parents: np.ndarray
    horizon: float
    capped: bool

    @property
    def size(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class MalthusianSolution:
    alpha: float
    residual: float


@dataclass(frozen=True)
class WEstimate:
    value: float
    root_type: int
    horizon: float


# --------------------------------------------------------------------------
# mean structure
# --------------------------------------------------------------------------

def backward_mean_matrix(config: ModelConfig) -> np.ndarray:
    """mb[j, i] = (p_i / p_j) m[i, j]: mean type-i offspring of a type-j parent."""
    m = mean_matrix(config).entries
    p = config.population.proportions
    return (p[None, :] / p[:, None]) * m.T


def laplace_mean_matrix(config: ModelConfig, x: float) -> np.ndarray:
    """Laplace transform of the backward mean offspring measure at x >= 0.

    Entry (j, i) is (p_i/p_j) * integral of e^(-x t) against the mean
    contact measure of type i toward type j; at x = 0 this is the
    backward mean matrix.  Closed form for the whole duration menu.
    """
    if x < 0:
        raise DomainError("Laplace argument must be >= 0")
    kern = config.kernel
    p = config.population.proportions
    k = config.k
    rates = kern.pair_rates()
    phi = np.empty(k)
    for i0 in range(k):
        lat, iota = kern.latent[i0], kern.infectious[i0]
        if x == 0.0:
            phi[i0] = iota.mean()
        else:
            phi[i0] = lat.laplace(x) * (1.0 - iota.laplace(x)) / x
    out = np.empty((k, k))
    for j0 in range(k):
        for i0 in range(k):
            out[j0, i0] = p[i0] * rates[i0, j0] * phi[i0]
    return out


def solve_malthusian(config: ModelConfig) -> MalthusianSolution:
    """Rate alpha > 0 at which the Laplace mean matrix has unit Perron root.

    The spectral radius is strictly decreasing in x with value R0 > 1 at
    x = 0, so bisection on an expanding bracket always succeeds.
    """
    basic = r0(mean_matrix(config).entries)
    if basic <= 1.0:
        raise DomainError(f"Malthusian parameter requires R0 > 1, got R0 = {basic}")

    def g(x):
        return r0(laplace_mean_matrix(config, x), require_irreducible=False) - 1.0

    lo, hi = 0.0, 1.0
    while g(hi) > 0:
        lo, hi = hi, hi * 2.0
        if hi > 1e12:
            raise NumericError("failed to bracket the Malthusian parameter")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    alpha = 0.5 * (lo + hi)
    residual = abs(g(alpha))
    if residual >= 1e-10:
        raise NumericError(f"Malthusian residual {residual:.3g} too large")
    return MalthusianSolution(alpha=float(alpha), residual=float(residual))


# --------------------------------------------------------------------------
# simulation
# --------------------------------------------------------------------------

def _child_ages(rng, kern, child_type0: int, size: int) -> np.ndarray:
    """Ages from the normalized mean contact measure of the child's type.

    Latent period plus a uniform position in a length-biased infectious
    period; exact for constants, exponentials and gammas.
    """
    lat = kern.latent[child_type0].sample(rng, size=size)
    iota = kern.infectious[child_type0].sample_size_biased(rng, size=size)
    return lat + iota * rng.random(size)


def _simulate_batch(config: ModelConfig, root_types0: np.ndarray, horizon: float,
                    cap: int, rng: np.random.Generator):
    """Simulate independent backward runs generation by generation.

    Returns (sizes, last_birth, capped) per run.  Capped runs stop
    growing once their size exceeds the cap; their counts are lower
    bounds and must not be used for W estimates.
    """
    kern = config.kernel
    k = config.k
    mb = backward_mean_matrix(config)
    n_runs = len(root_types0)
    sizes = np.ones(n_runs, dtype=np.int64)
    last_birth = np.zeros(n_runs)
    capped = np.zeros(n_runs, dtype=bool)

    run = np.arange(n_runs, dtype=np.int64)
    times = np.zeros(n_runs)
    types0 = np.asarray(root_types0, dtype=np.int64)

    while len(run) > 0:
        next_run, next_times, next_types = [], [], []
        for i0 in range(k):
            lam = mb[types0, i0]
            counts = rng.poisson(lam)
            total = int(counts.sum())
            if total == 0:
                continue
            child_run = np.repeat(run, counts)
            birth = np.repeat(times, counts) + _child_ages(rng, kern, i0, total)
            keep = birth <= horizon
            if not keep.any():
                continue
            next_run.append(child_run[keep])
            next_times.append(birth[keep])
            next_types.append(np.full(int(keep.sum()), i0, dtype=np.int64))
        if not next_run:
            break
        run = np.concatenate(next_run)
        times = np.concatenate(next_times)
        types0 = np.concatenate(next_types)
        np.add.at(sizes, run, 1)
        np.maximum.at(last_birth, run, times)
        over = sizes > cap
        if over.any():
            capped |= over
            alive = ~capped[run]
            run, times, types0 = run[alive], times[alive], types0[alive]
    return sizes, last_birth, capped


def simulate_backward_bp(config: ModelConfig, root_type: int, horizon: float,
                         cap: int = 1_000_000,
                         rng: Optional[np.random.Generator] = None) -> BranchingRun:
    """Full event log of one backward run started from a type root_type particle."""
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    if cap < 1:
        raise DomainError("cap must be >= 1")
    if rng is None:
        rng = rngmod.stream(config.seed, "bp")
    kern = config.kernel
    k = config.k
    mb = backward_mean_matrix(config)
    j0 = int(root_type) - 1
    if not 0 <= j0 < k:
        raise DomainError("root_type out of range")

    times = [0.0]
    types0 = [j0]
    parents = [-1]
    frontier = [0]
    capped = False
    while frontier and not capped:
        new_frontier = []
        for idx in frontier:
            t_parent, jp = times[idx], types0[idx]
            for i0 in range(k):
                count = rng.poisson(mb[jp, i0])
                if count == 0:
                    continue
                births = t_parent + _child_ages(rng, kern, i0, count)
                for b in births:
                    if b <= horizon:
                        times.append(float(b))
                        types0.append(i0)
                        parents.append(idx)
                        new_frontier.append(len(times) - 1)
            if len(times) > cap:
                capped = True
                break
        frontier = new_frontier

    times_a = np.asarray(times)
    order = np.argsort(times_a, kind="stable")
    remap = np.empty(len(order), dtype=np.int64)
    remap[order] = np.arange(len(order))
    parents_a = np.asarray(parents, dtype=np.int64)
    sorted_parents = np.where(parents_a[order] >= 0, remap[parents_a[order]], -1)
    return BranchingRun(
        root_type=int(root_type),
        times=times_a[order],
        types=np.asarray(types0, dtype=np.int64)[order] + 1,
        parents=sorted_parents,
        horizon=float(horizon),
        capped=capped,
    )


def estimate_W(run: BranchingRun, alpha: float) -> WEstimate:
    """Martingale-limit estimate e^(-alpha T) * population(T).

    Reported as 0 when no birth occurred in [T/2, T] -- the extinction
    surrogate; exactness improves with the horizon.
    """
    if run.capped:
        raise CapExceededError("capped run: raise the cap or shrink the horizon")
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    last = float(run.times[-1]) if run.size else 0.0
    if run.size <= 1 or last < run.horizon / 2.0:
        value = 0.0
    else:
        value = float(np.exp(-alpha * run.horizon) * run.size)
    return WEstimate(value=value, root_type=run.root_type, horizon=run.horizon)


def survival_probability(config: ModelConfig, root_type: int) -> float:
    """1 - extinction probability of the backward process from a typed root."""
    mb = backward_mean_matrix(config)
    if r0(mb, require_irreducible=False) <= 1.0:
        raise DomainError("survival probability requires R0 > 1")
    j0 = int(root_type) - 1
    if not 0 <= j0 < config.k:
        raise DomainError("root_type out of range")
    q = extinction_probs(mb)
    return float(1.0 - q[j0])


def extinction_frequency(config: ModelConfig, root_type: int, R: int, horizon: float,
                         cap: int = 10_000,
                         rng: Optional[np.random.Generator] = None) -> float:
    """Monte Carlo extinction frequency under the no-late-birth surrogate.

    Runs that hit the cap have certainly not gone extinct and count as
    surviving without being grown further.
    """
    if rng is None:
        rng = rngmod.stream(config.seed, "bp-extinction")
    j0 = int(root_type) - 1
    sizes, last_birth, capped = _simulate_batch(
        config, np.full(R, j0, dtype=np.int64), horizon, cap, rng
    )
    extinct = (~capped) & ((sizes <= 1) | (last_birth < horizon / 2.0))
    return float(extinct.mean())


# --------------------------------------------------------------------------
# attribution by Monte Carlo
# --------------------------------------------------------------------------

def estimate_rho_bp(config: ModelConfig, j: int, R: int, horizon: Optional[float] = None,
                    rng: Optional[np.random.Generator] = None, cap: int = 1_000_000,
                    batch_size: int = 4_000, details: bool = False):
    """Monte Carlo attribution fractions toward type-j vertices.

    Per replicate, the first backward generation has Poisson counts per
    type with ages from the normalized contact measure; each member
    carries an independent martingale-limit estimate, and the replicate
    contributes the exponentially discounted share of each type on the
    event that any subtree survives.  The mean is normalized by the
    survival probability of a type-j root.

    Returns (rho, stderr): length-K arrays.  With ``details=True`` the
    per-replicate share matrix (R x K, before survival normalization) is
    appended to the return tuple.
    """
    if R < 1:
        raise DomainError("need at least one replicate")
    k = config.k
    j0 = int(j) - 1
    if not 0 <= j0 < k:
        raise DomainError("target type out of range")
    alpha = solve_malthusian(config).alpha
    if horizon is None:
        horizon = 12.0 / alpha
    if rng is None:
        rng = rngmod.stream(config.seed, "bp-estimate", j)
    mb = backward_mean_matrix(config)
    kern = config.kernel
    surv = survival_probability(config, j)

    # first generation: counts per replicate and type
    counts = rng.poisson(mb[j0][None, :], size=(R, k))
    totals = counts.sum(axis=1)
    rep_of = np.repeat(np.arange(R), totals)
    type_of = np.concatenate(
        [np.repeat(np.arange(k), counts[r]) for r in range(R)]
    ) if totals.sum() else np.empty(0, dtype=np.int64)

    m_draws = len(rep_of)
    w = np.zeros(m_draws)
    tau = np.zeros(m_draws)
    for i0 in range(k):
        sel = type_of == i0
        n_sel = int(sel.sum())
        if n_sel == 0:
            continue
        tau[sel] = _child_ages(rng, kern, i0, n_sel)

    # martingale estimates in batches to bound memory
    for start in range(0, m_draws, batch_size):
        idx = slice(start, min(start + batch_size, m_draws))
        roots = type_of[idx]
        sizes, last_birth, capped = _simulate_batch(config, roots, horizon, cap, rng)
        if capped.any():
            raise CapExceededError(
                "branching population cap hit while estimating W; raise cap"
            )
        w_batch = np.exp(-alpha * horizon) * sizes
        w_batch[(sizes <= 1) | (last_birth < horizon / 2.0)] = 0.0
        w[idx] = w_batch

    disc = np.exp(-alpha * tau) * w
    num = np.zeros((R, k))
    np.add.at(num, (rep_of, type_of), disc)
    w_sum = np.zeros(R)
    np.add.at(w_sum, rep_of, w)
    denom = num.sum(axis=1)
    alive = w_sum > 0
    if not alive.any():
        raise NoDataError("all replicates had zero surviving first-generation mass")
    contrib = np.zeros((R, k))
    contrib[alive] = num[alive] / denom[alive][:, None]
    rho = contrib.mean(axis=0) / surv
    stderr = contrib.std(axis=0, ddof=1) / np.sqrt(R) / surv
    if details:
        return rho, stderr, contrib
    return rho, stderr
