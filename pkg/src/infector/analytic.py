"""Closed-form and fixed-point layer.

Everything here is a pure function of scalars or small matrices:
reproduction numbers, extinction/final-size fixed points, Borel
distribution identities, the two-type attribution bounds, and the exact
binomial/Poisson total-variation distance used by the coupling checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .errors import DomainError, NumericError

__all__ = [
    "FixedPointResult",
    "AnalyticReport",
    "r0",
    "fixed_point_q",
    "fixed_point_qtilde",
    "extinction_probs",
    "extinction_probs_2type",
    "borel_pmf",
    "borel_mean_inverse",
    "borel_conditional_pmf",
    "rho21_min",
    "theorem2_bounds",
    "analytic_report",
    "tv_binomial_poisson",
]

_RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class FixedPointResult:
    value: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class AnalyticReport:
    """All scalar outputs of the fixed-point layer for a two-type marked model."""

    p1: float
    m1_tilde: float
    m2_tilde: float
    r0: float
    q: float
    q_tilde_1: float
    q_tilde_2: float
    q1: float
    q2: float
    rho1_minus: float
    rho1_plus: float

    def rows(self):
        return [
            ("r0", self.r0),
            ("q", self.q),
            ("q_tilde_1", self.q_tilde_1),
            ("q_tilde_2", self.q_tilde_2),
            ("q1", self.q1),
            ("q2", self.q2),
            ("rho1_minus", self.rho1_minus),
            ("rho1_plus", self.rho1_plus),
        ]


# --------------------------------------------------------------------------
# spectral radius
# --------------------------------------------------------------------------

def r0(entries, require_irreducible: bool = True) -> float:
    """Perron root of a nonnegative matrix via power iteration.

    A unit shift makes the iteration matrix primitive so the iteration
    converges even for periodic positivity patterns.
    """
    from .config import MeanMatrix  # avoid import cycle at module load

    m = entries.entries if isinstance(entries, MeanMatrix) else np.asarray(entries, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("mean matrix must be square")
    if (m < 0).any() or not np.isfinite(m).all():
        raise DomainError("mean matrix must be nonnegative and finite")
    if require_irreducible and not MeanMatrix(m).is_irreducible():
        raise DomainError("mean matrix is reducible")
    k = m.shape[0]
    if k == 1:
        return float(m[0, 0])
    shifted = m + np.eye(k)
    v = np.ones(k) / np.sqrt(k)
    lam = 0.0
    for _ in range(100_000):
        w = shifted @ v
        lam_new = float(np.linalg.norm(w))
        v = w / lam_new
        if abs(lam_new - lam) <= 1e-14 * max(lam_new, 1.0):
            # one Rayleigh-quotient polish
            lam_new = float(v @ (shifted @ v))
            return lam_new - 1.0
        lam = lam_new
    raise NumericError("power iteration did not converge")


# --------------------------------------------------------------------------
# scalar fixed points
# --------------------------------------------------------------------------

def _bisect(f, lo: float, hi: float) -> tuple:
    """Bisection to machine precision; f(lo) and f(hi) must differ in sign."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo, 0
    if fhi == 0.0:
        return hi, 0
    if np.sign(flo) == np.sign(fhi):
        raise NumericError("bisection bracket does not straddle a root")
    it = 0
    while True:
        it += 1
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi or it > 200:
            return mid, it
        fmid = f(mid)
        if fmid == 0.0:
            return mid, it
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid


def fixed_point_q(r0_value: float) -> FixedPointResult:
    """Unique solution in (0,1) of x = exp(-(1-x) r0), for r0 > 1.

    ``1 - q`` is the final fraction infected given a large outbreak.
    """
    if not r0_value > 1.0:
        raise DomainError(f"fixed_point_q requires r0 > 1, got {r0_value}")
    f = lambda x: x - np.exp(-(1.0 - x) * r0_value)
    root, it = _bisect(f, 1e-300, 1.0 - 1e-15)
    residual = abs(f(root))
    if residual >= _RESIDUAL_TOL:
        raise NumericError(f"fixed point residual {residual:.3g} too large")
    return FixedPointResult(float(root), float(residual), it)


def fixed_point_qtilde(m: float) -> FixedPointResult:
    """Smallest positive solution in (0,1] of x = exp(-m (1-x)).

    Returns 1 exactly when m <= 1 (sub- or exactly critical restriction).
    """
    if m < 0:
        raise DomainError("offspring mean must be >= 0")
    if m <= 1.0:
        return FixedPointResult(1.0, 0.0, 0)
    res = fixed_point_q(m)
    return res


# --------------------------------------------------------------------------
# multi-type extinction
# --------------------------------------------------------------------------

def extinction_probs(mb, max_iter: int = 100_000) -> np.ndarray:
    """Smallest fixed point of q = exp(-Mb (1 - q)) for Poisson offspring.

    ``mb[j, i]`` is the expected number of type-(i+1) children of a
    type-(j+1) parent.  Iteration from the zero vector increases
    monotonically to the extinction-probability vector.
    """
    mb = np.asarray(mb, dtype=float)
    if r0(mb, require_irreducible=False) <= 1.0:
        raise DomainError("extinction probabilities require a supercritical mean matrix")
    k = mb.shape[0]
    q = np.zeros(k)
    for _ in range(max_iter):
        q_new = np.exp(-mb @ (1.0 - q))
        if np.max(np.abs(q_new - q)) < 1e-10:
            q = q_new
            break
        q = q_new
    # Newton polish: F(q) = q - exp(-Mb (1-q)), J = I - diag(exp(..)) Mb
    for _ in range(100):
        e = np.exp(-mb @ (1.0 - q))
        res = q - e
        if np.max(np.abs(res)) < 1e-15:
            break
        jac = np.eye(k) - e[:, None] * mb
        q = q - np.linalg.solve(jac, res)
    residual = np.max(np.abs(q - np.exp(-mb @ (1.0 - q))))
    if residual < _RESIDUAL_TOL:
        return np.clip(q, 0.0, 1.0)
    raise NumericError(f"extinction fixed point stalled at residual {residual:.3g}")


def extinction_probs_2type(mb) -> tuple:
    """Extinction probabilities (q1, q2) of a two-type Poisson-offspring process."""
    mb = np.asarray(mb, dtype=float)
    if mb.shape != (2, 2):
        raise DomainError("expected a 2 x 2 backward mean matrix")
    q = extinction_probs(mb)
    return float(q[0]), float(q[1])


# --------------------------------------------------------------------------
# Borel distribution
# --------------------------------------------------------------------------

def borel_log_pmf(m: float, ell) -> np.ndarray:
    ell = np.asarray(ell, dtype=np.int64)
    if (ell <= 0).any():
        raise DomainError("Borel support starts at 1")
    lf = ell.astype(float)
    with np.errstate(divide="ignore"):
        lead = np.where(lf > 1, (lf - 1.0) * np.log(np.maximum(m * lf, 1e-300)), 0.0)
    return lead - m * lf - gammaln(lf + 1.0)


def borel_pmf(m: float, ell, allow_defective: bool = False):
    """P(Y = ell) = (m ell)^(ell-1) exp(-m ell) / ell!, computed in log space.

    For m > 1 the law is defective (total mass < 1); this requires
    ``allow_defective=True``.
    """
    if m < 0:
        raise DomainError("Borel parameter must be >= 0")
    if m > 1 and not allow_defective:
        raise DomainError("Borel pmf is defective for m > 1; pass allow_defective=True")
    scalar = np.isscalar(ell)
    out = np.exp(borel_log_pmf(m, ell))
    return float(out) if scalar else out


def borel_mean_inverse(m: float) -> float:
    """E[1/Y] = 1 - m/2 for a Borel(m) variable with m <= 1."""
    if not 0 <= m <= 1:
        raise DomainError("E[1/Y] closed form requires 0 <= m <= 1")
    return 1.0 - m / 2.0


def borel_conditional_pmf(m11b: float, q1: float, ell):
    """Size of the type-1-restricted exploration given overall survival.

    Implements ``[qt1 Borel(m qt1)(l) - q1 Borel(m q1)(l)] / (qt1 - q1)``
    with qt1 the smallest fixed point of x = exp(-m (1 - x)).  For
    m <= 1 (qt1 = 1) this is exactly the combination
    ``[(m l)^(l-1) e^(-m l) - q1 (m q1 l)^(l-1) e^(-m q1 l)] / (l! (1 - q1))``;
    for m > 1 the restriction to the almost-finite branch keeps the law
    proper.  Requires the implied no-type-1-children survival factor
    q = q1 exp(m (1 - q1)) to lie in (0, 1] and q1 < qt1.
    """
    if not 0 < q1 < 1:
        raise DomainError("q1 must lie in (0, 1)")
    q = q1 * np.exp(m11b * (1.0 - q1))
    if q > 1.0 + 1e-12:
        raise DomainError(f"inconsistent (m, q1): implied q = {q:.6g} > 1")
    qt1 = fixed_point_qtilde(m11b).value
    if q1 >= qt1 - 1e-15:
        raise DomainError("require q1 < q_tilde_1")
    a = borel_pmf(m11b * qt1, ell)
    b = borel_pmf(m11b * q1, ell)
    return (qt1 * a - q1 * b) / (qt1 - q1)


# --------------------------------------------------------------------------
# attribution bounds
# --------------------------------------------------------------------------

def rho21_min(m11b: float, q1: float, q_tilde_1: float) -> float:
    """Lower bound on the cross-type attribution fraction.

    ``(1 - m11b (qt1 + q1) / 2) * (qt1 - q1) / (1 - q1)``; reduces to
    ``1 - (1 + q1) m11b / 2`` when the restricted process is subcritical
    (qt1 = 1).
    """
    if not (0 < q1 < 1):
        raise DomainError("q1 must lie in (0, 1)")
    if not (q1 <= q_tilde_1 <= 1):
        raise DomainError("require q1 <= q_tilde_1 <= 1")
    if m11b * q_tilde_1 > 1 + 1e-12:
        raise DomainError("require m11b * q_tilde_1 <= 1")
    value = (1.0 - m11b * (q_tilde_1 + q1) / 2.0) * (q_tilde_1 - q1) / (1.0 - q1)
    return float(min(max(value, 0.0), 1.0))


def theorem2_bounds(p1: float, m1_tilde: float, m2_tilde: float, as_printed: bool = False):
    """Bounds (rho1_minus, rho1_plus) on the type-1 attribution fraction.

    Default is the derivation-consistent form
    ``rho1+ = 1 - (1 - p1 m1 (qt1 + q) / 2) (qt1 - q) / (1 - q)``;
    ``as_printed=True`` drops the leading ``1 -`` on both bounds for
    comparison with the alternative statement.
    """
    if not (0 < p1 < 1):
        raise DomainError("p1 must lie in (0, 1)")
    if m1_tilde < 0 or m2_tilde < 0:
        raise DomainError("type reproduction numbers must be >= 0")
    p2 = 1.0 - p1
    r0_value = p1 * m1_tilde + p2 * m2_tilde
    if r0_value <= 1.0:
        raise DomainError(f"bounds require R0 > 1, got {r0_value}")
    q = fixed_point_q(r0_value).value
    qt1 = fixed_point_qtilde(p1 * m1_tilde).value
    qt2 = fixed_point_qtilde(p2 * m2_tilde).value

    def plus(p, mt, qt):
        inner = (1.0 - p * mt * (qt + q) / 2.0) * (qt - q) / (1.0 - q)
        return inner if as_printed else 1.0 - inner

    rho1_plus = plus(p1, m1_tilde, qt1)
    rho2_plus = plus(p2, m2_tilde, qt2)
    rho1_minus = 1.0 - rho2_plus
    rho1_minus = float(min(max(rho1_minus, 0.0), 1.0))
    rho1_plus = float(min(max(rho1_plus, 0.0), 1.0))
    return rho1_minus, rho1_plus


def analytic_report(p1: float, m1_tilde: float, m2_tilde: float) -> AnalyticReport:
    """Evaluate the whole fixed-point layer for a two-type marked model."""
    p2 = 1.0 - p1
    r0_value = p1 * m1_tilde + p2 * m2_tilde
    if r0_value <= 1.0:
        raise DomainError(f"analytic report requires R0 > 1, got {r0_value}")
    q = fixed_point_q(r0_value).value
    qt1 = fixed_point_qtilde(p1 * m1_tilde).value
    qt2 = fixed_point_qtilde(p2 * m2_tilde).value
    # backward mean matrix of the marked model: child-type-i mean is p_i m_i
    # regardless of the parent's type
    mb = np.array([[p1 * m1_tilde, p2 * m2_tilde], [p1 * m1_tilde, p2 * m2_tilde]])
    q1, q2 = extinction_probs_2type(mb)
    lo, hi = theorem2_bounds(p1, m1_tilde, m2_tilde)
    return AnalyticReport(
        p1=p1,
        m1_tilde=m1_tilde,
        m2_tilde=m2_tilde,
        r0=r0_value,
        q=q,
        q_tilde_1=qt1,
        q_tilde_2=qt2,
        q1=q1,
        q2=q2,
        rho1_minus=lo,
        rho1_plus=hi,
    )


# --------------------------------------------------------------------------
# total variation
# --------------------------------------------------------------------------

def tv_binomial_poisson(n_trials: int, p: float, lam: float) -> float:
    """Exact total variation distance between Binomial(n, p) and Poisson(lam).

    The support sum is truncated where both tails are below 1e-15, which
    keeps the truncation error under 1e-14.
    """
    if n_trials < 1:
        raise DomainError("n_trials must be >= 1")
    if not 0 <= p <= 1:
        raise DomainError("p must lie in [0, 1]")
    if lam < 0:
        raise DomainError("lam must be >= 0")
    mean = max(n_trials * p, lam, 1.0)
    hi = int(mean + 40.0 * np.sqrt(mean) + 40.0)
    k = np.arange(0, hi + 1)
    pb = stats.binom.pmf(k, n_trials, p)
    pp = stats.poisson.pmf(k, lam)
    tv = 0.5 * np.abs(pb - pp).sum()
    # account for any mass beyond the truncation point
    tail = 0.5 * abs(stats.binom.sf(hi, n_trials, p) - stats.poisson.sf(hi, lam))
    return float(tv + tail)
