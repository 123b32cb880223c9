"""Closed-form acquisition performance: cell and global probabilities.

Conventions
-----------
Decision metrics are in normalized units where a cell's noise has unit
total variance (per-component variance 1/2).  A noise-only metric is then
Exp(1), so the cell false-alarm probability at threshold beta is
exp(-beta); a signal cell with non-centrality L satisfies 2|X|^2 ~
chi^2_2(L), so its detection probability is Q1(sqrt(L), sqrt(2 beta)).

The search region is K Doppler bins by N code phases.  A serial search
visits cells in a fixed order and stops at the first metric above beta.
Global probabilities describe where that first crossing lands: a detection
is a stop at the correct code phase within M bins of the correct Doppler
bin; any other stop is a false stop, and at signal-free thresholds the
probability that the search stops at all is the global false alarm.

A bin at offset l from the correct one sees a residual Doppler uniform on
[(2l-1) W/2, (2l+1) W/2] and a per-realization non-centrality
L_max sinc^2(df T_per).  Global detection formulas take either the
per-offset expected L (fast, slightly biased where sinc^2 curves strongly
across a bin) or the exact marginalization over the residual Doppler by
quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable

import numpy as np

from .numerics import (
    DEFAULT_TOL,
    ConvergenceError,
    ToleranceConfig,
    _marcum_q1_many,
    as_probability,
    marcum_q1,
    one_minus_pow_complement,
    one_minus_pow_ratio,
    sinc,
    sine_integral,
)

__all__ = [
    "SearchOrder",
    "SignalParams",
    "DopplerGrid",
    "NonCentralityProfile",
    "SearchPolicy",
    "RocPoint",
    "RocCurve",
    "l_max_param",
    "expected_noncentrality",
    "cell_pfa",
    "cell_pdet",
    "cell_pdet_exact",
    "global_pfa",
    "global_pdet_naive",
    "global_pdet_code_first",
    "global_pdet_doppler_first",
    "global_pdet_approx",
    "global_pdet_code_first_exact",
    "default_beta_grid",
    "roc_curve",
]


class SearchOrder(Enum):
    """Serial-search visiting order over the K x N cell grid."""

    CODE_PHASE_FIRST = "code-first"    # all code phases of a bin, then next bin
    DOPPLER_FIRST = "doppler-first"    # all bins at a code phase, then next phase


@dataclass(frozen=True)
class SignalParams:
    """Carrier-to-noise density (dB-Hz) and coherent integration period (s)."""

    cn0_dbhz: float
    t_per: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.cn0_dbhz):
            raise ValueError("cn0_dbhz must be finite")
        if not (math.isfinite(self.t_per) and self.t_per > 0.0):
            raise ValueError("t_per must be positive")


def l_max_param(params: SignalParams) -> float:
    """Peak non-centrality 2 T_per (C/N0 linear): metric SNR of a perfectly
    aligned cell."""
    return 2.0 * params.t_per * 10.0 ** (params.cn0_dbhz / 10.0)


@dataclass(frozen=True)
class DopplerGrid:
    """K Doppler bins of width W covering +/- f_dmax."""

    bin_width_hz: float
    f_dmax_hz: float
    t_per: float

    def __post_init__(self) -> None:
        for name in ("bin_width_hz", "f_dmax_hz", "t_per"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be positive")

    @property
    def num_bins(self) -> int:
        q = 2.0 * self.f_dmax_hz / self.bin_width_hz
        # the 1e-9 guard keeps an exactly-integer quotient from ceiling up
        return max(int(math.ceil(q - 1e-9)), 1)

    @property
    def relative_width(self) -> float:
        return self.bin_width_hz * self.t_per


@dataclass(frozen=True)
class NonCentralityProfile:
    """Expected non-centrality per Doppler-bin offset, symmetric in +/-l.

    values[l] is E[L] for bins at offset l from the correct one; offsets
    beyond the truncation carry no signal energy (L = 0).
    """

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) == 0:
            raise ValueError("profile needs at least the offset-0 value")
        if any(not (math.isfinite(v) and v >= 0.0) for v in self.values):
            raise ValueError("non-centralities must be finite and >= 0")

    @property
    def l_max(self) -> int:
        return len(self.values) - 1

    def at_offset(self, offset: int) -> float:
        s = abs(int(offset))
        return self.values[s] if s <= self.l_max else 0.0

    @classmethod
    def expected(cls, params: SignalParams, grid: DopplerGrid,
                 l_max: int = 2) -> "NonCentralityProfile":
        return cls(tuple(expected_noncentrality(params, grid, l)
                         for l in range(l_max + 1)))


@dataclass(frozen=True)
class SearchPolicy:
    """Search order, acceptance half-width M, and optional threshold beta."""

    order: SearchOrder
    accept_half_width: int = 0
    threshold: float | None = None

    def __post_init__(self) -> None:
        if int(self.accept_half_width) != self.accept_half_width or self.accept_half_width < 0:
            raise ValueError("accept_half_width must be a non-negative integer")
        if self.threshold is not None:
            if not (math.isfinite(self.threshold) and self.threshold >= 0.0):
                raise ValueError("threshold must be finite and >= 0")

    def require_threshold(self) -> float:
        if self.threshold is None:
            raise ValueError("this operation needs policy.threshold set")
        return float(self.threshold)


# --- expected non-centrality ---------------------------------------------------

def _sinc_sq_integral(x: float, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Antiderivative of sinc^2 vanishing at 0:
    (1/pi) (Si(2 pi x) - sin^2(pi x)/(pi x)); odd in x."""
    if x == 0.0:
        return 0.0
    s = math.sin(math.pi * x)
    return (sine_integral(2.0 * math.pi * x, tol) - s * s / (math.pi * x)) / math.pi


def expected_noncentrality(params: SignalParams, grid: DopplerGrid, l: int,
                           tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Mean non-centrality of a bin at offset l >= 0 from the correct bin.

    Averages L_max sinc^2(df T_per) over the residual Doppler, uniform on
    [(2l-1) W/2, (2l+1) W/2]; for l = 0 the interval is symmetric about 0.
    """
    if int(l) != l or l < 0:
        raise ValueError("offset l must be a non-negative integer")
    wt = grid.relative_width
    x_lo = (2 * l - 1) * wt / 2.0
    x_hi = (2 * l + 1) * wt / 2.0
    lm = l_max_param(params)
    return lm * (_sinc_sq_integral(x_hi, tol) - _sinc_sq_integral(x_lo, tol)) / wt


# --- cell probabilities --------------------------------------------------------

def cell_pfa(beta: float) -> float:
    """Noise-only cell crossing probability exp(-beta)."""
    if not (math.isfinite(beta) and beta >= 0.0):
        raise ValueError("beta must be finite and >= 0")
    return math.exp(-beta)


def cell_pdet(l_param: float, beta: float,
              tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Signal cell crossing probability Q1(sqrt(L), sqrt(2 beta))."""
    if not (math.isfinite(l_param) and l_param >= 0.0):
        raise ValueError("l_param must be finite and >= 0")
    if l_param == 0.0:
        # keep the L = 0 reduction exact to the bit, not just to an ulp
        return cell_pfa(beta)
    if not (math.isfinite(beta) and beta >= 0.0):
        raise ValueError("beta must be finite and >= 0")
    return marcum_q1(math.sqrt(l_param), math.sqrt(2.0 * beta), tol)


@lru_cache(maxsize=64)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _integrate_mean(f, a: float, b: float, tol: ToleranceConfig) -> float:
    """Mean of f over [a, b] by Gauss-Legendre with order doubling.

    f maps an ndarray of abscissas to an ndarray of values.  Doubles the
    node count until two consecutive orders agree to tolerance.
    """
    if not b > a:
        raise ValueError("integration interval is empty")
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    prev = None
    order = tol.quadrature_points
    for _ in range(5):
        x, w = _leggauss(order)
        val = float(np.dot(w, f(mid + half * x))) * 0.5
        if prev is not None and abs(val - prev) <= max(tol.abs_tol, tol.rel_tol * abs(val)):
            return val
        prev = val
        order *= 2
    raise ConvergenceError(f"quadrature did not settle on [{a}, {b}]")


def cell_pdet_exact(params: SignalParams, grid: DopplerGrid, l: int, beta: float,
                    tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Detection probability of an offset-l bin with the residual Doppler
    marginalized exactly by quadrature (reference for the expected-L form)."""
    if int(l) != l or l < 0:
        raise ValueError("offset l must be a non-negative integer")
    if not (math.isfinite(beta) and beta >= 0.0):
        raise ValueError("beta must be finite and >= 0")
    wt = grid.relative_width
    lm = l_max_param(params)

    def f(xs: np.ndarray) -> np.ndarray:
        return _marcum_q1_many(lm * sinc(xs) ** 2, beta, tol)

    x_lo = (2 * l - 1) * wt / 2.0
    x_hi = (2 * l + 1) * wt / 2.0
    return as_probability(_integrate_mean(f, x_lo, x_hi, tol))


# --- global probabilities ------------------------------------------------------

def global_pfa(pfa_cell: float, n: int, k: int) -> float:
    """Probability that a signal-free search of N*K cells stops anywhere."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    return one_minus_pow_complement(pfa_cell, n * k)


def global_pdet_naive(l_correct: float, beta: float, n: int, k: int,
                      tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Single-signal-cell model: the search detects iff the first crossing
    is the one correct cell, all K*N cell positions equally likely."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    pfa = cell_pfa(beta)
    pdet = cell_pdet(l_correct, beta, tol)
    nk = n * k
    return as_probability(one_minus_pow_ratio(pfa, nk) / nk * pdet)


def _memo_pdet(compute: Callable[[int], float]) -> Callable[[int], float]:
    cache: dict[int, float] = {}

    def at(s: int) -> float:
        if s not in cache:
            cache[s] = compute(s)
        return cache[s]

    return at


def _profile_pdet_fn(profile: NonCentralityProfile, beta: float,
                     tol: ToleranceConfig) -> Callable[[int], float]:
    return _memo_pdet(lambda s: cell_pdet(profile.at_offset(s), beta, tol))


def _accept_sum(pdet_at: Callable[[int], float], bin_noise_factor: float,
                k: int, m: int) -> float:
    """Sum over accepted stop offsets q of P_det(L_q) times the probability
    that no earlier-searched bin fired.

    A stop in the bin at offset q with n whole bins searched before it
    contributes the product over those bins of (miss at their signal cell)
    times bin_noise_factor (their noise cells staying quiet; 1 when the
    visiting order has no noise cells before the signal column).  n runs over
    the positions the correct bin can take: max(0, q) .. min(K, K+q) - 1.
    """
    total = 0.0
    for q in range(-m, m + 1):
        n_lo = max(0, q)
        n_hi = min(k, k + q) - 1
        if n_hi < n_lo:
            continue
        run = 1.0
        for l in range(1, n_lo + 1):
            run *= bin_noise_factor * (1.0 - pdet_at(q - l))
        inner = run
        for nn in range(n_lo + 1, n_hi + 1):
            run *= bin_noise_factor * (1.0 - pdet_at(q - nn))
            inner += run
        total += pdet_at(q) * inner
    return total


def _check_global_args(k: int, m: int, n: int | None = None) -> None:
    if k < 1:
        raise ValueError("k must be >= 1")
    if n is not None and n < 1:
        raise ValueError("n must be >= 1")
    if m >= k:
        raise ValueError("accept_half_width must be smaller than the bin count")


def _code_first_value(pdet_at: Callable[[int], float], pfa: float,
                      n: int, k: int, m: int) -> float:
    # stop-bin factor: reach the signal cell through its bin's earlier noise
    # cells, averaged over the N positions of the correct phase
    reach = one_minus_pow_ratio(pfa, n) / n
    quiet_noise = (1.0 - pfa) ** (n - 1)
    return reach / k * _accept_sum(pdet_at, quiet_noise, k, m)


def global_pdet_code_first(profile: NonCentralityProfile, policy: SearchPolicy,
                           n: int, k: int,
                           tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Global detection probability when each Doppler bin is searched over
    all code phases before moving to the next bin."""
    beta = policy.require_threshold()
    m = policy.accept_half_width
    _check_global_args(k, m, n)
    pfa = cell_pfa(beta)
    pdet_at = _profile_pdet_fn(profile, beta, tol)
    return as_probability(_code_first_value(pdet_at, pfa, n, k, m))


def global_pdet_doppler_first(profile: NonCentralityProfile, policy: SearchPolicy,
                              n: int, k: int,
                              tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Global detection probability when all Doppler bins are searched at
    each code phase before moving to the next phase.

    Code phases before the correct one contribute whole columns of K noise
    cells; within the correct column only signal-cell misses separate the
    start of the column from the stop bin.
    """
    beta = policy.require_threshold()
    m = policy.accept_half_width
    _check_global_args(k, m, n)
    pfa = cell_pfa(beta)
    pdet_at = _profile_pdet_fn(profile, beta, tol)
    num = one_minus_pow_complement(pfa, k * n)
    den = one_minus_pow_complement(pfa, k)
    reach = float(n) if den == 0.0 else num / den
    return as_probability(reach / (n * k) * _accept_sum(pdet_at, 1.0, k, m))


def global_pdet_approx(profile: NonCentralityProfile, policy: SearchPolicy,
                       k: int, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Search-order-free approximation: valid when K N P_fa << 1, i.e. false
    alarms are rare enough that only signal-cell misses matter."""
    beta = policy.require_threshold()
    m = policy.accept_half_width
    _check_global_args(k, m)
    pdet_at = _profile_pdet_fn(profile, beta, tol)
    return as_probability(_accept_sum(pdet_at, 1.0, k, m) / k)


def global_pdet_code_first_exact(params: SignalParams, grid: DopplerGrid,
                                 policy: SearchPolicy, n: int, l_max: int = 2,
                                 tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Code-phase-first global detection probability with the residual
    Doppler marginalized exactly.

    Conditioned on the residual Doppler df0 of the correct bin, the bin at
    signed offset s carries the realized non-centrality
    L_max sinc^2((df0 - s W) T_per) (zero beyond l_max); the conditional
    stop probability follows the same accept-sum as the expected-L form and
    is then averaged over df0 uniform on [-W/2, W/2] by quadrature.
    """
    beta = policy.require_threshold()
    m = policy.accept_half_width
    k = grid.num_bins
    _check_global_args(k, m, n)
    if int(l_max) != l_max or l_max < 0:
        raise ValueError("l_max must be a non-negative integer")
    pfa = cell_pfa(beta)
    wt = grid.relative_width
    lm = l_max_param(params)
    offsets = np.arange(-l_max, l_max + 1)

    def f(xs: np.ndarray) -> np.ndarray:
        out = np.empty(xs.size)
        for i, x in enumerate(xs):
            l_signed = lm * sinc(x - offsets * wt) ** 2
            pd = _marcum_q1_many(l_signed, beta, tol)
            table = dict(zip(offsets.tolist(), pd.tolist()))

            def pdet_at(s: int) -> float:
                return table.get(s, pfa)

            out[i] = _code_first_value(pdet_at, pfa, n, k, m)
        return out

    return as_probability(_integrate_mean(f, -wt / 2.0, wt / 2.0, tol))


# --- ROC assembly ---------------------------------------------------------------

def default_beta_grid(min_pfa: float = 1e-9, max_pfa: float = 0.5,
                      points: int = 60) -> np.ndarray:
    """Ascending thresholds whose cell P_fa values are log-spaced on
    [min_pfa, max_pfa]."""
    if not (0.0 < min_pfa <= max_pfa <= 1.0):
        raise ValueError("need 0 < min_pfa <= max_pfa <= 1")
    if points < 1:
        raise ValueError("points must be >= 1")
    if points == 1:
        return np.array([-math.log(min_pfa)])
    return -np.log(np.geomspace(max_pfa, min_pfa, points))


@dataclass(frozen=True)
class RocPoint:
    """One threshold's worth of analytic (and optionally Monte Carlo) results."""

    beta: float
    p_fa_cell: float
    p_det_cell_l0: float
    p_det_cell_l1: float
    p_det_cell_l2: float
    p_det_cell_l0_exact: float
    p_det_cell_l1_exact: float
    p_det_cell_l2_exact: float
    p_fa_global: float
    p_det_naive: float
    p_det_code_first: float
    p_det_doppler_first: float
    p_det_approx: float
    p_det_mc: float | None = None
    p_fa_mc: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None
    trials: int | None = None


@dataclass(frozen=True)
class RocCurve:
    grid: DopplerGrid
    policy: SearchPolicy
    points: tuple[RocPoint, ...] = field(default_factory=tuple)


def roc_curve(params: SignalParams, grid: DopplerGrid, policy: SearchPolicy,
              betas, n_phases: int = 1023, l_max: int = 2,
              tol: ToleranceConfig = DEFAULT_TOL) -> RocCurve:
    """Analytic ROC data over an ascending threshold grid.

    Cell detection columns always cover offsets 0..2 (expected-L and exact
    quadrature variants); global columns use the profile truncated at l_max.
    The threshold of `policy` is ignored; each point gets its own.
    """
    betas = np.asarray(betas, dtype=np.float64)
    if betas.size == 0:
        raise ValueError("beta grid must be non-empty")
    if betas.size > 1 and not np.all(np.diff(betas) > 0.0):
        raise ValueError("beta grid must be strictly increasing")
    k = grid.num_bins
    profile = NonCentralityProfile.expected(params, grid, l_max)
    cell_l = [expected_noncentrality(params, grid, l, tol) for l in range(3)]
    points = []
    for beta in betas:
        b = float(beta)
        pol = SearchPolicy(policy.order, policy.accept_half_width, b)
        exact = [cell_pdet_exact(params, grid, l, b, tol) for l in range(3)]
        points.append(RocPoint(
            beta=b,
            p_fa_cell=cell_pfa(b),
            p_det_cell_l0=cell_pdet(cell_l[0], b, tol),
            p_det_cell_l1=cell_pdet(cell_l[1], b, tol),
            p_det_cell_l2=cell_pdet(cell_l[2], b, tol),
            p_det_cell_l0_exact=exact[0],
            p_det_cell_l1_exact=exact[1],
            p_det_cell_l2_exact=exact[2],
            p_fa_global=global_pfa(cell_pfa(b), n_phases, k),
            p_det_naive=global_pdet_naive(profile.values[0], b, n_phases, k, tol),
            p_det_code_first=global_pdet_code_first(profile, pol, n_phases, k, tol),
            p_det_doppler_first=global_pdet_doppler_first(profile, pol, n_phases, k, tol),
            p_det_approx=global_pdet_approx(profile, pol, k, tol),
        ))
    return RocCurve(grid=grid, policy=policy, points=tuple(points))
