"""Grinding private attack: branching-random-walk maximum against the honest walk.

The adversary's best grinding chain is the maximum M_i of a branching random
walk in which every particle leaves one child in place and Z more one step
ahead (Z ~ Bernoulli(alpha) for SSLE, Poisson(alpha) for PLE). The honest chain
S_i grows by one with probability delta_up per round.

a[i, j] = Pr[M_i < j] follows a first-step recursion,

    SSLE:  a[i, j] = a[i-1, j] * (1 - alpha + alpha * a[i-1, j-1])
    PLE:   a[i, j] = a[i-1, j] * exp(alpha * (a[i-1, j-1] - 1))

with a[0, j] = 1 for j >= 1 and a[i, 0] = 0 (the in-place lineage keeps
M_i >= 0). Each cell is carried as both log(a) and log(1 - a) because the
fixed-length win probability b_n needs 1 - a accurately when a is within
1e-12 of one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .core import (
    DomainError,
    GameKind,
    LogProb,
    ParameterError,
    SolverError,
    log1mexp,
    log_binomial_pmf_array,
    log_sum_exp,
    validate_alpha,
    validate_horizon,
)

__all__ = [
    "HonestWalkParams",
    "GrindingTable",
    "SpeedFunctional",
    "ThresholdReport",
    "honest_walk",
    "grinding_table",
    "grinding_series",
    "grinding_win_probability",
    "zeta",
    "mu",
    "speed_gamma",
    "security_threshold",
    "threshold_report",
    "CONTINUOUS_TIME_PLE_THRESHOLD",
]

# 1/(1+e): the PLE threshold of the continuous-time, zero-propagation-delay model
# (different model; kept for comparison only)
CONTINUOUS_TIME_PLE_THRESHOLD = 1.0 / (1.0 + math.e)

THRESHOLD_BRACKET = (0.01, 0.49)


def _grinding_kind(kind) -> GameKind:
    kind = GameKind.parse(kind)
    if kind is GameKind.IND:
        raise ParameterError("grinding games are defined for SSLE and PLE only")
    return kind


@dataclass(frozen=True)
class HonestWalkParams:
    delta_up: float
    delta_null: float

    def __post_init__(self):
        if abs(self.delta_up + self.delta_null - 1.0) > 1e-12:
            raise ParameterError("delta_up + delta_null must equal 1")


def honest_walk(kind, alpha: float) -> HonestWalkParams:
    kind = _grinding_kind(kind)
    a = validate_alpha(alpha)
    up = 1.0 - a if kind is GameKind.SSLE else -math.expm1(a - 1.0)
    return HonestWalkParams(up, 1.0 - up)


def _first_row(width: int) -> tuple[np.ndarray, np.ndarray]:
    la = np.zeros(width)
    lc = np.full(width, -np.inf)
    la[0], lc[0] = -np.inf, 0.0
    return la, lc


def _next_row(kind: GameKind, a: float, la: np.ndarray, lc: np.ndarray):
    """One step of the recursion on (log a, log(1-a)) rows."""
    log_alpha = math.log(a)
    c_prev = np.exp(lc[:-1])  # 1 - a[i-1, j-1]
    la_new = np.empty_like(la)
    lc_new = np.empty_like(lc)
    la_new[0], lc_new[0] = -np.inf, 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind is GameKind.SSLE:
            # 1 - a' = (1 - a) + alpha * a * (1 - a_left)
            la_new[1:] = la[1:] + np.log1p(-a * c_prev)
            lc_new[1:] = np.logaddexp(lc[1:], log_alpha + la[1:] + lc[:-1])
        else:
            # 1 - a' = (1 - a) e^{-x} + (1 - e^{-x}),  x = alpha * (1 - a_left)
            x = a * c_prev
            log_x = log_alpha + lc[:-1]
            log_one_minus_ex = np.where(
                log_x < -30.0, log_x - 0.5 * x, log1mexp(-x)
            )
            la_new[1:] = la[1:] - x
            lc_new[1:] = np.logaddexp(lc[1:] - x, log_one_minus_ex)
    np.minimum(lc_new, 0.0, out=lc_new)
    return la_new, lc_new


@dataclass(frozen=True)
class GrindingTable:
    """a[i, j] = Pr[M_i < j] for 0 <= i <= n, 0 <= j <= n + 1, stored in log form."""

    kind: GameKind
    alpha: float
    n: int
    log_a: np.ndarray  # shape (n+1, n+2)
    log_c: np.ndarray  # log(1 - a), same shape

    def cell(self, i: int, j: int) -> LogProb:
        if j > self.n + 1:
            return LogProb.ONE
        v = float(self.log_a[i, j])
        return LogProb.ZERO if v == -math.inf else LogProb(v)

    def complement(self, i: int, j: int) -> LogProb:
        """Pr[M_i >= j]."""
        if j > self.n + 1:
            return LogProb.ZERO
        v = float(self.log_c[i, j])
        return LogProb.ZERO if v == -math.inf else LogProb(v)

    def probs(self) -> np.ndarray:
        return np.exp(self.log_a)

    def median_position(self, i: int | None = None) -> int:
        """Largest j with a[i, j] <= 1/2."""
        i = self.n if i is None else i
        return int(np.nonzero(self.log_a[i] <= -math.log(2.0))[0].max())


def grinding_table(kind, alpha: float, n: int) -> GrindingTable:
    kind = _grinding_kind(kind)
    a = validate_alpha(alpha)
    n = validate_horizon(n)
    width = n + 2
    log_a = np.empty((n + 1, width))
    log_c = np.empty((n + 1, width))
    la, lc = _first_row(width)
    log_a[0], log_c[0] = la, lc
    for i in range(1, n + 1):
        la, lc = _next_row(kind, a, la, lc)
        log_a[i], log_c[i] = la, lc
    log_a.setflags(write=False)
    log_c.setflags(write=False)
    return GrindingTable(kind, a, n, log_a, log_c)


def _log_b(log_c_row: np.ndarray, i: int, delta_up: float) -> float:
    s = np.arange(i + 1)
    # s = 0 term: log_c = 0, full binomial mass
    return log_sum_exp(log_binomial_pmf_array(delta_up, i, s) + log_c_row[: i + 1])


def grinding_series(kind, alpha: float, n: int) -> np.ndarray:
    """log b_i for i = 0..n, keeping two table rows in memory."""
    kind = _grinding_kind(kind)
    a = validate_alpha(alpha)
    n = validate_horizon(n)
    delta_up = honest_walk(kind, a).delta_up
    width = n + 2
    la, lc = _first_row(width)
    out = np.empty(n + 1)
    out[0] = 0.0
    for i in range(1, n + 1):
        la, lc = _next_row(kind, a, la, lc)
        out[i] = min(_log_b(lc, i, delta_up), 0.0)
    return out


def grinding_win_probability(kind, alpha: float, n: int) -> LogProb:
    """b_n = Pr[M_n >= S_n]: the grinding game of length exactly n."""
    v = float(grinding_series(kind, alpha, n)[-1])
    return LogProb.ZERO if v == -math.inf else LogProb(v)


# --- asymptotic speed of the maximum -------------------------------------------------


def phi(theta: float, alpha: float) -> float:
    """E[1 + e^theta Z]; identical for Bernoulli and Poisson offspring of mean alpha."""
    return 1.0 + math.exp(theta) * alpha


def _log_zeta(a: float, alpha: float) -> float:
    return a * math.log(-a / (alpha * (a + 1.0))) - math.log1p(a)


def zeta(a: float, alpha: float) -> float:
    if not (-1.0 < a < 0.0):
        raise ParameterError(f"zeta is defined on (-1, 0), got {a}")
    return math.exp(_log_zeta(a, alpha))


def mu(a: float, alpha: float) -> float:
    """inf over theta >= 0 of e^{theta a} phi(theta), in closed form.

    The stationary point theta* = log(-a / (alpha (1 + a))) is admissible only
    for a <= -alpha/(alpha+1); beyond that the infimum sits at theta = 0.
    """
    if a <= -1.0:
        return 0.0
    if a >= -alpha / (alpha + 1.0):
        return 1.0 + alpha
    return zeta(a, alpha)


@dataclass(frozen=True)
class SpeedFunctional:
    alpha: float
    gamma: float
    iterations: int
    residual: float  # zeta(gamma) - 1

    @property
    def speed(self) -> float:
        """Almost-sure limit of M_n / n."""
        return -self.gamma


def speed_gamma(alpha: float, xtol: float = 1e-12) -> SpeedFunctional:
    """Solve zeta(a) = 1 on (-1, 0).

    zeta rises from alpha at -1 to its peak at -alpha/(alpha+1), then falls
    back toward 1 at 0, so gamma = inf{a : mu(a) >= 1} is the crossing on the
    rising branch.
    """
    a = validate_alpha(alpha)
    peak = -a / (a + 1.0)
    lo = -1.0 + 1e-15
    f = lambda x: _log_zeta(x, a)  # noqa: E731
    if not (f(lo) < 0.0 < f(peak)):
        raise SolverError(f"zeta = 1 not bracketed on ({lo}, {peak}) for alpha={a}")
    root, res = optimize.bisect(f, lo, peak, xtol=xtol, full_output=True, disp=False)
    if not res.converged:
        raise SolverError(f"bisection for gamma did not converge (alpha={a})")
    return SpeedFunctional(a, root, res.iterations, zeta(root, a) - 1.0)


# --- security threshold ---------------------------------------------------------------


def _speed_margin(kind: GameKind, a: float) -> float:
    return -speed_gamma(a).gamma - honest_walk(kind, a).delta_up


def _closed_equation(kind: GameKind, a: float) -> float:
    """Log form of the threshold equation with gamma eliminated."""
    if kind is GameKind.SSLE:
        # ((1-a)/a^2)^(a-1) = a
        return (a - 1.0) * math.log((1.0 - a) / (a * a)) - math.log(a)
    x = math.exp(a - 1.0)
    # ((1-x)/(a x))^(x-1) = x
    return (x - 1.0) * math.log((1.0 - x) / (a * x)) - math.log(x)


@dataclass(frozen=True)
class ThresholdReport:
    kind: GameKind
    alpha: float
    iterations: int
    residual: float  # -gamma - delta_up at the root
    closed_alpha: float
    closed_residual: float

    @property
    def cross_check_delta(self) -> float:
        return abs(self.alpha - self.closed_alpha)


def threshold_report(kind, xtol: float = 1e-9) -> ThresholdReport:
    kind = _grinding_kind(kind)
    lo, hi = THRESHOLD_BRACKET
    g = lambda x: _speed_margin(kind, x)  # noqa: E731
    if not (g(lo) < 0.0 < g(hi)):
        raise SolverError(f"threshold not bracketed on {THRESHOLD_BRACKET} for {kind.label}")
    root, res = optimize.bisect(g, lo, hi, xtol=xtol, full_output=True, disp=False)
    if not res.converged:
        raise SolverError("threshold bisection did not converge")
    h = lambda x: _closed_equation(kind, x)  # noqa: E731
    closed = optimize.brentq(h, lo, hi, xtol=1e-14)
    return ThresholdReport(kind, root, res.iterations, g(root), closed, h(closed))


def security_threshold(kind) -> float:
    """Largest adversary power below which the honest chain outgrows every grinding chain."""
    rep = threshold_report(kind)
    if rep.cross_check_delta > 1e-6:
        raise SolverError(
            f"nested and closed-form thresholds disagree by {rep.cross_check_delta:.3g}"
        )
    return rep.alpha


def check_below_threshold(kind, alpha: float) -> float:
    a = validate_alpha(alpha)
    th = security_threshold(kind)
    if a >= th:
        raise DomainError(
            f"alpha={a} is not below the {GameKind.parse(kind).label} grinding threshold {th:.4f}"
        )
    return a
