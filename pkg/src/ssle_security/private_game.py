"""Exact analytics of the non-grinding private attack.

The gap G_n (adversarial rounds minus honest rounds) is a lazy +-1 random walk
whose step law comes from :func:`ssle_security.core.step_probs`. The adversary
wins the game of length n iff G_n >= 0; it wins "for some length >= n" iff
G_n >= 0 or a negative gap later climbs back to 0.

Three evaluation routes exist for the any-length win probability:

``assembly``
    sum of the gap pmf over v >= 0 plus catch-up weighted mass over v < 0.
    O(n^2) for the lazy walks.
``collapsed``
    SSLE: both sums rewritten as binomial pmf terms (O(n)).
    PLE / independent SSLE: ``Pr[G=-v] r^v == Pr[G=v]`` for r = p_up/p_down,
    so the answer is ``2 Pr[G>=0] - Pr[G=0]`` (O(n) with binomial tails).
``auto``
    assembly up to ``AUTO_ASSEMBLY_MAX`` rounds, collapsed beyond.

The win event is read under the infinite-horizon convention: a negative gap at
round n counts if it ever returns to 0 afterwards, however late.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import (
    HORIZON_CAP,
    DomainError,
    GameKind,
    GapPmf,
    LogProb,
    ParameterError,
    StepProbs,
    log_binomial_pmf_array,
    log_sum_exp,
    step_probs,
    validate_alpha,
    validate_horizon,
)

__all__ = [
    "WinProbability",
    "gap_pmf",
    "gap_pmf_ssle",
    "gap_pmf_ple",
    "catch_up_probability",
    "expected_gap",
    "expected_gap_coefficient",
    "win_probability",
    "fixed_length_win_probability",
]

AUTO_ASSEMBLY_MAX = 2000
_V_CHUNK = 512


@dataclass(frozen=True)
class WinProbability:
    horizon: int
    value: LogProb
    kind: GameKind
    alpha: float

    @property
    def prob(self) -> float:
        return self.value.prob

    @property
    def log10(self) -> float:
        return self.value.log10


def gap_pmf_ssle(alpha: float, n: int) -> GapPmf:
    a = validate_alpha(alpha)
    n = validate_horizon(n, HORIZON_CAP)
    v = np.arange(-n, n + 1)
    # non-integer (n+v)/2 gives zero mass: the parity rule
    return GapPmf(n, log_binomial_pmf_array(a, n, (n + v) / 2.0))


def _gap_pmf_lazy(sp: StepProbs, n: int) -> np.ndarray:
    """Log pmf of a lazy walk via the null-round decomposition.

    Conditioned on l null rounds, the other n-l rounds form a plain +-1 walk
    with up-probability p_up / (1 - p_null). The number of null rounds is
    Bin(p_null, n, l) and at least |v| non-null rounds are needed to reach v.
    """
    q = sp.conditional_up
    ls = np.arange(n + 1, dtype=float)
    log_w = log_binomial_pmf_array(sp.p_null, n, ls)  # (n+1,)
    m = n - ls
    out = np.empty(2 * n + 1)
    for start in range(-n, n + 1, _V_CHUNK):
        v = np.arange(start, min(start + _V_CHUNK, n + 1), dtype=float)[:, None]
        # Bin() is zero for l > n-|v| (k outside [0, m]) and for odd m+v
        terms = log_w[None, :] + log_binomial_pmf_array(q, m[None, :], (m[None, :] + v) / 2.0)
        out[start + n : start + n + v.shape[0]] = log_sum_exp(terms, axis=1)
    return out


def gap_pmf_ple(alpha: float, n: int, kind: GameKind | str = GameKind.PLE) -> GapPmf:
    kind = GameKind.parse(kind)
    if kind is GameKind.SSLE:
        raise ParameterError("gap_pmf_ple handles PLE and independent SSLE; use gap_pmf_ssle")
    n = validate_horizon(n, HORIZON_CAP)
    return GapPmf(n, _gap_pmf_lazy(step_probs(kind, alpha), n))


def gap_pmf(kind: GameKind | str, alpha: float, n: int) -> GapPmf:
    kind = GameKind.parse(kind)
    if kind is GameKind.SSLE:
        return gap_pmf_ssle(alpha, n)
    return gap_pmf_ple(alpha, n, kind)


def _log_catch_up_ratio(kind: GameKind, a: float) -> float:
    if kind is GameKind.SSLE:
        return math.log(a / (1.0 - a))
    if kind is GameKind.PLE:
        return math.log(math.expm1(a) / math.expm1(1.0 - a))
    return 2.0 * math.log(a / (1.0 - a))


def catch_up_probability(kind: GameKind | str, alpha: float, deficit: int) -> LogProb:
    """Probability that a gap sitting at -deficit ever climbs back to 0."""
    kind = GameKind.parse(kind)
    a = validate_alpha(alpha, below_half=True)
    if isinstance(deficit, bool) or int(deficit) != deficit or deficit < 1:
        raise ParameterError(f"deficit must be an integer >= 1, got {deficit!r}")
    return LogProb(int(deficit) * _log_catch_up_ratio(kind, a))


def expected_gap_coefficient(kind: GameKind | str, alpha: float) -> float:
    kind = GameKind.parse(kind)
    a = validate_alpha(alpha)
    if kind is GameKind.SSLE:
        return 2.0 * a - 1.0
    if kind is GameKind.PLE:
        return math.exp(a - 1.0) - math.exp(-a)
    return step_probs(kind, a).drift


def expected_gap(kind: GameKind | str, alpha: float, n: int) -> float:
    n = validate_horizon(n)
    return expected_gap_coefficient(kind, alpha) * n


def _win_assembly(kind: GameKind, a: float, n: int) -> float:
    pmf = gap_pmf(kind, a, n)
    lm = pmf.log_masses
    log_r = _log_catch_up_ratio(kind, a)
    v = np.arange(0, n + 1)
    if kind is GameKind.SSLE:
        ahead = v[(n + v) % 2 == 0]
        behind = v[(v >= 1) & ((n - v) % 2 == 0)]
    else:
        ahead, behind = v, v[1:]
    terms = np.concatenate([lm[n + ahead], lm[n - behind] + behind * log_r])
    return log_sum_exp(terms)


def _win_closed_form_ssle(a: float, n: int) -> float:
    v = np.arange(0, n + 1)
    ahead = v[(n + v) % 2 == 0]
    behind = v[(v >= 1) & ((n - v) % 2 == 0)]
    terms = np.concatenate([
        log_binomial_pmf_array(a, n, (n + ahead) // 2),
        log_binomial_pmf_array(1.0 - a, n, (n - behind) // 2),
    ])
    return log_sum_exp(terms)


def _log_binom_upper_tail(m: np.ndarray, kmin: np.ndarray, q: float) -> np.ndarray:
    """log Pr[Bin(m, q) >= kmin], elementwise, for kmin >= m/2.

    Uses the regularised incomplete beta through scipy, and a direct log-space
    pmf sum wherever that underflows. Past the median with q < 1/2 the pmf
    terms shrink at least geometrically with ratio q/(1-q), which bounds how
    many terms the direct sum needs.
    """
    with np.errstate(divide="ignore"):
        out = stats.binom.logsf(kmin - 1, m, q)
    out = np.where(kmin <= 0, 0.0, out)
    out = np.where(kmin > m, -np.inf, out)
    bad = np.nonzero((~np.isfinite(out) | (out < -700.0)) & (kmin <= m))[0]
    if bad.size == 0:
        return out
    n_terms = int(np.max(m[bad] - kmin[bad]) + 1)
    if q < 0.5:
        # ratio^n_terms < e^-40 relative to the leading term
        n_terms = min(n_terms, math.ceil(-40.0 / math.log(q / (1.0 - q))) + 1)
    steps = np.arange(n_terms)[None, :]
    chunk = max(1, 2_000_000 // n_terms)
    for start in range(0, bad.size, chunk):
        rows = bad[start : start + chunk]
        ks = kmin[rows][:, None] + steps
        terms = log_binomial_pmf_array(q, m[rows][:, None], ks)  # -inf past k = m
        out[rows] = log_sum_exp(terms, axis=1)
    return out


def _log_gap_tail_and_tie(sp: StepProbs, n: int) -> tuple[float, float]:
    """(log Pr[G_n >= 0], log Pr[G_n = 0]) in O(n) via the null-round split."""
    if sp.p_null > 0.0:
        ls = np.arange(n + 1)
        log_w = log_binomial_pmf_array(sp.p_null, n, ls)
    else:
        ls = np.array([0])
        log_w = np.array([0.0])
    m = n - ls
    q = sp.conditional_up
    log_ge = _log_binom_upper_tail(m.astype(float), (m + 1) // 2, q)
    log_eq = np.where(m % 2 == 0, log_binomial_pmf_array(q, m, m // 2), -np.inf)
    return log_sum_exp(log_w + log_ge), log_sum_exp(log_w + log_eq)


def _win_mirror(kind: GameKind, a: float, n: int) -> float:
    log_ge, log_eq = _log_gap_tail_and_tie(step_probs(kind, a), n)
    # 2 Pr[G>=0] - Pr[G=0], with Pr[G=0] <= Pr[G>=0]
    return log_ge + math.log(2.0 - math.exp(log_eq - log_ge))


def win_probability(
    kind: GameKind | str, alpha: float, n: int, method: str = "auto"
) -> WinProbability:
    """Probability the adversary wins the private game for some length >= n."""
    kind = GameKind.parse(kind)
    a = validate_alpha(alpha, below_half=True)
    n = validate_horizon(n, HORIZON_CAP)
    if method == "auto":
        method = "assembly" if n <= AUTO_ASSEMBLY_MAX else "collapsed"
    if n == 0:
        lv = 0.0
    elif method == "assembly":
        lv = _win_assembly(kind, a, n)
    elif method == "collapsed":
        lv = _win_closed_form_ssle(a, n) if kind is GameKind.SSLE else _win_mirror(kind, a, n)
    elif method == "mirror":
        lv = _win_mirror(kind, a, n)
    else:
        raise ParameterError(f"unknown method {method!r}")
    return WinProbability(n, LogProb(min(lv, 0.0)), kind, a)


def fixed_length_win_probability(kind: GameKind | str, alpha: float, n: int) -> LogProb:
    """Pr[G_n >= 0]: the adversary wins the game of length exactly n."""
    kind = GameKind.parse(kind)
    a = validate_alpha(alpha)
    n = validate_horizon(n, HORIZON_CAP)
    if n == 0:
        return LogProb.ONE
    log_ge, _ = _log_gap_tail_and_tie(step_probs(kind, a), n)
    return LogProb(min(log_ge, 0.0))
