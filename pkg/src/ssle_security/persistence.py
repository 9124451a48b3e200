"""Settlement time: decay-rate fits, epsilon-persistence parameters, SSLE-vs-PLE reductions.

Two probability sources are scanned:

``private``
    the any-length win probability of the private game (exact).
``grinding``
    b_n, the probability of winning the grinding game of length exactly n.
    It ignores later catch-up, so persistence values derived from it are a
    proxy and are labelled as such.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .core import HORIZON_CAP, DomainError, GameKind, ParameterError, validate_alpha
from .grinding import grinding_series, security_threshold
from .private_game import win_probability

__all__ = [
    "DecayFit",
    "PersistenceReport",
    "log_probability",
    "fit_decay",
    "one_point_rate",
    "persistence_parameter",
    "reduction_ratio",
    "SOURCES",
    "GRINDING_CAP",
]

SOURCES = ("private", "grinding")
GRINDING_CAP = 5000
# a fit is trusted if its worst residual is small in log units, or small next to
# the log-probability span of the window: the bend of ln P near small n grows
# like ln n, so the absolute bound alone rejects wide windows whose slope is fine
MAX_FIT_RESIDUAL = 0.5
MAX_RELATIVE_RESIDUAL = 0.01
FIT_POINTS = 48


def _check_source(source: str) -> str:
    s = str(source).lower()
    if s not in SOURCES:
        raise ParameterError(f"unknown source {source!r}; expected one of {SOURCES}")
    return s


def _check_below_threshold(kind: GameKind, alpha: float, source: str) -> float:
    if source == "private":
        return validate_alpha(alpha, below_half=True)
    if kind is GameKind.IND:
        raise ParameterError("the grinding source is defined for SSLE and PLE only")
    a = validate_alpha(alpha)
    th = security_threshold(kind)
    if a >= th:
        raise DomainError(f"alpha={a} is not below the {kind.label} grinding threshold {th:.4f}")
    return a


def _cap(source: str) -> int:
    return HORIZON_CAP if source == "private" else GRINDING_CAP


@lru_cache(maxsize=64)
def _grinding_prefix(kind: GameKind, alpha: float, n_max: int) -> np.ndarray:
    return grinding_series(kind, alpha, n_max)


def _grinding_log_b(kind: GameKind, alpha: float, n: int) -> float:
    size = 256
    while size < n:
        size *= 2
    size = max(min(size, GRINDING_CAP), n)
    return float(_grinding_prefix(kind, alpha, size)[n])


def log_probability(kind, alpha: float, n: int, source: str = "private") -> float:
    """Natural log of the scanned probability at horizon n."""
    kind = GameKind.parse(kind)
    source = _check_source(source)
    if source == "private":
        return win_probability(kind, alpha, n).value.log_value
    return _grinding_log_b(kind, validate_alpha(alpha), int(n))


@dataclass(frozen=True)
class DecayFit:
    """ln P(n) ~ intercept - rate_a * n over ``fit_window``."""

    rate_a: float
    intercept: float
    fit_window: tuple[int, int]
    residual: float
    kind: GameKind | None = None
    alpha: float | None = None
    source: str = "private"

    @property
    def relative_residual(self) -> float:
        span = self.rate_a * (self.fit_window[1] - self.fit_window[0])
        return self.residual / span if span > 0 else math.inf

    @property
    def valid(self) -> bool:
        return (
            math.isfinite(self.rate_a)
            and self.rate_a > 0.0
            and (self.residual <= MAX_FIT_RESIDUAL or self.relative_residual <= MAX_RELATIVE_RESIDUAL)
        )

    def predict(self, n) -> np.ndarray:
        return self.intercept - self.rate_a * np.asarray(n, dtype=float)

    def horizon_for(self, epsilon: float) -> int:
        """Smallest n at which the fitted line reaches log(epsilon)."""
        return max(0, math.ceil((self.intercept - math.log(epsilon)) / self.rate_a))


def fit_decay(
    kind, alpha: float, n_min: int, n_max: int, source: str = "private", points: int = FIT_POINTS
) -> DecayFit:
    """Least-squares line through (n, ln P(n)) on [n_min, n_max]."""
    kind = GameKind.parse(kind)
    source = _check_source(source)
    a = _check_below_threshold(kind, alpha, source)
    n_min, n_max = int(n_min), int(n_max)
    if not (0 <= n_min < n_max):
        raise ParameterError(f"need 0 <= n_min < n_max, got [{n_min}, {n_max}]")
    if n_max > _cap(source):
        raise ParameterError(f"n_max={n_max} exceeds the {source} horizon cap {_cap(source)}")
    ns = np.unique(np.linspace(n_min, n_max, points).round().astype(int))
    ys = np.array([log_probability(kind, a, int(n), source) for n in ns])
    slope, intercept = np.polyfit(ns.astype(float), ys, 1)
    resid = float(np.max(np.abs(ys - (intercept + slope * ns))))
    return DecayFit(-float(slope), float(intercept), (n_min, n_max), resid, kind, a, source)


def one_point_rate(kind, alpha: float, n: int, source: str = "private") -> float:
    """a = -ln(P(n)) / n, i.e. the rate read off a single large-n value."""
    kind = GameKind.parse(kind)
    source = _check_source(source)
    a = _check_below_threshold(kind, alpha, source)
    if n < 1:
        raise ParameterError("one-point rate needs n >= 1")
    return -log_probability(kind, a, n, source) / n


@dataclass(frozen=True)
class PersistenceReport:
    epsilon: float
    n0: int | None
    method: str  # "exact-scan", "fit-extrapolation" or "unreachable"
    kind: GameKind
    alpha: float
    source: str = "private"
    fit: DecayFit | None = field(default=None, compare=False)

    @property
    def proxy(self) -> bool:
        return self.source == "grinding"

    @property
    def reachable(self) -> bool:
        return self.n0 is not None


def _scan_monotone(logp: Callable[[int], float], log_eps: float, cap: int) -> int | None:
    """Smallest n <= cap with logp(n) <= log_eps for a non-increasing logp."""
    if logp(cap) > log_eps:
        return None
    hi = 1
    while hi < cap and logp(hi) > log_eps:
        hi = min(2 * hi, cap)
    lo = hi // 2  # logp(lo) > log_eps (or lo == 0 where P = 1)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if logp(mid) <= log_eps:
            hi = mid
        else:
            lo = mid
    return hi


def _scan_grinding(kind: GameKind, a: float, log_eps: float, cap: int) -> int | None:
    """First n with log b_n <= log_eps, growing the computed prefix by doubling."""
    size = 256
    while True:
        size = min(size, cap)
        idx = np.nonzero(_grinding_prefix(kind, a, size) <= log_eps)[0]
        if idx.size:
            return int(idx[0])
        if size >= cap:
            return None
        size *= 2


def _default_window(kind, a, source, cap) -> tuple[int, int]:
    rate_guess = one_point_rate(kind, a, cap, source)
    lo = max(200, math.ceil(4.0 / rate_guess)) if rate_guess > 0 else 200
    lo = min(lo, cap // 2)
    return lo, cap


def persistence_parameter(
    kind,
    alpha: float,
    epsilon: float,
    source: str = "private",
    method: str = "auto",
    cap: int | None = None,
) -> PersistenceReport:
    """Smallest horizon n0 whose scanned probability is <= epsilon.

    ``method="auto"`` scans exactly up to the horizon cap and falls back to
    a fitted exponential beyond it; ``"scan"`` and ``"fit"`` force one path.
    ``cap`` bounds both the exact scan and the right end of the fit window.
    """
    kind = GameKind.parse(kind)
    source = _check_source(source)
    a = _check_below_threshold(kind, alpha, source)
    if not (0.0 < epsilon < 1.0):
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if method not in ("auto", "scan", "fit"):
        raise ParameterError(f"unknown method {method!r}")
    cap = _cap(source) if cap is None else min(int(cap), _cap(source))
    log_eps = math.log(epsilon)

    if method != "fit":
        if source == "private":
            n0 = _scan_monotone(lambda n: log_probability(kind, a, n, source), log_eps, cap)
        else:
            n0 = _scan_grinding(kind, a, log_eps, cap)
        if n0 is not None:
            _verify_bracket(kind, a, epsilon, source, n0)
            return PersistenceReport(epsilon, n0, "exact-scan", kind, a, source)
        if method == "scan":
            return PersistenceReport(epsilon, None, "unreachable", kind, a, source)

    fit = fit_decay(kind, a, *_default_window(kind, a, source, cap), source=source)
    if not fit.valid:
        return PersistenceReport(epsilon, None, "unreachable", kind, a, source, fit)
    return PersistenceReport(epsilon, fit.horizon_for(epsilon), "fit-extrapolation", kind, a, source, fit)


def _verify_bracket(kind, a, epsilon, source, n0):
    log_eps = math.log(epsilon)
    here = log_probability(kind, a, n0, source)
    before = log_probability(kind, a, n0 - 1, source) if n0 > 0 else 0.0
    if not (here <= log_eps < before):
        raise ArithmeticError(
            f"persistence bracket violated at n0={n0}: ln P(n0)={here}, ln P(n0-1)={before}"
        )


def reduction_ratio(alpha: float, epsilon: float, source: str = "private") -> float:
    """Percentage by which SSLE shortens the epsilon-persistence parameter vs PLE."""
    ssle = persistence_parameter(GameKind.SSLE, alpha, epsilon, source)
    ple = persistence_parameter(GameKind.PLE, alpha, epsilon, source)
    if not (ssle.reachable and ple.reachable):
        raise DomainError(f"epsilon={epsilon} unreachable at alpha={alpha} ({source})")
    return 100.0 * (1.0 - ssle.n0 / ple.n0)
