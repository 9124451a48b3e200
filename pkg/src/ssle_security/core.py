"""Domain types and log-space probability arithmetic shared by every analytic module.

Probabilities in this package routinely reach 1e-30 and below, so every
pipeline carries natural-log values and converts to linear space only when
results are reported.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import ClassVar, Iterable

import numpy as np
from scipy.special import gammaln

__all__ = [
    "ParameterError",
    "DomainError",
    "SolverError",
    "GameKind",
    "GameParams",
    "StepProbs",
    "LogProb",
    "GapPmf",
    "validate_alpha",
    "log_binomial_pmf",
    "log_binomial_pmf_array",
    "log_sum_exp",
    "log1mexp",
    "step_probs",
]

LOG_TOL = 1e-12
HORIZON_CAP = 100_000


class ParameterError(ValueError):
    """Invalid input parameter (out of range, wrong type)."""


class DomainError(ValueError):
    """Parameters are valid but the requested quantity is undefined there,
    e.g. a catch-up probability for alpha >= 1/2."""


class SolverError(RuntimeError):
    """A root finder failed to bracket or converge."""


class GameKind(enum.Enum):
    SSLE = "ssle"
    PLE = "ple"
    IND = "ind"  # independent SSLE: models SSLE once chains carry different beacons

    @classmethod
    def parse(cls, value: "GameKind | str") -> "GameKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"independent": "ind", "independentssle": "ind", "independent-ssle": "ind"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ParameterError(f"unknown game kind {value!r}; expected ssle, ple or ind") from None

    @property
    def label(self) -> str:
        return {"ssle": "SSLE", "ple": "PLE", "ind": "Ind"}[self.value]


def validate_alpha(alpha: float, *, below_half: bool = False) -> float:
    """Check an adversary stake fraction and return it as a float.

    ``below_half`` is for quantities that need the gap walk to drift toward the
    honest side; those raise :class:`DomainError` at alpha >= 1/2.
    """
    try:
        a = float(alpha)
    except (TypeError, ValueError):
        raise ParameterError(f"alpha must be a real number, got {alpha!r}") from None
    if not (0.0 < a < 1.0) or math.isnan(a):
        raise ParameterError(f"alpha must lie in (0, 1), got {a}")
    if below_half and a >= 0.5:
        raise DomainError(f"alpha={a} >= 1/2: the gap walk does not drift to -inf")
    return a


def validate_horizon(n: int, cap: int | None = None) -> int:
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise ParameterError(f"horizon must be a non-negative integer, got {n!r}")
    n = int(n)
    if cap is not None and n > cap:
        raise ParameterError(f"horizon {n} exceeds cap {cap}")
    return n


@dataclass(frozen=True)
class GameParams:
    """The (L, alpha) pair of a game definition plus the leader-election kind."""

    kind: GameKind
    alpha: float
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "kind", GameKind.parse(self.kind))
        object.__setattr__(self, "alpha", validate_alpha(self.alpha))
        object.__setattr__(self, "horizon", validate_horizon(self.horizon))


@dataclass(frozen=True)
class StepProbs:
    """Per-round law of the gap walk: +1, -1 or unchanged."""

    p_up: float
    p_down: float
    p_null: float

    def __post_init__(self):
        for name in ("p_up", "p_down", "p_null"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ParameterError(f"{name}={v} outside [0, 1]")
        total = self.p_up + self.p_down + self.p_null
        if abs(total - 1.0) > LOG_TOL:
            raise ParameterError(f"step probabilities sum to {total!r}, not 1")

    @property
    def drift(self) -> float:
        return self.p_up - self.p_down

    @property
    def conditional_up(self) -> float:
        """Probability of an up-step given the step is not null."""
        return self.p_up / (self.p_up + self.p_down)


@dataclass(frozen=True, order=True)
class LogProb:
    """A probability held as its natural log.

    Zero is the distinguished value :attr:`ZERO`; its ``log_value`` is
    ``-inf`` but every arithmetic method special-cases it so that patterns
    such as ``0 ** 0`` or ``-inf * 0`` never produce NaN.
    """

    log_value: float

    def __post_init__(self):
        v = float(self.log_value)
        if math.isnan(v):
            raise ParameterError("log-probability is NaN")
        if v > LOG_TOL:
            raise ParameterError(f"log-probability {v} > 0")
        object.__setattr__(self, "log_value", min(v, 0.0))

    ZERO: ClassVar["LogProb"]
    ONE: ClassVar["LogProb"]

    @classmethod
    def from_prob(cls, p: float) -> "LogProb":
        if not (0.0 <= p <= 1.0 + LOG_TOL):
            raise ParameterError(f"probability {p} outside [0, 1]")
        return cls.ZERO if p == 0.0 else cls(math.log(min(p, 1.0)))

    @property
    def is_zero(self) -> bool:
        return self.log_value == -math.inf

    @property
    def prob(self) -> float:
        return 0.0 if self.is_zero else math.exp(self.log_value)

    @property
    def log10(self) -> float:
        return -math.inf if self.is_zero else self.log_value / math.log(10.0)

    def __mul__(self, other: "LogProb") -> "LogProb":
        if self.is_zero or other.is_zero:
            return LogProb.ZERO
        return LogProb(self.log_value + other.log_value)

    def __pow__(self, k: float) -> "LogProb":
        if k == 0:
            return LogProb.ONE
        if k < 0:
            raise ParameterError("negative power of a probability")
        if self.is_zero:
            return LogProb.ZERO
        return LogProb(self.log_value * k)

    def __add__(self, other: "LogProb") -> "LogProb":
        return LogProb(_clip_log(np.logaddexp(self.log_value, other.log_value)))

    def complement(self) -> "LogProb":
        """log(1 - p), accurate for p close to 0 and close to 1."""
        if self.is_zero:
            return LogProb.ONE
        return LogProb(float(log1mexp(self.log_value)))

    def __float__(self) -> float:
        return self.prob


LogProb.ZERO = LogProb(-math.inf)
LogProb.ONE = LogProb(0.0)


def _clip_log(v: float) -> float:
    if v > LOG_TOL:
        raise ArithmeticError(f"log-sum exceeded log(1) by {v}")
    return min(float(v), 0.0)


def log_sum_exp(terms: Iterable[float] | np.ndarray, axis=None):
    """Max-shifted log-sum-exp over the whole term list.

    Empty input and all-zero input return ``-inf``.
    """
    a = np.asarray(terms if isinstance(terms, np.ndarray) else list(terms), dtype=float)
    if a.size == 0:
        return -math.inf
    m = np.max(a, axis=axis, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        s = np.log(np.sum(np.exp(a - m_safe), axis=axis, keepdims=True)) + m_safe
    s = np.where(np.isneginf(m), -np.inf, s)
    if axis is None:
        return float(s.reshape(()))
    return np.squeeze(s, axis=axis)


def log1mexp(x):
    """log(1 - exp(x)) for x <= 0, switching branch at -ln 2 for accuracy."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(
            x > -math.log(2.0),
            np.log(-np.expm1(x)),
            np.log1p(-np.exp(x)),
        )
    out = np.where(x == 0.0, -np.inf, out)
    return out if out.ndim else float(out)


def log_binomial_pmf_array(p: float, n, k) -> np.ndarray:
    """Vectorised log Bin(p, n, k); ``-inf`` wherever k is not an integer in [0, n]."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    n, k = np.broadcast_arrays(n, k)
    valid = (k >= 0) & (k <= n) & (np.floor(k) == k)
    ks = np.where(valid, k, 0.0)
    ns = np.where(valid, n, 0.0)
    out = gammaln(ns + 1) - gammaln(ks + 1) - gammaln(ns - ks + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        # 0 * log(0) is 0 here: p^0 = 1 even when p = 0
        if p > 0:
            out = out + ks * math.log(p)
        else:
            out = np.where(ks > 0, -np.inf, out)
        if p < 1:
            out = out + (ns - ks) * math.log1p(-p)
        else:
            out = np.where(ns - ks > 0, -np.inf, out)
    return np.where(valid, out, -np.inf)


def log_binomial_pmf(p: float, n: int, k: float) -> LogProb:
    """log of C(n, k) p^k (1-p)^(n-k), zero for non-integer or out-of-range k."""
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    if n < 0 or int(n) != n:
        raise ParameterError(f"n must be a non-negative integer, got {n}")
    v = float(log_binomial_pmf_array(p, n, k))
    return LogProb.ZERO if v == -math.inf else LogProb(v)


def step_probs(kind: GameKind | str, alpha: float) -> StepProbs:
    kind = GameKind.parse(kind)
    a = validate_alpha(alpha)
    if kind is GameKind.SSLE:
        return StepProbs(a, 1.0 - a, 0.0)
    if kind is GameKind.PLE:
        # adversary alone: P[h=0] P[a>0] with Poisson(1-a), Poisson(a) counts
        up = math.exp(a - 1.0) - math.exp(-1.0)
        down = math.exp(-a) - math.exp(-1.0)
        return StepProbs(up, down, 1.0 - up - down)
    up, down = a * a, (1.0 - a) ** 2
    return StepProbs(up, down, 2.0 * a * (1.0 - a))


@dataclass(frozen=True)
class GapPmf:
    """Distribution of the gap after ``horizon`` rounds.

    ``log_masses[i]`` is the log-probability of gap ``i - horizon``.
    """

    horizon: int
    log_masses: np.ndarray

    def __post_init__(self):
        if self.log_masses.shape != (2 * self.horizon + 1,):
            raise ParameterError("log_masses must have length 2*horizon + 1")
        self.log_masses.setflags(write=False)

    @property
    def support(self) -> np.ndarray:
        return np.arange(-self.horizon, self.horizon + 1)

    def __getitem__(self, v: int) -> LogProb:
        if abs(v) > self.horizon:
            return LogProb.ZERO
        x = float(self.log_masses[v + self.horizon])
        return LogProb.ZERO if x == -math.inf else LogProb(_clip_log(x))

    def probs(self) -> np.ndarray:
        return np.exp(self.log_masses)

    def log_total(self) -> float:
        return log_sum_exp(self.log_masses)

    def log_tail(self, v_min: int) -> float:
        """log Pr[G >= v_min]."""
        i = max(v_min + self.horizon, 0)
        return log_sum_exp(self.log_masses[i:])

    def mean(self) -> float:
        return float(np.sum(self.support * self.probs()))
