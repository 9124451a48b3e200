"""Monte-Carlo oracles for the private and grinding games.

Trials are split into fixed-size blocks; block ``b`` draws from its own
stream seeded by ``SeedSequence(seed, spawn_key=(b,))``. A trial's randomness
therefore depends only on ``(seed, trial_index)``, and estimates are
bit-identical for any thread count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import GameKind, ParameterError, validate_alpha, validate_horizon

__all__ = [
    "SimConfig",
    "McEstimate",
    "simulate_gap_trajectory",
    "simulate_gaps",
    "estimate_gap_pmf",
    "estimate_mean_gap",
    "estimate_win_probability",
    "estimate_catch_up_probability",
    "estimate_grinding_win_probability",
    "simulate_brw_max",
    "estimate_brw_cdf",
    "THREADS_ENV",
]

THREADS_ENV = "SSLE_SECURITY_THREADS"
BLOCK_SIZE = 1024
MIN_VALIDATION_CAP = 1000
_ROUND_CHUNK = 64
DROP_LEVEL = 1e-15


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    runs: int = 100_000
    horizon: int | None = None  # hard cap on simulated rounds, None = unbounded
    saturation_cap: int = 1_000_000
    catchup_horizon_multiplier: float = 50.0
    threads: int | None = None

    def __post_init__(self):
        if self.runs < 1:
            raise ParameterError("runs must be >= 1")
        if self.saturation_cap < 1:
            raise ParameterError("saturation_cap must be >= 1")
        if self.horizon is not None and self.horizon < 0:
            raise ParameterError("horizon must be >= 0")
        if self.catchup_horizon_multiplier < 1:
            raise ParameterError("catchup_horizon_multiplier must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ParameterError("seed must be an unsigned 64-bit integer")

    def n_threads(self) -> int:
        if self.threads is not None:
            return max(1, int(self.threads))
        env = os.environ.get(THREADS_ENV)
        if env:
            return max(1, int(env))
        return os.cpu_count() or 1


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    runs: int
    truncation_residual: float = 0.0

    def z_score(self, target: float) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.mean == target else math.copysign(math.inf, self.mean - target)
        return (self.mean - target) / self.std_error

    @classmethod
    def from_sums(cls, total: float, total_sq: float, runs: int, **kw) -> "McEstimate":
        mean = total / runs
        if runs > 1:
            var = max(total_sq - runs * mean * mean, 0.0) / (runs - 1)
        else:
            var = 0.0
        return cls(mean, math.sqrt(var / runs), runs, **kw)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _trim(result, size: int):
    if isinstance(result, tuple):
        return tuple(r[:size] for r in result)
    return result[:size]


def _run_blocks(config: SimConfig, fn: Callable[[np.random.Generator, int], object]) -> list:
    """Apply ``fn(rng, BLOCK_SIZE)`` to every block, results in block order.

    The last block is simulated in full and trimmed, so trial i always sees
    the same draws whatever the total number of runs.
    """
    n_blocks = -(-config.runs // BLOCK_SIZE)
    keep = [min(BLOCK_SIZE, config.runs - b * BLOCK_SIZE) for b in range(n_blocks)]

    def job(b: int):
        return _trim(fn(_block_rng(config.seed, b), BLOCK_SIZE), keep[b])

    threads = min(config.n_threads(), n_blocks)
    if threads <= 1:
        return [job(b) for b in range(n_blocks)]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(job, range(n_blocks)))


# --- private games ---------------------------------------------------------------------


def _draw_steps(kind: GameKind, a: float, rng: np.random.Generator, shape) -> np.ndarray:
    """Gap increments for ``shape`` independent rounds."""
    if kind is GameKind.SSLE:
        adv = rng.random(shape) < a
        return np.where(adv, 1, -1).astype(np.int64)
    if kind is GameKind.PLE:
        adv = rng.poisson(a, shape) > 0
        hon = rng.poisson(1.0 - a, shape) > 0
    else:
        # two separate single-leader elections, one per chain
        adv = rng.random(shape) < a
        hon = rng.random(shape) < 1.0 - a
    return adv.astype(np.int64) - hon.astype(np.int64)


def simulate_gap_trajectory(kind, alpha: float, n: int, rng: np.random.Generator) -> int:
    """Play n rounds of the private game and return the final gap."""
    kind = GameKind.parse(kind)
    a = validate_alpha(alpha)
    n = validate_horizon(n)
    gap = 0
    for _ in range(n):
        if kind is GameKind.SSLE:
            gap += 1 if rng.random() < a else -1
        elif kind is GameKind.PLE:
            gap += int(rng.poisson(a) > 0) - int(rng.poisson(1.0 - a) > 0)
        else:
            gap += int(rng.random() < a) - int(rng.random() < 1.0 - a)
    return gap


def _gaps_block(kind: GameKind, a: float, n: int, rng: np.random.Generator, size: int) -> np.ndarray:
    gap = np.zeros(size, dtype=np.int64)
    done = 0
    while done < n:
        k = min(_ROUND_CHUNK, n - done)
        gap += _draw_steps(kind, a, rng, (size, k)).sum(axis=1)
        done += k
    return gap


def simulate_gaps(kind, alpha: float, n: int, config: SimConfig) -> np.ndarray:
    kind = GameKind.parse(kind)
    a = validate_alpha(alpha)
    n = validate_horizon(n)
    return np.concatenate(_run_blocks(config, lambda rng, s: _gaps_block(kind, a, n, rng, s)))


def estimate_gap_pmf(kind, alpha: float, n: int, config: SimConfig):
    """Empirical Pr[G_n = v] for v in [-n, n]: (support, frequencies, std errors)."""
    gaps = simulate_gaps(kind, alpha, n, config)
    support = np.arange(-n, n + 1)
    freq = np.bincount(gaps + n, minlength=2 * n + 1) / config.runs
    se = np.sqrt(freq * (1.0 - freq) / config.runs)
    return support, freq, se


def estimate_mean_gap(kind, alpha: float, n: int, config: SimConfig) -> McEstimate:
    gaps = simulate_gaps(kind, alpha, n, config).astype(float)
    return McEstimate.from_sums(float(np.sum(gaps)), float(np.sum(gaps * gaps)), config.runs)


def _catch_up_ratio(kind: GameKind, a: float) -> float:
    if kind is GameKind.SSLE:
        return a / (1.0 - a)
    if kind is GameKind.PLE:
        return math.expm1(a) / math.expm1(1.0 - a)
    return (a / (1.0 - a)) ** 2


def _deepest_deficit(kind: GameKind, a: float) -> int:
    """Deficit below which the remaining catch-up chance r**|g| is < DROP_LEVEL."""
    return max(1, math.ceil(math.log(DROP_LEVEL) / math.log(_catch_up_ratio(kind, a))))


def _follow_catch_up(kind, a, gap, extension, rng):
    """Continue negative gaps for up to ``extension`` rounds; returns (won, last gap)."""
    deepest = _deepest_deficit(kind, a)
    gap = gap.copy()
    won = gap >= 0
    active = np.nonzero(~won)[0]
    g = gap[active]
    used = 0
    while active.size and used < extension:
        k = min(_ROUND_CHUNK, extension - used)
        path = g[:, None] + np.cumsum(_draw_steps(kind, a, rng, (active.size, k)), axis=1)
        hit = path.max(axis=1) >= 0
        won[active[hit]] = True
        used += k
        g = path[:, -1]
        # unreachable in the remaining rounds, or negligible: stop following it
        keep = ~hit & (g > -min(extension - used + 1, deepest))
        gap[active[~hit]] = g[~hit]
        active, g = active[keep], g[keep]
    return won, gap


def _truncation_residual(kind, a, won, final) -> float:
    r = _catch_up_ratio(kind, a)
    return float(np.sum(np.where(won, 0.0, r ** np.abs(np.minimum(final, -1))))) / won.size


def estimate_catch_up_probability(kind, alpha: float, deficit: int, config: SimConfig) -> McEstimate:
    """Fraction of walks started at -deficit that reach 0 within the horizon.

    The horizon is ``config.horizon`` or 10**4 rounds when unset.
    """
    kind = GameKind.parse(kind)
    a = validate_alpha(alpha, below_half=True)
    if isinstance(deficit, bool) or int(deficit) != deficit or deficit < 1:
        raise ParameterError(f"deficit must be an integer >= 1, got {deficit!r}")
    horizon = 10_000 if config.horizon is None else config.horizon
    start = -int(deficit)

    def block(rng, size):
        return _follow_catch_up(kind, a, np.full(size, start, dtype=np.int64), horizon, rng)

    results = _run_blocks(config, block)
    won = np.concatenate([r[0] for r in results])
    final = np.concatenate([r[1] for r in results])
    hits = float(np.sum(won))
    return McEstimate.from_sums(
        hits, hits, config.runs, truncation_residual=_truncation_residual(kind, a, won, final)
    )


def _win_block(kind, a, n, extension, rng, size):
    return _follow_catch_up(kind, a, _gaps_block(kind, a, n, rng, size), extension, rng)


def estimate_win_probability(kind, alpha: float, n: int, config: SimConfig) -> McEstimate:
    """Fraction of trials that win at some length >= n.

    Catch-up after round n is followed for ``multiplier * max(n, 1)`` extra
    rounds only, and trials whose exact remaining catch-up chance falls
    below ``DROP_LEVEL`` stop early. Both make the estimate biased downward.
    ``truncation_residual`` is the exact expected mass lost, given each
    unfinished trial's last gap d < 0, namely mean(r ** |d|).
    """
    kind = GameKind.parse(kind)
    a = validate_alpha(alpha, below_half=True)
    n = validate_horizon(n)
    if n == 0:
        return McEstimate(1.0, 0.0, config.runs)
    extension = int(math.ceil(config.catchup_horizon_multiplier * max(n, 1)))
    if config.horizon is not None:
        extension = max(0, min(extension, config.horizon - n))
    results = _run_blocks(config, lambda rng, s: _win_block(kind, a, n, extension, rng, s))
    won = np.concatenate([r[0] for r in results])
    final = np.concatenate([r[1] for r in results])
    wins = float(np.sum(won))
    return McEstimate.from_sums(
        wins, wins, config.runs, truncation_residual=_truncation_residual(kind, a, won, final)
    )


# --- branching random walk -------------------------------------------------------------


def _brw_block(kind: GameKind, a: float, n: int, cap: int, rng, size) -> np.ndarray:
    """Per-position particle counts in a sliding window above the saturated front.

    Once a position holds ``cap`` particles nothing below it can influence the
    maximum any more (counts never decrease), so the window starts at the
    highest saturated position. Births from a saturated cell are drawn as if
    it held exactly ``cap`` particles.
    """
    width = min(n + 2, 32)
    counts = np.zeros((size, width), dtype=np.int64)
    counts[:, 0] = 1
    offset = np.zeros(size, dtype=np.int64)
    rows = np.arange(size)[:, None]
    for _ in range(n):
        if np.any(counts[:, -1] > 0):
            counts = np.concatenate([counts, np.zeros_like(counts)], axis=1)
            width = counts.shape[1]
        parents = counts[:, :-1]
        if kind is GameKind.SSLE:
            births = rng.binomial(parents, a)
        else:
            births = rng.poisson(a * parents)
        counts[:, 1:] += births
        np.minimum(counts, cap, out=counts)
        saturated = counts >= cap
        if saturated.any():
            idx = np.arange(width)
            shift = np.max(np.where(saturated, idx, 0), axis=1)
            moved = shift > 0
            if moved.any():
                src = shift[:, None] + idx[None, :]
                padded = np.concatenate([counts, np.zeros_like(counts)], axis=1)
                counts = np.where(moved[:, None], padded[rows, src], counts)
                offset += shift
    top = width - 1 - np.argmax((counts > 0)[:, ::-1], axis=1)
    return offset + top


def simulate_brw_max(kind, alpha: float, n: int, config: SimConfig, validation: bool = True) -> np.ndarray:
    """Maximum occupied position M_n of the branching random walk, one entry per run."""
    kind = GameKind.parse(kind)
    if kind is GameKind.IND:
        raise ParameterError("branching random walk is defined for SSLE and PLE offspring")
    a = validate_alpha(alpha)
    n = validate_horizon(n)
    cap = int(config.saturation_cap)
    if validation and cap < MIN_VALIDATION_CAP:
        raise ParameterError(
            f"saturation_cap={cap} < {MIN_VALIDATION_CAP}: saturation bias too large for validation"
        )
    return np.concatenate(_run_blocks(config, lambda rng, s: _brw_block(kind, a, n, cap, rng, s)))


def estimate_brw_cdf(kind, alpha: float, n: int, config: SimConfig, js=None):
    """Empirical Pr[M_n < j] with standard errors for each j in ``js`` (default 0..n+1)."""
    maxima = simulate_brw_max(kind, alpha, n, config)
    js = np.arange(n + 2) if js is None else np.asarray(js)
    p = np.array([(maxima < j).mean() for j in js])
    return js, p, np.sqrt(p * (1.0 - p) / config.runs)


def estimate_grinding_win_probability(kind, alpha: float, n: int, config: SimConfig) -> McEstimate:
    """Fraction of runs whose grinding maximum M_n reaches the honest height S_n."""
    kind = GameKind.parse(kind)
    a = validate_alpha(alpha)
    n = validate_horizon(n)
    honest_up = 1.0 - a if kind is GameKind.SSLE else -math.expm1(a - 1.0)
    cap = int(config.saturation_cap)
    if cap < MIN_VALIDATION_CAP:
        raise ParameterError(f"saturation_cap={cap} < {MIN_VALIDATION_CAP}")
    if kind is GameKind.IND:
        raise ParameterError("grinding games are defined for SSLE and PLE offspring")

    def block(rng, size):
        maxima = _brw_block(kind, a, n, cap, rng, size)
        return maxima >= rng.binomial(n, honest_up, size)

    wins = float(np.sum(np.concatenate(_run_blocks(config, block))))
    return McEstimate.from_sums(wins, wins, config.runs)
