"""Clutter matrix, optimal mismatched filter, and the SCR fitness of a phase code.

The receiver correlates the return with a real filter x. For a code s the
clutter matrix collects every nonzero-lag shifted replica:

    R = sum_{i != 0} shifted(s, i) shifted(s, i)^T

and the signal-to-clutter ratio of the pair (s, x) is

    scr(s, x) = (x.s)^2 / sum_{i != 0} (x . shifted(s, i))^2.

The optimal filter is x* = R^{-1} s and the resulting fitness is the
quadratic form s^T R^{-1} s, evaluated with a Cholesky solve (never an
explicit inverse). R admits the exact closed form
R[j,k] = r(|j-k|) - s[j]*s[k] with r the aperiodic autocorrelation, which
is what ``build_clutter_matrix`` computes; the literal sum of outer
products is kept in the test suite as an independent oracle.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .codes import PhaseCode, autocorrelation, code_key, shifted

# Codes are evaluated in fixed-size chunks so results do not depend on the
# thread count (chunks are concatenated in submission order).
_CHUNK = 1024


class FitnessScore(NamedTuple):
    """SCR value of a code; ``defined`` is False when R is numerically singular."""

    gamma: float
    defined: bool = True


UNDEFINED_SCORE = FitnessScore(float("nan"), False)


def sort_value(score: FitnessScore) -> float:
    """Total-order key: undefined scores rank below every defined score."""
    return score.gamma if score.defined else float("-inf")


def build_clutter_matrix(s: PhaseCode) -> np.ndarray:
    """N x N clutter matrix R = sum over nonzero lags of shifted outer products.

    Computed via the closed form R[j,k] = r(|j-k|) - s[j]*s[k]; exactly
    symmetric, positive semidefinite, trace N^2 - N.
    """
    sf = np.asarray(s, dtype=np.float64)
    n = len(sf)
    r = autocorrelation(sf)
    idx = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    return r[idx] - np.outer(sf, sf)


def _spd_solve(R: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Solve R x = b by Cholesky; None when R is not numerically positive definite."""
    try:
        cho = scipy.linalg.cho_factor(R, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError:
        return None
    return scipy.linalg.cho_solve(cho, b, check_finite=False)


def optimal_filter(s: PhaseCode) -> np.ndarray | None:
    """The SCR-maximizing mismatched filter x* = R^{-1} s, or None if R is singular."""
    sf = np.asarray(s, dtype=np.float64)
    return _spd_solve(build_clutter_matrix(s), sf)


def scr(s: PhaseCode, x: np.ndarray) -> FitnessScore:
    """Signal-to-clutter ratio of the pair (s, x), summing squared correlations lag by lag.

    This is the literal definition and serves as the independent check of
    ``fitness``; it never goes through the solver.
    """
    x = np.asarray(x, dtype=np.float64)
    if len(x) != len(s):
        raise ValueError(f"length mismatch: filter {len(x)} vs code {len(s)}")
    if not np.any(x):
        raise ValueError("filter must not be the zero vector")
    n = len(s)
    peak = float(x @ np.asarray(s, dtype=np.float64))
    clutter = 0.0
    for i in range(-(n - 1), n):
        if i == 0:
            continue
        clutter += float(x @ shifted(s, i)) ** 2
    if clutter == 0.0:
        return UNDEFINED_SCORE
    return FitnessScore(peak * peak / clutter)


def matched_filter_scr(s: PhaseCode) -> FitnessScore:
    """SCR of the matched filter x = s; never exceeds the mismatched optimum."""
    return scr(s, np.asarray(s, dtype=np.float64))


def fitness(s: PhaseCode) -> FitnessScore:
    """Optimal-filter SCR s^T R^{-1} s via the SPD solve."""
    sf = np.asarray(s, dtype=np.float64)
    x = _spd_solve(build_clutter_matrix(s), sf)
    if x is None:
        return UNDEFINED_SCORE
    return FitnessScore(float(sf @ x))


def _fitness_chunk(codes: np.ndarray) -> np.ndarray:
    """Gammas for a (B, N) chunk of codes; NaN marks an undefined (singular-R) entry."""
    S = codes.astype(np.float64)
    b, n = S.shape
    r = np.empty((b, n))
    r[:, 0] = n
    for d in range(1, n):
        r[:, d] = np.einsum("bi,bi->b", S[:, : n - d], S[:, d:])
    idx = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    R = r[:, idx] - S[:, :, None] * S[:, None, :]
    try:
        L = np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        # Rare: isolate the non-PD members instead of failing the chunk.
        out = np.empty(b)
        for k in range(b):
            score = fitness(codes[k])
            out[k] = score.gamma if score.defined else np.nan
        return out
    z = np.linalg.solve(L, S[:, :, None])[:, :, 0]
    return np.einsum("bi,bi->b", z, z)


def fitness_batch(codes: np.ndarray, threads: int = 1) -> np.ndarray:
    """Vectorized fitness for a (B, N) code matrix.

    Returns gamma per row with NaN for undefined entries. The chunk split is
    fixed, so the result is identical for every thread count.
    """
    codes = np.atleast_2d(codes)
    b = codes.shape[0]
    if b == 0:
        return np.empty(0)
    chunks = [codes[lo : lo + _CHUNK] for lo in range(0, b, _CHUNK)]
    if threads <= 1 or len(chunks) == 1:
        parts = [_fitness_chunk(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_fitness_chunk, chunks))
    return np.concatenate(parts)


def _score_from_gamma(gamma: float) -> FitnessScore:
    return FitnessScore(float(gamma)) if np.isfinite(gamma) else UNDEFINED_SCORE


@dataclass
class FitnessCache:
    """Score store keyed by exact symbol sequence; counts distinct evaluations.

    ``miss_count`` is the number of distinct codes ever evaluated through the
    cache, the "visited states" metric. With ``fold_negation`` a code and its
    negation share one entry (off by default: exact-sequence counting is the
    conservative reading of visited states).
    """

    fold_negation: bool = False
    _scores: dict[bytes, FitnessScore] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    miss_count: int = 0
    hit_count: int = 0

    def key(self, s: np.ndarray) -> bytes:
        if self.fold_negation and s[0] < 0:
            return code_key(-np.asarray(s))
        return code_key(s)

    def get(self, s: np.ndarray) -> FitnessScore | None:
        return self._scores.get(self.key(s))

    def store(self, s: np.ndarray, score: FitnessScore) -> bool:
        """Insert unless present; returns True when the code was new."""
        k = self.key(s)
        with self._lock:
            if k in self._scores:
                return False
            self._scores[k] = score
            self.miss_count += 1
            return True

    def __len__(self) -> int:
        return len(self._scores)


def cached_fitness(cache: FitnessCache, s: PhaseCode) -> tuple[FitnessScore, bool]:
    """Fitness through the cache; second element is True when the code was new."""
    hit = cache.get(s)
    if hit is not None:
        cache.hit_count += 1
        return hit, False
    score = fitness(s)
    if not cache.store(s, score):
        # Lost a concurrent insert race: the stored score is the canonical one.
        cache.hit_count += 1
        return cache.get(s), False
    return score, True
