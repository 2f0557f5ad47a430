"""Simple symmetric random walk, its local time and the scenery functional K."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .rng import Stream, check_seed

_SPLIT = 134217729.0  # 2**27 + 1


@dataclass(frozen=True)
class WalkPath:
    steps: np.ndarray  # int8, +-1
    positions: np.ndarray  # int64, S_0 .. S_n

    def __post_init__(self):
        if self.positions.shape[0] != self.steps.shape[0] + 1:
            raise ValueError("positions must have one more entry than steps")

    def __len__(self):
        return self.steps.shape[0]

    @classmethod
    def from_steps(cls, steps) -> "WalkPath":
        steps = np.asarray(steps, dtype=np.int8)
        if steps.size and not np.all(np.abs(steps) == 1):
            raise ValueError("walk steps must be +1 or -1")
        positions = np.zeros(steps.shape[0] + 1, dtype=np.int64)
        np.cumsum(steps, out=positions[1:])
        return cls(steps, positions)


@dataclass(frozen=True)
class WalkLocalTime:
    """Visit counts xi(n, x) over the contiguous occupied range ``lo..lo+len-1``."""

    n: int
    lo: int
    counts: np.ndarray  # int64

    @property
    def hi(self) -> int:
        return self.lo + self.counts.shape[0] - 1

    @property
    def table(self) -> dict:
        return {self.lo + i: int(c) for i, c in enumerate(self.counts) if c}

    def __getitem__(self, x: int) -> int:
        i = int(x) - self.lo
        if 0 <= i < self.counts.shape[0]:
            return int(self.counts[i])
        return 0

    def at(self, sites) -> np.ndarray:
        sites = np.asarray(sites, dtype=np.int64)
        idx = sites - self.lo
        ok = (idx >= 0) & (idx < self.counts.shape[0])
        out = np.zeros(sites.shape, dtype=np.int64)
        out[ok] = self.counts[idx[ok]]
        return out


def simulate_walk(seed: int, n: int, label: str = "walk") -> WalkPath:
    if n < 0:
        raise ValueError("horizon must be nonnegative")
    steps = Stream(check_seed(seed), label).signs(0, n)
    return WalkPath.from_steps(steps)


def _check_horizon(p: WalkPath, n: int):
    if n < 0 or n > len(p):
        raise ValueError(f"horizon {n} exceeds path length {len(p)}")


def walk_local_time(p: WalkPath, n: int) -> WalkLocalTime:
    _check_horizon(p, n)
    pos = p.positions[: n + 1]
    lo = int(pos.min())
    counts = np.bincount(pos - lo).astype(np.int64)
    return WalkLocalTime(n, lo, counts)


@nb.njit(cache=True)
def compensated_cumsum(x):
    """Running sums carried in double-double precision, rounded once per entry."""
    out = np.empty(x.shape[0], dtype=np.float64)
    hi = 0.0
    lo = 0.0
    for i in range(x.shape[0]):
        s = hi + x[i]
        bp = s - hi
        err = (hi - (s - bp)) + (x[i] - bp)
        lo += err
        hi = s + lo
        lo = lo - (hi - s)
        out[i] = hi
    return out


def rwrs(p: WalkPath, s, n: int) -> np.ndarray:
    """K(0..n), the scenery collected along the walk up to each time.

    ``s`` is anything with a ``values(sites)`` method (a ``Scenery`` or an
    embedded scenery).
    """
    _check_horizon(p, n)
    collected = np.ascontiguousarray(s.values(p.positions[: n + 1]), dtype=np.float64)
    return compensated_cumsum(collected)


def _two_product(a, b):
    prod = a * b
    ca = _SPLIT * a
    ahi = ca - (ca - a)
    alo = a - ahi
    cb = _SPLIT * b
    bhi = cb - (cb - b)
    blo = b - bhi
    err = ((ahi * bhi - prod) + ahi * blo + alo * bhi) + alo * blo
    return prod, err


def rwrs_by_local_time(lt: WalkLocalTime, s) -> float:
    """K(n) as sum over sites of sigma_x * xi(n, x), correctly rounded."""
    sites = np.arange(lt.lo, lt.hi + 1, dtype=np.int64)
    sigma = np.asarray(s.values(sites), dtype=np.float64)
    prod, err = _two_product(sigma, lt.counts.astype(np.float64))
    return math.fsum(np.concatenate([prod, err]))


def lil_ratio_running_max(K: np.ndarray, n_min: int = 16) -> np.ndarray:
    """Running max of K(n) / (n log log n)^{3/4} for n >= n_min (NaN before)."""
    n = np.arange(K.shape[0], dtype=np.float64)
    out = np.full(K.shape[0], np.nan)
    if K.shape[0] <= n_min:
        return out
    tail = n[n_min:]
    ratio = K[n_min:] / (tail * np.log(np.log(tail))) ** 0.75
    out[n_min:] = np.maximum.accumulate(ratio)
    return out
