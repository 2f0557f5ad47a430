"""Lattice Brownian motion, its local time, Brownian scenery and the
functionals built from them (G, X_t, last zero before 1, the bridge)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .rng import Stream, check_seed, normal_at

MAX_FINE_STEPS = 2 ** 32
BRIDGE_MIN_STEPS = 100


class BudgetError(RuntimeError):
    """A configuration asks for more fine steps than the budget allows."""


def lattice_root(m: int) -> int:
    m = int(m)
    r = math.isqrt(m)
    if r * r != m:
        raise ValueError(f"refinement must be a perfect square, got {m}")
    return r


def fine_index(t: float, m: int) -> int:
    """floor(t * m), tolerant to representation error in ``t``."""
    return int(math.floor(t * m + 1e-9))


@dataclass(frozen=True)
class FinePath:
    """B on the lattice: time step 1/m, space step 1/sqrt(m).

    ``positions`` holds the integer lattice coordinate ``sqrt(m) * B(k/m)``.
    """

    m: int
    T: float
    positions: np.ndarray  # int32 or int64, length ceil(T m) + 1
    seed: int | None = None
    label: tuple = ("B",)

    @property
    def r(self) -> int:
        return math.isqrt(self.m)

    @property
    def n_steps(self) -> int:
        return self.positions.shape[0] - 1

    @property
    def values(self) -> np.ndarray:
        return self.positions / self.r

    def extended(self, T: float, max_steps: int = MAX_FINE_STEPS) -> "FinePath":
        """The same path continued to horizon ``T`` (needs the generating seed)."""
        if self.seed is None:
            raise ValueError("only simulated paths can be extended")
        return simulate_fine_bm(self.seed, T, self.m, label=self.label, max_steps=max_steps)


def simulate_fine_bm(seed: int, T: float, m: int, label=("B",), max_steps: int = MAX_FINE_STEPS) -> FinePath:
    if isinstance(label, str):
        label = (label,)
    r = lattice_root(m)
    if r < 2:
        raise ValueError(f"refinement must be at least 4, got {m}")
    if T < 0:
        raise ValueError("horizon must be nonnegative")
    n = math.ceil(T * m - 1e-9)
    if n > max_steps:
        raise BudgetError(f"T*m = {n} fine steps exceeds the budget of {max_steps}")
    steps = Stream(check_seed(seed), *label).signs(0, n)
    dtype = np.int32 if n < 2 ** 31 else np.int64
    positions = np.zeros(n + 1, dtype=dtype)
    np.cumsum(steps, out=positions[1:], dtype=dtype)
    return FinePath(m, float(T), positions, seed, tuple(label))


@dataclass(frozen=True)
class LocalTimeField:
    """L(t, x_j) at lattice sites x_j = j / sqrt(m), j = lo .. lo + len - 1."""

    m: int
    t: float
    lo: int
    values: np.ndarray
    source: tuple | None = None

    @property
    def r(self) -> int:
        return math.isqrt(self.m)

    @property
    def dx(self) -> float:
        return 1.0 / self.r

    @property
    def hi(self) -> int:
        return self.lo + self.values.shape[0] - 1

    @property
    def table(self) -> dict:
        return {self.lo + i: float(v) for i, v in enumerate(self.values) if v}

    def at_sites(self, j) -> np.ndarray:
        j = np.asarray(j, dtype=np.int64)
        idx = j - self.lo
        ok = (idx >= 0) & (idx < self.values.shape[0])
        out = np.zeros(j.shape, dtype=np.float64)
        out[ok] = self.values[idx[ok]]
        return out

    def at_integers(self, x) -> np.ndarray:
        """L(t, x) at integer x, read from lattice site j = x sqrt(m)."""
        return self.at_sites(np.asarray(x, dtype=np.int64) * self.r)

    def integer_range(self) -> tuple[int, int]:
        """Smallest and largest integer x whose lattice site lies in the field."""
        r = self.r
        return -((-self.lo) // r), self.hi // r

    def occupation(self) -> float:
        return float(self.values.sum()) * self.dx


def path_fingerprint(p: FinePath) -> tuple:
    if p.seed is None:
        return ("array", id(p.positions))
    return (p.seed, p.label, p.m)


def local_time_from_counts(m: int, t: float, positions: np.ndarray, source=None) -> LocalTimeField:
    r = lattice_root(m)
    if positions.shape[0] == 0:
        return LocalTimeField(m, t, 0, np.zeros(1), source)
    lo = int(positions.min())
    counts = np.bincount(positions - lo)
    return LocalTimeField(m, t, lo, counts / r, source)


def bm_local_time(p: FinePath, t: float) -> LocalTimeField:
    """Occupation density of the fine path on [0, t).

    Fine step k covers [k/m, (k+1)/m) and deposits 1/m of time at its site, so
    the field integrates to floor(t m)/m exactly.  At t = 0 the field is zero;
    the first deposit (1/sqrt(m) at the origin) appears at t = 1/m.
    """
    if t < 0 or t > p.T + 1e-12:
        raise ValueError(f"t = {t} outside [0, {p.T}]")
    k = fine_index(t, p.m)
    return local_time_from_counts(p.m, float(t), p.positions[:k], path_fingerprint(p))


def self_intersection(field: LocalTimeField, t: float | None = None) -> float:
    """X_t = integral of L(t, x)^2 dx, as a lattice sum."""
    if t is not None and abs(t - field.t) > 1e-12:
        raise ValueError(f"field is at time {field.t}, asked for {t}")
    return float(np.dot(field.values, field.values)) * field.dx


def self_intersection_of(p: FinePath, t: float) -> float:
    """X_t directly from visit counts: sum c_j^2 / m^{3/2}."""
    k = fine_index(t, p.m)
    seg = p.positions[:k]
    if seg.shape[0] == 0:
        return 0.0
    c = np.bincount(seg - seg.min()).astype(np.float64)
    return float(np.dot(c, c)) / p.m ** 1.5


# --- Brownian scenery ------------------------------------------------------


@nb.njit(cache=True)
def _w_walk(ka, kb, sd, k0, w0, nsteps, stride):
    """Advance W from index k0 (value w0) by nsteps; record every stride-th value.

    Recorded entries are W at k0 + stride, k0 + 2 stride, ..., so k0 must sit
    on the stride lattice.
    """
    out = np.empty(nsteps // stride, dtype=np.float64)
    w = w0
    j = 0
    for i in range(nsteps):
        w = w + sd * normal_at(ka, kb, np.uint64(k0 + i))
        if (i + 1) % stride == 0:
            out[j] = w
            j += 1
    return out, w


class SceneryBM:
    """Two-sided Brownian motion W on the lattice j / sqrt(m_w).

    The x > 0 and x < 0 halves come from independent streams.  Values are
    produced lazily by sequential addition of Gaussian increments, so any
    prefix is bit-identical however the realization was grown.
    """

    SIDES = ("+", "-")

    def __init__(self, seed: int, m_w: int, label=("W",)):
        if isinstance(label, str):
            label = (label,)
        self.seed = check_seed(seed)
        self.m_w = int(m_w)
        self.r = lattice_root(m_w)
        self.dx = 1.0 / self.r
        self.sd = math.sqrt(self.dx)
        self.label = tuple(label)
        self.streams = {side: Stream(self.seed, *self.label, side) for side in self.SIDES}
        self._cache = {}  # (side, stride) -> list of values at multiples of stride

    def __repr__(self):
        return f"SceneryBM(seed={self.seed}, m_w={self.m_w}, label={self.label})"

    def strided(self, side: str, stride: int, count: int) -> np.ndarray:
        """W(+- k stride dx) for k = 0..count on one side (W(0) = 0 first)."""
        stream = self.streams[side]
        key = (side, int(stride))
        have = self._cache.get(key)
        if have is None:
            have = np.zeros(1)
        if have.shape[0] <= count:
            more = count + 1 - have.shape[0]
            k0 = (have.shape[0] - 1) * stride
            vals, _ = _w_walk(stream.ka, stream.kb, self.sd, k0, float(have[-1]), more * stride, stride)
            have = np.concatenate([have, vals])
            self._cache[key] = have
        return have[: count + 1]

    def values(self, side: str, count: int) -> np.ndarray:
        """W at fine indices 0..count on one side."""
        return self.strided(side, 1, count)

    def at_index(self, side: str, idx) -> np.ndarray:
        """W at arbitrary fine indices on one side, streamed without caching."""
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size == 0:
            return np.zeros(0)
        order = np.argsort(idx, kind="stable")
        stream = self.streams[side]
        out = np.empty(idx.shape[0])
        k, w = 0, 0.0
        for o in order:
            target = int(idx[o])
            if target > k:
                _, w = _w_walk(stream.ka, stream.kb, self.sd, k, w, target - k, target - k)
                k = target
            out[o] = w
        return out

    def cell_increments(self, r_coarse: int, lo: int, hi: int) -> np.ndarray:
        """W(x_{j+1}) - W(x_j) on the coarse lattice x_j = j / r_coarse, j = lo..hi."""
        if self.r % r_coarse:
            raise ValueError(
                f"lattice mismatch: W step 1/{self.r} does not refine field step 1/{r_coarse}"
            )
        q = self.r // r_coarse
        pos_n = max(hi + 1, 0)
        neg_n = max(-lo, 0)
        wp = self.strided("+", q, pos_n)
        wn = self.strided("-", q, neg_n)
        j = np.arange(lo, hi + 2, dtype=np.int64)
        w = np.where(j >= 0, wp[np.clip(j, 0, pos_n)], wn[np.clip(-j, 0, neg_n)])
        return np.diff(w)


def bmbs(field: LocalTimeField, w: SceneryBM, t: float | None = None) -> float:
    """G(t) = sum_j L(t, x_j) (W(x_{j+1}) - W(x_j))."""
    if t is not None and abs(t - field.t) > 1e-12:
        raise ValueError(f"field is at time {field.t}, asked for {t}")
    dw = w.cell_increments(field.r, field.lo, field.hi)
    return float(np.dot(field.values, dw))


# --- last zero and the Brownian bridge -------------------------------------


def last_zero_index(p: FinePath) -> int:
    if p.T < 1:
        raise ValueError("last_zero needs a path of horizon >= 1")
    head = p.positions[: p.m]
    zeros = np.flatnonzero(head == 0)
    return int(zeros[-1])


def last_zero(p: FinePath) -> float:
    """tau: the last lattice time before 1 at which the path is at 0."""
    return last_zero_index(p) / p.m


@dataclass(frozen=True)
class BridgeCheck:
    tau: float
    x_tau: float
    bridge_side: float  # tau^{3/2} * integral of L_Lambda(1, x)^2 dx
    x_1: float
    resolvable: bool

    @property
    def relative_gap(self) -> float:
        if self.x_tau == 0:
            return 0.0 if self.bridge_side == 0 else math.inf
        return abs(self.x_tau - self.bridge_side) / self.x_tau


def _occupation_square_integral(lattice_pos: np.ndarray, dt: float, dy: float) -> float:
    """Integral of the squared occupation density of a lattice path.

    Each sample spends ``dt`` at site ``y = k dy``.
    """
    c = np.bincount(lattice_pos - lattice_pos.min()).astype(np.float64)
    density = c * dt / dy
    return float(np.dot(density, density)) * dy


def bridge_scaling_check(p: FinePath) -> BridgeCheck:
    """Compare X_tau with tau^{3/2} times the bridge's self-intersection.

    The bridge Lambda(s) = B(s tau) / sqrt(tau) is built as a path of its own:
    K = tau m samples on [0, 1), time step 1/K, space step 1/sqrt(m tau).
    """
    k_tau = last_zero_index(p)
    tau = k_tau / p.m
    x_1 = self_intersection_of(p, 1.0)
    if k_tau == 0:
        return BridgeCheck(0.0, 0.0, 0.0, x_1, False)
    x_tau = self_intersection_of(p, tau)
    bridge = p.positions[:k_tau]
    dy = 1.0 / math.sqrt(p.m * tau)
    lam_sq = _occupation_square_integral(bridge, 1.0 / k_tau, dy)
    return BridgeCheck(tau, x_tau, tau ** 1.5 * lam_sq, x_1, k_tau >= BRIDGE_MIN_STEPS)


# --- diagnostics -------------------------------------------------------------


def modulus(field: LocalTimeField, width: float = 1.0) -> float:
    """max |L(t, x) - L(t, y)| over lattice sites with |x - y| <= width."""
    span = int(round(width * field.r))
    v = np.concatenate([np.zeros(span), field.values, np.zeros(span)])
    best = 0.0
    for s in range(1, span + 1):
        best = max(best, float(np.max(np.abs(v[s:] - v[:-s]))))
    return best


def tail_rate_curve(samples: np.ndarray, lambdas) -> list[dict]:
    """Empirical -log P(X > lambda) / lambda^2 (NaN where no sample exceeds)."""
    samples = np.asarray(samples)
    rows = []
    for lam in lambdas:
        frac = float(np.mean(samples > lam))
        rate = -math.log(frac) / lam ** 2 if frac > 0 else float("nan")
        rows.append({"lambda": float(lam), "tail_prob": frac, "rate": rate})
    return rows
