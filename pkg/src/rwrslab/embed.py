"""The two embeddings: a simple walk read off a Brownian path at its successive
unit exits, and a scenery read off a Brownian scenery at Skorokhod stopping
levels."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .brownian import FinePath, LocalTimeField, SceneryBM, path_fingerprint
from .rng import Stream, check_seed, normal_at
from .scenery import DistSpec
from .walk import WalkLocalTime, WalkPath, walk_local_time

# Overshoot of a Gaussian random walk over a far barrier, in units of the step
# standard deviation: -zeta(1/2) / sqrt(2 pi).
OVERSHOOT = 0.5825971579390106


class EmbeddingExhausted(RuntimeError):
    """The fine path ended before the requested number of unit exits."""


# --- walker embedding --------------------------------------------------------


@nb.njit(cache=True)
def _unit_exits(positions, r, n):
    out = np.zeros(n + 1, dtype=np.int64)
    found = 0
    level = positions[0]
    for k in range(1, positions.shape[0]):
        if found == n:
            break
        d = positions[k] - level
        if d == r or d == -r:
            found += 1
            out[found] = k
            level = positions[k]
    return out, found


@dataclass(frozen=True)
class EmbeddedWalk:
    """A simple walk S with S_k = B(tau_k) for the unit-exit times tau_k."""

    path: FinePath
    walk: WalkPath
    exit_steps: np.ndarray  # fine-step indices tau_0 = 0 < tau_1 < ...

    @property
    def exit_times(self) -> np.ndarray:
        return self.exit_steps / self.path.m

    @property
    def durations(self) -> np.ndarray:
        """Exit durations in Brownian time units."""
        return np.diff(self.exit_steps) / self.path.m


def revesz_embed(p: FinePath, n: int) -> EmbeddedWalk:
    """Read a simple walk of ``n`` steps off the fine path.

    tau_{k+1} is the first fine time after tau_k at which B has moved by
    exactly one from B(tau_k); S_k = B(tau_k).
    """
    if n < 0:
        raise ValueError("horizon must be nonnegative")
    r = p.r
    exits, found = _unit_exits(p.positions, r, n)
    if found < n:
        raise EmbeddingExhausted(f"path of {p.n_steps} fine steps holds only {found} of {n} unit exits")
    levels = p.positions[exits].astype(np.int64) // r
    steps = np.diff(levels).astype(np.int8)
    return EmbeddedWalk(p, WalkPath(steps, levels), exits)


def embedding_gap(e: EmbeddedWalk, field: LocalTimeField, n: int) -> float:
    """sup over integer x of |xi(n, x) - L(n, x)|."""
    if field.source is not None and field.source != path_fingerprint(e.path):
        raise ValueError("local-time field was not computed from the embedded walk's path")
    if field.m != e.path.m or abs(field.t - n) > 1e-12:
        raise ValueError(f"field is (m={field.m}, t={field.t}); need (m={e.path.m}, t={n})")
    xi = walk_local_time(e.walk, n)
    return gap_between(xi, field)


def gap_between(xi: WalkLocalTime, field: LocalTimeField) -> float:
    flo, fhi = field.integer_range()
    lo, hi = min(xi.lo, flo), max(xi.hi, fhi)
    x = np.arange(lo, hi + 1, dtype=np.int64)
    return float(np.max(np.abs(xi.at(x) - field.at_integers(x))))


# --- scenery embedding -----------------------------------------------------


class SkorokhodPairSampler:
    """Randomized exit intervals (U < 0 < V) whose exit value has law ``d``.

    Two-point laws use their support as a fixed interval.  Continuous
    symmetric laws use the representation with joint density proportional to
    (v - u) mu(du) mu(dv) on u < 0 < v: since v - u = v + |u|, it is an equal
    mixture of (plain negative part, size-biased positive part) and the
    mirror image, both of which are sampled directly.
    """

    def __init__(self, d: DistSpec, seed: int, *label):
        self.dist = d
        self.stream = Stream(check_seed(seed), *(label or ("pairs",)))
        atoms = d.atoms()
        self.exact = atoms is not None
        if self.exact:
            pts, _ = atoms
            self._fixed = (float(pts[0]), float(pts[1]))

    def pairs(self, start: int, count: int) -> tuple[np.ndarray, np.ndarray]:
        if self.exact:
            u, v = self._fixed
            return np.full(count, u), np.full(count, v)
        choice = self.stream.child("choice").uniforms(start, count)
        far_u = self.stream.child("far").uniforms(start, count)
        kind = self.dist.kind
        if kind == "StandardGaussian":
            near = np.abs(self.stream.child("near").normals(start, count))
            far = np.sqrt(-2.0 * np.log1p(-far_u))
        elif kind == "UniformSym":
            near = math.sqrt(3.0) * self.stream.child("near").uniforms(start, count)
            far = math.sqrt(3.0) * np.sqrt(far_u)
        else:
            raise ValueError(f"no exit-pair construction for {self.dist}")
        first = choice < 0.5
        u = np.where(first, -near, -far)
        v = np.where(first, far, near)
        return u, v


def skorokhod_pair_sampler(d: DistSpec, seed: int, *label) -> SkorokhodPairSampler:
    return SkorokhodPairSampler(d, seed, *label)


@nb.njit(cache=True)
def _exit_scan(ka, kb, sd, k0, w0, lower, upper, shift):
    """Run W from index k0 through one exit per (lower, upper) pair.

    The walk stops at the first index k > start with
    W(k) - W(start) <= lower + shift or >= upper - shift.
    """
    n = lower.shape[0]
    idx = np.empty(n, dtype=np.int64)
    val = np.empty(n, dtype=np.float64)
    k = k0
    w = w0
    for i in range(n):
        lo = lower[i] + shift
        hi = upper[i] - shift
        start = w
        while True:
            w = w + sd * normal_at(ka, kb, np.uint64(k))
            k += 1
            d = w - start
            if d <= lo or d >= hi:
                break
        idx[i] = k
        val[i] = w
    return idx, val, k, w


@dataclass
class _Side:
    sampler: SkorokhodPairSampler
    idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    val: np.ndarray = field(default_factory=lambda: np.zeros(0))
    k: int = 0
    w: float = 0.0

    def grow(self, w: SceneryBM, side: str, count: int, shift: float):
        have = self.idx.shape[0]
        if count <= have:
            return
        lower, upper = self.sampler.pairs(have, count - have)
        stream = w.streams[side]
        idx, val, self.k, self.w = _exit_scan(
            stream.ka, stream.kb, w.sd, self.k, self.w, lower, upper, shift
        )
        self.idx = np.concatenate([self.idx, idx])
        self.val = np.concatenate([self.val, val])


class SkorokhodSchedule:
    """Stopping levels rho_n on W and the embedded scenery sigma~_n.

    Site n >= 1 uses the n-th exit on the x > 0 half of W; site n <= 0 uses
    the (1 - n)-th exit on the x < 0 half, run outward, which embeds the law
    of -sigma so that sigma~_n = W(rho_n) - W(rho_{n-1}) has the target law.
    """

    def __init__(self, w: SceneryBM, d: DistSpec, seed: int, correction: bool = True):
        self.w = w
        self.dist = d
        self.seed = check_seed(seed)
        self.correction = bool(correction)
        self.shift = OVERSHOOT * w.sd if correction else 0.0
        self._sides = {
            "+": _Side(SkorokhodPairSampler(d, seed, "pairs", "+")),
            "-": _Side(SkorokhodPairSampler(d.reflected(), seed, "pairs", "-")),
        }

    @property
    def dx(self) -> float:
        return self.w.dx

    @property
    def n_pos(self) -> int:
        return self._sides["+"].idx.shape[0]

    @property
    def n_neg(self) -> int:
        """Number of exits on the x < 0 half (covers sites 1 - n_neg .. 0)."""
        return self._sides["-"].idx.shape[0]

    def extend(self, n_pos: int, n_neg: int) -> "SkorokhodSchedule":
        self._sides["+"].grow(self.w, "+", n_pos, self.shift)
        self._sides["-"].grow(self.w, "-", n_neg, self.shift)
        return self

    def ensure_sites(self, lo: int, hi: int):
        self.extend(max(hi, 0), max(1 - lo, 0))

    # -- views -------------------------------------------------------------
    def exit_indices(self, side: str) -> np.ndarray:
        return self._sides[side].idx

    def exit_values(self, side: str) -> np.ndarray:
        return self._sides[side].val

    def rho(self, n) -> np.ndarray:
        """rho_n for integer n (array), rho_0 = 0, negative for n < 0."""
        n = np.asarray(n, dtype=np.int64)
        self.ensure_sites(min(int(n.min(initial=0)) + 1, 0), int(n.max(initial=0)))
        pos = np.concatenate([[0], self._sides["+"].idx])
        neg = np.concatenate([[0], self._sides["-"].idx])
        out = np.where(n >= 0, pos[np.clip(n, 0, None)], -neg[np.clip(-n, 0, None)])
        return out * self.dx

    def durations(self, side: str = "+") -> np.ndarray:
        """T_i = rho_i - rho_{i-1} in spatial units, along one half."""
        idx = np.concatenate([[0], self._sides[side].idx])
        return np.diff(idx) * self.dx

    def increments(self, side: str = "+") -> np.ndarray:
        """Exit-to-exit increments of W along one half (law d on '+', -d on '-')."""
        val = np.concatenate([[0.0], self._sides[side].val])
        return np.diff(val)

    def values(self, sites) -> np.ndarray:
        """sigma~ at integer sites."""
        sites = np.asarray(sites, dtype=np.int64)
        if sites.size == 0:
            return np.zeros(0)
        self.ensure_sites(int(sites.min()), int(sites.max()))
        inc_p = self.increments("+")
        inc_n = self.increments("-")
        out = np.empty(sites.shape, dtype=np.float64)
        p = sites >= 1
        out[p] = inc_p[sites[p] - 1]
        out[~p] = -inc_n[-sites[~p]]
        return out

    def range(self, lo: int, hi: int) -> np.ndarray:
        return self.values(np.arange(lo, hi + 1, dtype=np.int64))


def skorokhod_embed(
    w: SceneryBM, d: DistSpec, N: int, seed: int, n_neg: int | None = None, correction: bool = True
) -> SkorokhodSchedule:
    """Embed ``N`` scenery values on x > 0 (and ``n_neg``, default N, on x <= 0).

    With ``correction`` the exit barriers are pulled in by the mean overshoot
    of the discretely monitored walk, which removes the first-order bias in
    the exit levels and in E T.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    sched = SkorokhodSchedule(w, d, seed, correction)
    return sched.extend(N, N if n_neg is None else n_neg)
