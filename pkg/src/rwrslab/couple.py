"""The full K/G coupling, its discrepancy series and growth-exponent fits."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .brownian import BudgetError, MAX_FINE_STEPS, SceneryBM, bm_local_time, lattice_root, simulate_fine_bm
from .embed import EmbeddingExhausted, SkorokhodSchedule, gap_between, revesz_embed
from .rng import Stream, replica_seed
from .scenery import DistSpec
from .walk import rwrs, walk_local_time

# growth exponents from the theory and the one-sided thresholds applied to them
THEORY = {"D": 5 / 8, "I": 1 / 2, "J": 5 / 8, "gap": 1 / 4}
THRESHOLDS = {"D": 0.72, "I": 0.60, "J": 0.72, "gap": 0.35}
DEFAULT_W_REFINE = 128
MIN_FIT_POINTS = 5


def dyadic_checkpoints(n_max: int, lowest: int = 2 ** 8, min_points: int = MIN_FIT_POINTS) -> list[int]:
    """Powers of two in [lowest, n_max]; reaches lower when that gives too few."""
    if n_max < 1:
        raise ValueError("n_max must be positive")
    top = int(math.floor(math.log2(n_max)))
    bottom = int(math.log2(lowest))
    bottom = max(0, min(bottom, top - min_points + 1))
    points = [2 ** k for k in range(bottom, top + 1)]
    return points or [n_max]


@nb.njit(cache=True)
def _dd_add(hi, lo, x):
    s = hi + x
    bp = s - hi
    lo += (hi - (s - bp)) + (x - bp)
    hi = s + lo
    lo = lo - (hi - s)
    return hi, lo


@nb.njit(cache=True)
def _fine_series(positions, n_max, M, r, dw, dw_lo, sig, sig_lo):
    """G(n) and H(n) = sum_x sigma~_x L(n, x) for n = 0..n_max.

    Both are running sums over fine steps k < n M of what the path meets at
    its site: the cell increment of W, and sigma~ when the site is an integer.
    """
    G = np.zeros(n_max + 1)
    H = np.zeros(n_max + 1)
    gh = 0.0
    gl = 0.0
    hh = 0.0
    hl = 0.0
    k = 0
    for n in range(1, n_max + 1):
        stop = n * M
        while k < stop:
            b = positions[k]
            gh, gl = _dd_add(gh, gl, dw[b - dw_lo])
            if b % r == 0:
                hh, hl = _dd_add(hh, hl, sig[b // r - sig_lo])
            k += 1
        G[n] = (gh + gl) / r
        H[n] = (hh + hl) / r
    return G, H


@dataclass
class CouplingTrace:
    seed: int
    n_max: int
    m: int
    m_w: int
    dist: str
    checkpoints: np.ndarray
    K: np.ndarray
    G: np.ndarray
    H: np.ndarray  # sum_x sigma~_x L(n, x)
    gap: np.ndarray  # at checkpoints
    streams: dict = field(default_factory=dict)

    @property
    def D(self) -> np.ndarray:
        return np.maximum.accumulate(np.abs(self.K - self.G))

    @property
    def I(self) -> np.ndarray:  # noqa: E743
        return np.abs(self.K - self.H)

    @property
    def J(self) -> np.ndarray:
        return np.abs(self.H - self.G)

    def triangle_holds(self, rtol: float = 1e-12) -> bool:
        """D(n) <= max_{m<=n} I(m) + max_{m<=n} J(m) for every n (to rounding)."""
        bound = np.maximum.accumulate(self.I) + np.maximum.accumulate(self.J)
        slack = rtol * (np.abs(self.K) + np.abs(self.G) + np.abs(self.H) + 1.0)
        return bool(np.all(self.D <= bound + np.maximum.accumulate(slack)))

    def at_checkpoints(self) -> dict:
        c = self.checkpoints
        return {
            "n": c.copy(),
            "K_max": np.maximum.accumulate(np.abs(self.K))[c],
            "G_max": np.maximum.accumulate(np.abs(self.G))[c],
            "D": self.D[c],
            "I": self.I[c],
            "J": self.J[c],
            "gap": self.gap.copy(),
        }


def run_coupling(
    seed: int,
    n_max: int,
    m: int,
    d: DistSpec,
    w_refine: int = DEFAULT_W_REFINE,
    checkpoints=None,
    max_steps: int = MAX_FINE_STEPS,
    keep_objects: bool = False,
):
    """Build K and G from one (B, W) pair and measure how far apart they are.

    Walker side: B -> unit exits -> S, xi; B -> L.  Scenery side: W ->
    Skorokhod levels -> sigma~.  K = sum sigma~(S_k), G = int L dW.
    W lives on a lattice ``w_refine`` times finer than B's.
    """
    r = lattice_root(m)
    if n_max < 1:
        raise ValueError("n_max must be positive")
    if n_max * m > max_steps:
        raise BudgetError(f"n_max * m = {n_max * m} fine steps exceeds the budget of {max_steps}")
    checkpoints = np.asarray(
        dyadic_checkpoints(n_max) if checkpoints is None else checkpoints, dtype=np.int64
    )
    if checkpoints.min() < 0 or checkpoints.max() > n_max:
        raise ValueError("checkpoints must lie in [0, n_max]")

    # walker side: enough fine path to hold n_max unit exits
    margin = 6.0 * math.sqrt(n_max) + 8.0
    while True:
        T = n_max + margin
        if T * m > max_steps:
            T = max_steps / m
        path = simulate_fine_bm(seed, T, m, label=("B",), max_steps=max_steps)
        try:
            emb = revesz_embed(path, n_max)
            break
        except EmbeddingExhausted:
            if T * m >= max_steps:
                raise BudgetError("fine-step budget exhausted before n_max unit exits") from None
            margin *= 2
    walk = emb.walk
    fine = path.positions[: n_max * m]

    # integer sites touched by S or by B up to time n_max
    b_lo, b_hi = int(fine.min()), int(fine.max())
    x_lo = min(int(walk.positions.min()), -((-b_lo) // r))
    x_hi = max(int(walk.positions.max()), b_hi // r)

    # scenery side
    w = SceneryBM(seed, m * w_refine ** 2, label=("W",))
    sched = SkorokhodSchedule(w, d, seed)
    sched.ensure_sites(x_lo, x_hi)
    sigma = sched.range(x_lo, x_hi)

    K = rwrs(walk, sched, n_max)
    dw = w.cell_increments(r, b_lo, b_hi)
    G, H = _fine_series(fine, n_max, m, r, dw, b_lo, sigma, x_lo)

    gap = np.empty(checkpoints.shape[0])
    for i, n in enumerate(checkpoints):
        gap[i] = gap_between(walk_local_time(walk, int(n)), bm_local_time(path, float(n)))

    trace = CouplingTrace(
        seed=seed,
        n_max=n_max,
        m=m,
        m_w=w.m_w,
        dist=str(d),
        checkpoints=checkpoints,
        K=K,
        G=G,
        H=H,
        gap=gap,
        streams={
            "walker": [Stream(seed, *path.label).label],
            "scenery": [s.label for s in w.streams.values()]
            + [side.sampler.stream.label for side in sched._sides.values()],
        },
    )
    if keep_objects:
        return trace, {"path": path, "embedded": emb, "w": w, "schedule": sched}
    return trace


# --- exponent fitting ----------------------------------------------------------


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r2: float
    ci_low: float
    ci_high: float
    n_points: int
    zeros_replaced: bool = False
    replica_slopes: tuple = ()

    @property
    def median_replica_slope(self) -> float:
        if not self.replica_slopes:
            return self.slope
        return float(np.median(self.replica_slopes))

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_points": self.n_points,
            "zeros_replaced": self.zeros_replaced,
            "median_replica_slope": self.median_replica_slope,
        }


class FitError(ValueError):
    pass


def _ls(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + icpt)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0
    return float(slope), float(icpt), r2


def _positive(values):
    v = np.array(values, dtype=np.float64)
    replaced = False
    if np.any(v <= 0):
        pos = v[v > 0]
        if pos.size == 0:
            raise FitError("series has no positive values")
        v = np.where(v > 0, v, pos.min())
        replaced = True
    return v, replaced


def fit_exponent(n, values, bootstrap: int = 1000, seed: int = 0, label=()) -> ExponentFit:
    """Least-squares slope of log(value) against log(n).

    ``values`` is one series (shape ``(q,)``) or replicas of it (shape
    ``(R, q)``).  With replicas the fitted curve is the replica mean and the
    95% interval comes from resampling replicas; a single series is
    resampled point-wise.  Resampling draws from the stream
    ("bootstrap", *label) under ``seed``.
    """
    n = np.asarray(n, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    ok = n > 0
    if int(ok.sum()) < MIN_FIT_POINTS:
        raise FitError(f"need at least {MIN_FIT_POINTS} checkpoints, got {int(ok.sum())}")
    x = np.log(n[ok])
    rng = np.random.default_rng(Stream(seed, "bootstrap", *label).bits(0, 2))
    if values.ndim == 1:
        v, replaced = _positive(values[ok])
        y = np.log(v)
        slope, icpt, r2 = _ls(x, y)
        boots = []
        q = x.shape[0]
        for _ in range(bootstrap):
            pick = rng.integers(0, q, q)
            if np.unique(pick).size < 2:
                continue
            boots.append(_ls(x[pick], y[pick])[0])
        replica_slopes = ()
    else:
        vals = values[:, ok]
        replaced = False
        curve, replaced = _positive(vals.mean(axis=0))
        slope, icpt, r2 = _ls(x, np.log(curve))
        R = vals.shape[0]
        boots = []
        for _ in range(bootstrap):
            pick = rng.integers(0, R, R)
            c, _ = _positive(vals[pick].mean(axis=0))
            boots.append(_ls(x, np.log(c))[0])
        replica_slopes = []
        for row in vals:
            rv, rr = _positive(row)
            replaced = replaced or rr
            replica_slopes.append(_ls(x, np.log(rv))[0])
        replica_slopes = tuple(replica_slopes)
    if boots:
        lo, hi = np.percentile(boots, [2.5, 97.5])
    else:
        lo = hi = slope
    return ExponentFit(
        slope, icpt, r2, float(min(lo, slope)), float(max(hi, slope)), int(ok.sum()), replaced, replica_slopes
    )


# --- experiment suite --------------------------------------------------------------


@dataclass(frozen=True)
class CouplingConfig:
    n_max: int = 2 ** 18
    m: int = 64
    dist: str = "Rademacher"
    w_refine: int = DEFAULT_W_REFINE
    bootstrap: int = 1000


def replica_rows(args) -> dict:
    """Checkpoint summary of one replica (runs in worker processes)."""
    seed, replica, cfg = args
    trace = run_coupling(
        replica_seed(seed, replica), cfg.n_max, cfg.m, DistSpec.parse(cfg.dist), w_refine=cfg.w_refine
    )
    out = trace.at_checkpoints()
    out["triangle"] = trace.triangle_holds()
    out["replica"] = replica
    return out


def run_replicas(seed: int, R: int, cfg: CouplingConfig, workers: int = 1) -> list[dict]:
    jobs = [(seed, i, cfg) for i in range(R)]
    if workers <= 1:
        return [replica_rows(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order
        return list(pool.map(replica_rows, jobs))


def summarize(rows: list[dict], seed: int, bootstrap: int = 1000) -> dict:
    n = rows[0]["n"]
    report = {"checkpoints": [int(v) for v in n], "replicas": len(rows), "series": {}}
    for name in ["D", "I", "J", "gap", "K_max"]:
        mat = np.vstack([r[name] for r in rows])
        try:
            fit = fit_exponent(n, mat, bootstrap=bootstrap, seed=seed, label=(name,))
        except FitError as exc:
            report["series"][name] = {"error": str(exc), "pass": None}
            continue
        entry = fit.as_dict()
        if name in THRESHOLDS:
            entry["theory"] = THEORY[name]
            entry["threshold"] = THRESHOLDS[name]
            entry["margin"] = THRESHOLDS[name] - THEORY[name]
            entry["pass"] = bool(fit.ci_high <= THRESHOLDS[name])
        else:
            entry["theory"] = 0.75
        report["series"][name] = entry
    report["triangle_all"] = bool(all(r["triangle"] for r in rows))
    return report


def exponent_suite(seed: int, R: int, cfg: CouplingConfig = CouplingConfig(), workers: int = 1):
    """Run ``R`` coupled replicas and fit growth exponents of D, I, J and the gap."""
    if R < 20:
        raise ValueError(f"the exponent suite needs at least 20 replicas, got {R}")
    rows = run_replicas(seed, R, cfg, workers)
    return rows, summarize(rows, seed, cfg.bootstrap)
