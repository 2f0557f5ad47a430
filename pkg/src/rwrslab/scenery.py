"""Scenery laws and reproducible sceneries on the integers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .rng import Stream, check_seed

KINDS = ("Rademacher", "StandardGaussian", "UniformSym", "TwoPoint")
_ALIASES = {k.lower(): k for k in KINDS}
_HEAVY = {"cauchy", "studentt", "student", "pareto", "levy", "stable"}
SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class DistSpec:
    """A centered, unit-variance law with all moments finite.

    ``TwoPoint(a, p)`` puts mass ``p`` on a positive point and ``1 - p`` on a
    negative one, in ratio ``a : -a p / (1 - p)``, then rescales to unit
    variance.  After rescaling the support is
    ``{sqrt((1-p)/p), -sqrt(p/(1-p))}`` whatever ``a`` is.
    """

    kind: str
    a: float | None = None
    p: float | None = None
    negated: bool = field(default=False, compare=True)

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            if str(self.kind).lower() in _HEAVY:
                raise ValueError(f"{self.kind}: heavy-tailed laws are not supported")
            raise ValueError(f"unknown distribution kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "TwoPoint":
            if self.a is None or self.p is None:
                raise ValueError("TwoPoint needs parameters a and p")
            a, p = float(self.a), float(self.p)
            if not (a > 0 and math.isfinite(a)):
                raise ValueError(f"TwoPoint: a must be positive, got {a}")
            if not 0 < p < 1:
                raise ValueError(f"TwoPoint: p must lie in (0, 1), got {p}")
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "p", p)
        elif self.a is not None or self.p is not None:
            raise ValueError(f"{kind} takes no parameters")

    # -- parsing -----------------------------------------------------------
    @classmethod
    def parse(cls, text: str) -> "DistSpec":
        """Parse ``kind[:param=value,...]``, e.g. ``TwoPoint:a=2,p=0.2``."""
        text = text.strip()
        kind, _, rest = text.partition(":")
        params = {}
        if rest.strip():
            for item in rest.split(","):
                key, eq, value = item.partition("=")
                key = key.strip()
                if not eq or not key:
                    raise ValueError(f"malformed parameter {item!r} in {text!r}")
                if key in params:
                    raise ValueError(f"parameter {key!r} given twice in {text!r}")
                try:
                    params[key] = float(value)
                except ValueError:
                    raise ValueError(f"parameter {key}={value!r} is not a number") from None
        unknown = set(params) - {"a", "p"}
        if unknown:
            raise ValueError(f"unknown parameter(s) {sorted(unknown)} in {text!r}")
        return cls(kind.strip(), **params)

    def __str__(self):
        if self.kind == "TwoPoint":
            body = f"TwoPoint:a={self.a!r},p={self.p!r}"
        else:
            body = self.kind
        return f"-({body})" if self.negated else body

    # -- law -----------------------------------------------------------------
    @property
    def symmetric(self) -> bool:
        return self.kind != "TwoPoint" or self.p == 0.5

    def reflected(self) -> "DistSpec":
        """The law of ``-sigma``."""
        if self.symmetric:
            return self
        return DistSpec(self.kind, self.a, self.p, negated=not self.negated)

    def atoms(self):
        """Support points and weights for discrete kinds, else None."""
        if self.kind == "Rademacher":
            pts, w = np.array([-1.0, 1.0]), np.array([0.5, 0.5])
        elif self.kind == "TwoPoint":
            p = self.p
            pts = np.array([-math.sqrt(p / (1 - p)), math.sqrt((1 - p) / p)])
            w = np.array([1 - p, p])
        else:
            return None
        if self.negated:
            pts, w = -pts[::-1], w[::-1]
        return pts, w

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.negated:
            base = DistSpec(self.kind, self.a, self.p)
            # P(-s <= x) = 1 - P(s < -x); continuous kinds have no atoms
            if base.atoms() is None:
                return 1.0 - base.cdf(-x)
            pts, w = self.atoms()
            return np.sum(w * (x[..., None] >= pts), axis=-1)
        if self.kind == "StandardGaussian":
            return special.ndtr(x)
        if self.kind == "UniformSym":
            return np.clip((x + SQRT3) / (2 * SQRT3), 0.0, 1.0)
        pts, w = self.atoms()
        return np.sum(w * (x[..., None] >= pts), axis=-1)

    def abs_moment(self, q: float) -> float:
        """Exact E|sigma|^q."""
        if self.kind == "StandardGaussian":
            return 2 ** (q / 2) * math.gamma((q + 1) / 2) / math.sqrt(math.pi)
        if self.kind == "UniformSym":
            return SQRT3 ** q / (q + 1)
        pts, w = self.atoms()
        return float(np.sum(w * np.abs(pts) ** q))

    def from_uniforms(self, u: np.ndarray, normals: np.ndarray | None = None) -> np.ndarray:
        """Map uniforms on [0, 1) (or ready-made normals) to draws of this law."""
        if self.kind == "StandardGaussian":
            out = normals
        elif self.kind == "UniformSym":
            out = SQRT3 * (2.0 * u - 1.0)
        elif self.kind == "Rademacher":
            out = np.where(u < 0.5, -1.0, 1.0)
        else:
            p = self.p
            out = np.where(u < p, math.sqrt((1 - p) / p), -math.sqrt(p / (1 - p)))
        return -out if self.negated else out


def fold_site(x) -> np.ndarray:
    """Injective map Z -> N: 0, -1, 1, -2, 2, ... -> 0, 1, 2, 3, 4, ..."""
    x = np.asarray(x, dtype=np.int64)
    return np.where(x >= 0, 2 * x, -2 * x - 1).astype(np.uint64)


@dataclass(frozen=True)
class Scenery:
    """An i.i.d. field of ``dist`` values on Z, readable at any site."""

    seed: int
    dist: DistSpec
    label: str = "scenery"

    def __post_init__(self):
        object.__setattr__(self, "seed", check_seed(self.seed))

    @property
    def stream(self) -> Stream:
        return Stream(self.seed, self.label)

    def values(self, sites) -> np.ndarray:
        counters = fold_site(sites)
        stream = self.stream
        if self.dist.kind == "StandardGaussian":
            return self.dist.from_uniforms(None, stream.normals_at(counters))
        return self.dist.from_uniforms(stream.uniforms_at(counters))

    def range(self, lo: int, hi: int) -> np.ndarray:
        """Values at sites ``lo..hi`` inclusive."""
        return self.values(np.arange(lo, hi + 1, dtype=np.int64))


def scenery_at(s: Scenery, x):
    """Scenery value at site ``x`` (an int or an integer array)."""
    if np.ndim(x) == 0:
        return float(s.values(np.array([int(x)]))[0])
    return s.values(x)


@dataclass
class MomentReport:
    dist: DistSpec
    n: int
    mean: float
    mean_se: float
    second: float
    second_se: float
    abs_moments: dict
    abs_moments_se: dict
    exact: dict
    violation: bool

    def as_dict(self):
        return {
            "dist": str(self.dist),
            "n": self.n,
            "mean": self.mean,
            "mean_se": self.mean_se,
            "second": self.second,
            "second_se": self.second_se,
            "abs_moments": {str(k): v for k, v in self.abs_moments.items()},
            "abs_moments_se": {str(k): v for k, v in self.abs_moments_se.items()},
            "exact": {str(k): v for k, v in self.exact.items()},
            "violation": self.violation,
        }


def validate_moments(d: DistSpec, p_max: int, n: int, seed: int) -> MomentReport:
    """Estimate E sigma, E sigma^2 and E|sigma|^p, p <= p_max, from ``n`` draws.

    Flags a violation when the mean or the second moment is more than four
    standard errors away from 0 resp. 1.
    """
    if n < 1000:
        raise ValueError(f"need at least 1000 samples, got {n}")
    if p_max < 2 or p_max % 2:
        raise ValueError(f"p_max must be an even integer >= 2, got {p_max}")
    # the standard error of the p_max-th moment needs the 2 p_max-th moment
    if not math.isfinite(d.abs_moment(2 * p_max)):
        raise ValueError(f"{d}: moment of order {2 * p_max} is infinite")
    x = Scenery(seed, d, label="moments").range(0, n - 1)
    a = np.abs(x)
    se = lambda v: float(np.std(v, ddof=1) / math.sqrt(n))  # noqa: E731
    mean, second = float(x.mean()), float(np.mean(x * x))
    mean_se, second_se = se(x), se(x * x)
    abs_m, abs_se, exact = {}, {}, {}
    for p in range(1, p_max + 1):
        v = a ** p
        abs_m[p] = float(v.mean())
        abs_se[p] = se(v)
        exact[p] = d.abs_moment(p)
    # a two-point law with p = 1/2 has zero spread in sigma^2
    tiny = 1e-12
    violation = (abs(mean) > 4 * max(mean_se, tiny)) or (abs(second - 1) > 4 * max(second_se, tiny))
    return MomentReport(d, n, mean, mean_se, second, second_se, abs_m, abs_se, exact, bool(violation))
