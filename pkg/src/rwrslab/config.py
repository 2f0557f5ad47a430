"""``key = value`` experiment configuration files.

Grammar, one entry per line::

    # comment (also allowed after a value)
    key = value

Blank lines are ignored.  Keys are case-sensitive; each key may appear once.
``command`` is required.  ``dist`` takes ``kind[:param=value,...]`` with kind
one of Rademacher, StandardGaussian, UniformSym, TwoPoint (parameters ``a``
and ``p``), e.g. ``dist = TwoPoint:a=2,p=0.2``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .rng import U64_MAX
from .scenery import DistSpec

COMMANDS = ("rwrs", "bmbs", "couple", "embed-test", "sisq", "varsolve", "report")
DEFAULT_SEED = 2718

# per-command defaults for keys the file leaves out
DEFAULTS = {
    "rwrs": {"replicas": 500, "n_max": 2 ** 16, "dist": "Rademacher"},
    "bmbs": {"replicas": 2000, "m": 1024, "dist": "StandardGaussian"},
    "couple": {"replicas": 20, "n_max": 2 ** 18, "m": 64, "dist": "Rademacher", "w_refine": 128, "bootstrap": 1000},
    "embed-test": {"replicas": 10, "count": 100_000, "dx": 1e-4, "drift_dx": 1e-3, "dist": "StandardGaussian"},
    "sisq": {"replicas": 10_000, "m": 4096},
    "varsolve": {"grid_R": 8.0, "grid_h": 0.01, "tol": 1e-8, "max_iter": 20_000},
    "report": {},
}

_INT_KEYS = {"seed", "replicas", "n_max", "m", "workers", "w_refine", "bootstrap", "count", "max_iter"}
_FLOAT_KEYS = {"dx", "drift_dx", "grid_R", "grid_h", "tol"}
KEYS = ("command", "seed", "replicas", "n_max", "m", "dist", "out", "workers",
        "w_refine", "bootstrap", "count", "dx", "drift_dx", "grid_R", "grid_h", "tol", "max_iter")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass
class ExperimentConfig:
    command: str
    seed: int = DEFAULT_SEED
    replicas: int | None = None
    n_max: int | None = None
    m: int | None = None
    dist: DistSpec | None = None
    out: str = "out"
    workers: int = 1
    w_refine: int | None = None
    bootstrap: int | None = None
    count: int | None = None
    dx: float | None = None
    drift_dx: float | None = None
    grid_R: float | None = None
    grid_h: float | None = None
    tol: float | None = None
    max_iter: int | None = None
    explicit: frozenset = field(default_factory=frozenset, compare=False, repr=False)

    def with_defaults(self) -> "ExperimentConfig":
        cfg = dataclasses.replace(self)
        for key, value in DEFAULTS[self.command].items():
            if getattr(cfg, key) is None:
                setattr(cfg, key, DistSpec.parse(value) if key == "dist" else value)
        return cfg

    def to_text(self) -> str:
        lines = []
        for key in KEYS:
            value = getattr(self, key)
            if value is None:
                continue
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {k: (str(getattr(self, k)) if k == "dist" and getattr(self, k) is not None else getattr(self, k))
                for k in KEYS if getattr(self, k) is not None}


def _parse_int(raw: str) -> int:
    """Integers as ``65536``, ``65_536``, ``2**16``, ``2^16`` or ``1e5``."""
    text = raw.replace("_", "")
    for op in ("**", "^"):
        if op in text:
            base, _, exp = text.partition(op)
            return int(base) ** int(exp)
    try:
        return int(text)
    except ValueError:
        value = float(text)
        if not value.is_integer():
            raise ValueError("not an integer") from None
        return int(value)


def convert_value(key: str, raw: str):
    if key in _INT_KEYS:
        value = _parse_int(raw)
        if key == "seed":
            if not 0 <= value <= U64_MAX:
                raise ValueError("seed must be an unsigned 64-bit integer")
        elif value <= 0:
            raise ValueError("must be positive")
        return value
    if key in _FLOAT_KEYS:
        value = float(raw)
        if not value > 0:
            raise ValueError("must be positive")
        return value
    if key == "dist":
        return DistSpec.parse(raw)
    if key == "command":
        if raw not in COMMANDS:
            raise ValueError(f"unknown command; expected one of {', '.join(COMMANDS)}")
        return raw
    if not raw:
        raise ValueError("empty value")
    return raw


def parse_config(text: str) -> ExperimentConfig:
    """Parse a configuration file; raise ``ConfigError`` listing every problem."""
    errors = []
    seen = {}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, eq, raw = body.partition("=")
        key, raw = key.strip(), raw.strip()
        if not eq:
            errors.append(f"line {lineno}: expected 'key = value', got {body!r}")
            continue
        if key not in KEYS:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in seen:
            errors.append(f"line {lineno}: duplicate key {key!r} (first set on line {seen[key]})")
            continue
        seen[key] = lineno
        try:
            values[key] = convert_value(key, raw)
        except ValueError as exc:
            errors.append(f"line {lineno}: bad value for {key!r}: {raw!r} ({exc})")
    if "command" not in seen:
        errors.append("missing required key 'command'")
    if "m" in values and isinstance(values["m"], int):
        r = int(values["m"] ** 0.5 + 0.5)
        if r * r != values["m"] or r < 2:
            errors.append(f"line {seen['m']}: bad value for 'm': {values['m']} (must be a perfect square >= 4)")
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(**values, explicit=frozenset(values))
