"""Counter-based random streams.

Every random value in the package is a pure function of ``(seed, label,
counter)``.  A stream label is hashed together with the 64-bit seed into a
pair of 64-bit keys; the counter is then pushed through a keyed SplitMix64
finalizer.  Nothing is sequential, so any index can be read without
generating the ones before it, and distinct labels give independent streams.
"""
from __future__ import annotations

import hashlib
import math

import numba as nb
import numpy as np

U64_MAX = (1 << 64) - 1

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO = np.uint64(2)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_TWO_PI = 2.0 * math.pi


@nb.njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(cache=True, inline="always")
def keyed_bits(ka, kb, counter):
    return mix64(mix64(counter + ka) ^ kb)


@nb.njit(cache=True, inline="always")
def open_uniform(bits):
    # (0, 1]: safe for log
    return ((bits >> _S11) + _ONE) * _INV53


@nb.njit(cache=True, inline="always")
def closed_uniform(bits):
    # [0, 1)
    return (bits >> _S11) * _INV53


@nb.njit(cache=True, inline="always")
def normal_at(ka, kb, i):
    """Standard normal number ``i`` of a stream (Box-Muller on pair ``i // 2``)."""
    p = i >> _ONE
    u1 = open_uniform(keyed_bits(ka, kb, _TWO * p))
    u2 = closed_uniform(keyed_bits(ka, kb, _TWO * p + _ONE))
    rad = math.sqrt(-2.0 * math.log(u1))
    if i & _ONE:
        return rad * math.sin(_TWO_PI * u2)
    return rad * math.cos(_TWO_PI * u2)


@nb.njit(cache=True)
def _fill_bits(ka, kb, counters):
    out = np.empty(counters.shape[0], dtype=np.uint64)
    for i in range(counters.shape[0]):
        out[i] = keyed_bits(ka, kb, counters[i])
    return out


@nb.njit(cache=True)
def _fill_normals(ka, kb, counters):
    out = np.empty(counters.shape[0], dtype=np.float64)
    for i in range(counters.shape[0]):
        out[i] = normal_at(ka, kb, counters[i])
    return out


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= U64_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def stream_keys(seed: int, *label) -> tuple[int, int]:
    """Derive the two 64-bit keys of the stream ``label`` under ``seed``."""
    seed = check_seed(seed)
    text = "/".join(str(part) for part in label).encode()
    digest = hashlib.blake2b(text, digest_size=16, key=seed.to_bytes(8, "little")).digest()
    return int.from_bytes(digest[:8], "little"), int.from_bytes(digest[8:], "little")


def _counters(start, count):
    return np.arange(int(start), int(start) + int(count), dtype=np.uint64)


class Stream:
    """A labeled random-access stream.

    ``Stream(seed, "replica", 3, "B")`` and ``Stream(seed, "replica", 3, "W")``
    are independent; two ``Stream`` objects with the same seed and label are
    interchangeable.
    """

    __slots__ = ("seed", "label", "ka", "kb")

    def __init__(self, seed: int, *label):
        if not label:
            raise ValueError("a stream needs a label")
        self.seed = check_seed(seed)
        self.label = tuple(label)
        ka, kb = stream_keys(self.seed, *label)
        self.ka = np.uint64(ka)
        self.kb = np.uint64(kb)

    def __repr__(self):
        return f"Stream(seed={self.seed}, label={'/'.join(map(str, self.label))!r})"

    @property
    def keys(self):
        return self.ka, self.kb

    def child(self, *label) -> "Stream":
        return Stream(self.seed, *self.label, *label)

    def bits_at(self, counters) -> np.ndarray:
        counters = np.ascontiguousarray(counters, dtype=np.uint64)
        return _fill_bits(self.ka, self.kb, counters)

    def bits(self, start: int, count: int) -> np.ndarray:
        return self.bits_at(_counters(start, count))

    def uniforms(self, start: int, count: int) -> np.ndarray:
        """Uniform numbers on [0, 1) with 53 random bits."""
        return (self.bits(start, count) >> np.uint64(11)).astype(np.float64) * _INV53

    def uniforms_at(self, counters) -> np.ndarray:
        return (self.bits_at(counters) >> np.uint64(11)).astype(np.float64) * _INV53

    def normals(self, start: int, count: int) -> np.ndarray:
        return _fill_normals(self.ka, self.kb, _counters(start, count))

    def normals_at(self, counters) -> np.ndarray:
        counters = np.ascontiguousarray(counters, dtype=np.uint64)
        return _fill_normals(self.ka, self.kb, counters)

    def signs(self, start: int, count: int) -> np.ndarray:
        """Fair +-1 values; step ``k`` reads bit ``k % 64`` of word ``k // 64``."""
        return signs_from_words(self, int(start), int(count))


def signs_from_words(stream: Stream, start: int, count: int) -> np.ndarray:
    if count == 0:
        return np.empty(0, dtype=np.int8)
    w0 = start // 64
    w1 = (start + count - 1) // 64 + 1
    words = stream.bits(w0, w1 - w0)
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")
    offset = start - 64 * w0
    bits = bits[offset:offset + count].astype(np.int8)
    return 2 * bits - 1


def gaussian_increments(seed: int, stream: str, count: int, variance: float) -> np.ndarray:
    """``count`` i.i.d. centered Gaussian values with the given variance."""
    if not variance > 0:
        raise ValueError(f"variance must be positive, got {variance}")
    if count < 0:
        raise ValueError("count must be nonnegative")
    return math.sqrt(variance) * Stream(seed, stream).normals(0, count)


def replica_seed(seed: int, replica: int) -> int:
    """A per-replica 64-bit seed derived from the experiment seed."""
    ka, _ = stream_keys(seed, "replica-seed", int(replica))
    return ka
