import math

import numpy as np
import pytest
from scipy import stats

from rwrslab.brownian import SceneryBM, bm_local_time, simulate_fine_bm
from rwrslab.embed import (
    EmbeddingExhausted,
    SkorokhodPairSampler,
    SkorokhodSchedule,
    embedding_gap,
    revesz_embed,
    skorokhod_embed,
)
from rwrslab.rng import Stream
from rwrslab.scenery import DistSpec
from rwrslab.walk import walk_local_time

# --- walker embedding -------------------------------------------------------------


def test_walk_read_off_the_path():
    p = simulate_fine_bm(1, 300.0, 64)
    e = revesz_embed(p, 200)
    assert np.array_equal(e.walk.positions * 8, p.positions[e.exit_steps])
    assert set(np.unique(e.walk.steps)) <= {-1, 1}
    assert e.walk.positions[0] == 0 and e.exit_steps[0] == 0
    assert (np.diff(e.exit_steps) > 0).all()


def test_exit_durations_mean_and_variance():
    m = 64
    p = simulate_fine_bm(2, 21_000.0, m)
    e = revesz_embed(p, 20_000)
    d = e.durations
    se = d.std(ddof=1) / math.sqrt(d.size)
    assert abs(d.mean() - 1) <= 4 * se
    # the lattice exit time from (-r, r) has variance (2/3)(1 - 1/m) in time units
    target = 2 / 3 * (1 - 1 / m)
    assert abs(d.var(ddof=1) / target - 1) <= 0.1


def test_embedding_runs_out():
    p = simulate_fine_bm(1, 2.0, 64)
    with pytest.raises(EmbeddingExhausted):
        revesz_embed(p, 1000)


def test_gap_checks_its_inputs():
    p = simulate_fine_bm(1, 100.0, 64)
    e = revesz_embed(p, 50)
    other = simulate_fine_bm(2, 100.0, 64)
    with pytest.raises(ValueError):
        embedding_gap(e, bm_local_time(other, 50.0), 50)
    with pytest.raises(ValueError):
        embedding_gap(e, bm_local_time(p, 40.0), 50)
    gap = embedding_gap(e, bm_local_time(p, 50.0), 50)
    xi = walk_local_time(e.walk, 50)
    L = bm_local_time(p, 50.0)
    x = np.arange(-60, 61)
    assert gap == pytest.approx(np.max(np.abs(xi.at(x) - L.at_integers(x))))


# --- exit pairs ------------------------------------------------------------------


def _exit_from_pairs(u, v, stream):
    """Exit value of an exact Brownian motion from (u, v): v w.p. -u / (v - u)."""
    up = stream.uniforms(0, u.size) < -u / (v - u)
    return np.where(up, v, u)


@pytest.mark.parametrize("kind", ["StandardGaussian", "UniformSym"])
def test_pair_sampler_embeds_the_law_exactly(kind):
    d = DistSpec(kind)
    s = SkorokhodPairSampler(d, 5, "pairs")
    u, v = s.pairs(0, 200_000)
    assert (u < 0).all() and (v > 0).all()
    x = _exit_from_pairs(u, v, Stream(5, "coin"))
    assert stats.kstest(x, d.cdf).statistic < 0.005
    # E T = E(-U V) = E sigma^2 = 1 for an exact Brownian motion
    t = -u * v
    assert abs(t.mean() - 1) <= 4 * t.std() / math.sqrt(t.size)


def test_pair_sampler_is_random_access():
    s = SkorokhodPairSampler(DistSpec("StandardGaussian"), 5, "pairs")
    u, v = s.pairs(0, 100)
    u2, v2 = s.pairs(40, 10)
    assert np.array_equal(u[40:50], u2) and np.array_equal(v[40:50], v2)


def test_two_point_pairs_are_the_support():
    s = SkorokhodPairSampler(DistSpec.parse("TwoPoint:a=2,p=0.2"), 1)
    u, v = s.pairs(0, 3)
    assert np.allclose(u, -0.5) and np.allclose(v, 2.0)


# --- Skorokhod schedule -----------------------------------------------------------------


def test_exit_values_recompute_bit_exactly():
    w = SceneryBM(3, 100 ** 2)
    sched = skorokhod_embed(w, DistSpec("StandardGaussian"), 300, 3, n_neg=200)
    for side in "+-":
        idx, val = sched.exit_indices(side), sched.exit_values(side)
        fresh = SceneryBM(3, 100 ** 2)
        assert np.array_equal(fresh.at_index(side, idx), val)
        assert (np.diff(idx) > 0).all()


def test_growth_is_bit_identical():
    w1 = SceneryBM(4, 50 ** 2)
    a = SkorokhodSchedule(w1, DistSpec("UniformSym"), 4).extend(500, 500)
    w2 = SceneryBM(4, 50 ** 2)
    b = SkorokhodSchedule(w2, DistSpec("UniformSym"), 4)
    for k in (1, 17, 300, 500):
        b.extend(k, k // 2)
    b.extend(500, 500)
    assert np.array_equal(a.range(-499, 500), b.range(-499, 500))


def test_rho_shape():
    w = SceneryBM(5, 100 ** 2)
    sched = skorokhod_embed(w, DistSpec("Rademacher"), 100, 5)
    r = sched.rho(np.arange(-50, 51))
    assert r[50] == 0
    assert (np.diff(r[50:]) > 0).all() and (np.diff(r[:51]) > 0).all()
    assert (r[:50] < 0).all()


@pytest.mark.parametrize("kind", ["Rademacher", "TwoPoint:a=2,p=0.2"])
def test_two_point_support_up_to_overshoot(kind):
    d = DistSpec.parse(kind)
    dx = 1e-4
    w = SceneryBM(6, round(1 / dx) ** 2)
    sched = skorokhod_embed(w, d, 2000, 6, n_neg=2000)
    pts, probs = d.atoms()
    sites = np.arange(-1999, 2001)
    vals = sched.values(sites)
    dist = np.min(np.abs(vals[:, None] - pts[None, :]), axis=1)
    assert dist.max() <= 6 * math.sqrt(dx)
    # snapped to the nearest atom the law is d on both halves
    snapped = pts[np.argmin(np.abs(vals[:, None] - pts[None, :]), axis=1)]
    for half in (snapped[sites <= 0], snapped[sites > 0]):
        freq = np.mean(half == pts[1])
        assert abs(freq - probs[1]) <= 4 * math.sqrt(probs[1] * probs[0] / half.size)


def _ks(dx, count, seed, correction=True):
    d = DistSpec("StandardGaussian")
    w = SceneryBM(seed, round(1 / dx) ** 2)
    sched = SkorokhodSchedule(w, d, seed, correction).extend(count, 0)
    return stats.kstest(sched.increments("+"), d.cdf).statistic, sched.durations("+")


def test_ks_shrinks_with_resolution():
    coarse, _ = _ks(1e-1, 20_000, 7)
    fine, _ = _ks(2.5e-2, 20_000, 7)
    noise = 1.36 / math.sqrt(20_000)
    assert fine <= coarse + noise
    assert fine <= 0.02


def test_mean_exit_duration_with_and_without_correction():
    _, t = _ks(1e-2, 20_000, 8)
    se = t.std(ddof=1) / math.sqrt(t.size)
    assert abs(t.mean() - 1) <= 3 * se
    _, raw = _ks(1e-2, 20_000, 8, correction=False)
    # without the overshoot correction the grid exit overshoots both barriers
    assert raw.mean() - 1 > 10 * se


def test_embedded_scenery_independence():
    w = SceneryBM(9, 30 ** 2)
    sched = skorokhod_embed(w, DistSpec("StandardGaussian"), 20_000, 9, n_neg=20_000)
    v = sched.range(-19_999, 20_000)
    n = v.size - 1
    assert abs(np.corrcoef(v[:-1], v[1:])[0, 1]) <= 4 / math.sqrt(n)
    assert abs(np.corrcoef(v[:-1] ** 2, v[1:] ** 2)[0, 1]) <= 4 / math.sqrt(n)
    t = sched.durations("+")
    assert abs(np.corrcoef(t[:-1], t[1:])[0, 1]) <= 4 / math.sqrt(t.size)


def test_negative_side_law_for_asymmetric_scenery():
    d = DistSpec.parse("TwoPoint:a=2,p=0.2")
    w = SceneryBM(10, 100 ** 2)
    sched = skorokhod_embed(w, d, 10, 10, n_neg=5000)
    neg = sched.values(np.arange(-4999, 1))
    assert abs(np.mean(neg > 1.0) - 0.2) <= 4 * math.sqrt(0.16 / neg.size)
    assert abs(neg.mean()) <= 4 / math.sqrt(neg.size)


def test_validation():
    w = SceneryBM(1, 100)
    with pytest.raises(ValueError):
        skorokhod_embed(w, DistSpec("Rademacher"), 0, 1)
