import math

import numpy as np
import pytest

from rwrslab import dump
from rwrslab.brownian import BudgetError, bm_local_time, bmbs
from rwrslab.couple import (
    CouplingConfig,
    FitError,
    dyadic_checkpoints,
    exponent_suite,
    fit_exponent,
    run_coupling,
    run_replicas,
)
from rwrslab.embed import gap_between
from rwrslab.scenery import DistSpec, Scenery
from rwrslab.walk import rwrs, simulate_walk, walk_local_time


def test_dyadic_checkpoints():
    assert dyadic_checkpoints(2 ** 18) == [2 ** k for k in range(8, 19)]
    assert dyadic_checkpoints(2 ** 8) == [16, 32, 64, 128, 256]
    assert dyadic_checkpoints(1) == [1]
    with pytest.raises(ValueError):
        dyadic_checkpoints(0)


def test_micro_case_recomputed_from_dump(tmp_path):
    d = DistSpec("StandardGaussian")
    trace, obj = run_coupling(11, 1, 16, d, w_refine=4, checkpoints=[0, 1], keep_objects=True)
    path = dump.load(dump.save(obj["path"], tmp_path / "path.bin"))
    sched_dump = dump.load(dump.save(obj["schedule"], tmp_path / "sched.bin"))
    assert np.array_equal(path.positions, obj["path"].positions)

    walk = obj["embedded"].walk
    sigma = obj["schedule"]
    # K(0) = sigma~(0), K(1) = sigma~(0) + sigma~(S_1)
    s0, s1 = sigma.values(np.array([0, walk.positions[1]]))
    assert trace.K[0] == s0 and trace.K[1] == s0 + s1
    # sigma~ at site 1 is the first exit increment of the positive half
    if walk.positions[1] == 1:
        assert s1 == sched_dump.pos_val[0]
    else:
        assert s1 == -(sched_dump.neg_val[1] - sched_dump.neg_val[0])
    # G(1) = int L(1, x) dW(x) on B's lattice
    field = bm_local_time(path, 1.0)
    assert trace.G[1] == pytest.approx(bmbs(field, obj["w"]), rel=1e-12, abs=1e-15)
    # H(1) = sum over integers of sigma~_x L(1, x)
    lo, hi = field.integer_range()
    x = np.arange(lo, hi + 1)
    assert trace.H[1] == pytest.approx(float(np.dot(sigma.values(x), field.at_integers(x))), rel=1e-12, abs=1e-15)
    assert trace.gap[1] == gap_between(walk_local_time(walk, 1), field)
    assert trace.G[0] == 0.0 and trace.H[0] == 0.0


@pytest.mark.parametrize("kind", ["Rademacher", "StandardGaussian", "TwoPoint:a=2,p=0.2"])
def test_series_invariants(kind):
    trace = run_coupling(5, 2 ** 10, 16, DistSpec.parse(kind), w_refine=8)
    assert (np.diff(trace.D) >= 0).all()
    assert trace.triangle_holds()
    assert np.array_equal(trace.I, np.abs(trace.K - trace.H))
    assert np.array_equal(trace.J, np.abs(trace.H - trace.G))
    rows = trace.at_checkpoints()
    assert list(rows) == ["n", "K_max", "G_max", "D", "I", "J", "gap"]
    assert rows["n"].tolist() == [2 ** k for k in range(6, 11)]


def test_h_matches_local_time_sum():
    trace, obj = run_coupling(6, 2 ** 9, 16, DistSpec("UniformSym"), w_refine=4, keep_objects=True)
    path, sigma = obj["path"], obj["schedule"]
    for n in (1, 17, 200, 512):
        field = bm_local_time(path, float(n))
        lo, hi = field.integer_range()
        x = np.arange(lo, hi + 1)
        assert trace.H[n] == pytest.approx(float(np.dot(sigma.values(x), field.at_integers(x))), rel=1e-10, abs=1e-12)


def test_coupling_is_deterministic():
    d = DistSpec("Rademacher")
    a = run_coupling(7, 2 ** 9, 16, d, w_refine=4)
    b = run_coupling(7, 2 ** 9, 16, d, w_refine=4)
    for name in ("K", "G", "H", "gap"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_budget():
    with pytest.raises(BudgetError):
        run_coupling(1, 2 ** 10, 64, DistSpec("Rademacher"), max_steps=10_000)


def test_worker_count_does_not_change_results():
    cfg = CouplingConfig(n_max=2 ** 8, m=16, w_refine=4)
    one = run_replicas(3, 3, cfg, workers=1)
    two = run_replicas(3, 3, cfg, workers=2)
    for a, b in zip(one, two):
        assert a["replica"] == b["replica"]
        for k in ("n", "K_max", "G_max", "D", "I", "J", "gap"):
            assert np.array_equal(a[k], b[k])


def test_suite_needs_twenty_replicas():
    with pytest.raises(ValueError):
        exponent_suite(1, 19, CouplingConfig(n_max=2 ** 8, m=16))


# --- fits -------------------------------------------------------------------------


def test_fit_exact_power_law():
    n = np.array([2.0 ** k for k in range(4, 12)])
    f = fit_exponent(n, 3 * n ** 0.625)
    assert f.slope == pytest.approx(0.625, abs=1e-12)
    assert f.intercept == pytest.approx(math.log(3), abs=1e-12)
    assert f.ci_low <= f.slope <= f.ci_high
    assert f.ci_high - f.ci_low < 1e-9


def test_fit_constant_series():
    n = np.array([2.0 ** k for k in range(4, 12)])
    f = fit_exponent(n, np.full(n.size, 5.0))
    assert f.slope == pytest.approx(0.0, abs=1e-12)


def test_fit_replicas():
    rng = np.random.default_rng(0)
    n = np.array([2.0 ** k for k in range(8, 19)])
    vals = n ** 0.5 * np.exp(rng.normal(0, 0.3, size=(40, n.size)))
    f = fit_exponent(n, vals, bootstrap=500, seed=1)
    assert f.ci_low <= 0.5 <= f.ci_high
    assert len(f.replica_slopes) == 40
    assert abs(f.median_replica_slope - 0.5) < 0.05


def test_fit_is_deterministic_in_seed():
    n = np.array([2.0 ** k for k in range(4, 12)])
    v = n ** 0.3 * (1 + 0.1 * np.sin(n))
    assert fit_exponent(n, v, seed=4) == fit_exponent(n, v, seed=4)


def test_fit_errors_and_zero_flag():
    with pytest.raises(FitError):
        fit_exponent([1, 2, 4, 8], [1, 2, 3, 4])
    with pytest.raises(FitError):
        fit_exponent([1, 2, 4, 8, 16], [0, 0, 0, 0, 0])
    f = fit_exponent([1, 2, 4, 8, 16], [0, 2, 3, 4, 5])
    assert f.zeros_replaced


def test_k_max_grows_like_three_quarters():
    R, n_max = 60, 2 ** 16
    checkpoints = np.array([2 ** k for k in range(8, 17)])
    rows = []
    d = DistSpec("Rademacher")
    for i in range(R):
        K = rwrs(simulate_walk(i, n_max), Scenery(i, d), n_max)
        rows.append(np.maximum.accumulate(np.abs(K))[checkpoints])
    f = fit_exponent(checkpoints, np.array(rows), bootstrap=300)
    assert abs(f.slope - 0.75) < 0.06
