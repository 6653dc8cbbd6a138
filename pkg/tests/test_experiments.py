import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from barronfunc.errors import StructureError, ValidationError
from barronfunc.experiments import (BaselineSpec, convergence_study, cutoff_study,
                                    deeponet_baseline, fit_loglog_slope, lattice_points,
                                    matched_widths, per_coordinate_study, point_values)
from barronfunc.function_space import CoeffVector, evaluate
from barronfunc.functional_zoo import make_bilinear, make_constant, make_cubic, make_linear
from barronfunc.shallow_net import ShallowNet, TrainConfig

FAST = TrainConfig(epochs=4, batch_size=64)


@given(st.floats(-3, 3), st.floats(0.01, 100))
@settings(max_examples=100)
def test_slope_recovers_exact_power_law(p, C):
    m = np.array([4, 8, 16, 32, 64, 128, 256], dtype=float)
    slope, intercept, half = fit_loglog_slope(m, C * m ** p)
    assert abs(slope - p) < 1e-10
    assert intercept == pytest.approx(math.log(C), abs=1e-9)
    assert half < 1e-8


def test_slope_needs_four_points():
    with pytest.raises(ValidationError):
        fit_loglog_slope([1, 2, 3], [1, 2, 3])


def test_convergence_report_schema_and_determinism():
    f = make_cubic([0.5, 0.25, 0.125])
    a = convergence_study(f, [2, 4, 8, 16], FAST, 256, 128, seeds=2, seed=3)
    b = convergence_study(f, [2, 4, 8, 16], FAST, 256, 128, seeds=2, seed=3)
    assert len(a.grid) == len(a.metrics) == 4
    assert a.fitted_slope is not None and a.slope_halfwidth is not None
    assert a.report_hash() == b.report_hash()
    assert a.metrics_csv() == b.metrics_csv()
    assert a.plot_csv().splitlines()[0] == "log_m,log_test_rmse"
    for row in a.metrics:
        assert set(row) >= {"train_rmse", "test_rmse", "path_norm"}


def test_convergence_grid_validation():
    with pytest.raises(ValidationError):
        convergence_study(make_cubic([1.0]), [4, 8, 16], FAST, 64, 32)
    with pytest.raises(ValidationError):
        convergence_study(make_cubic([1.0]), [4, 8, 8, 16], FAST, 64, 32)


def test_constant_functional_is_fit_exactly():
    rep = convergence_study(make_constant(1.25, 3), [4, 8, 16, 32], TrainConfig(epochs=2), 128, 64,
                            seeds=1)
    assert rep.metrics[0]["test_rmse"] < 1e-6


def test_best_of_envelope_is_monotone():
    rep = convergence_study(make_cubic([0.5, 0.25]), [2, 4, 8, 16], FAST, 256, 128, seeds=3)
    rmse = [r["test_rmse"] for r in rep.metrics]
    assert min(rmse[:3]) >= min(rmse)


def dense_net(rng, m, N):
    return ShallowNet(rng.normal(), rng.normal(size=m), rng.normal(size=(m, N)),
                      rng.normal(scale=0.5, size=m))


def test_cutoff_zero_delta_gives_zero_gap():
    net = dense_net(np.random.default_rng(0), 10, 6)
    rep = cutoff_study(None, net, 3, [0.1, 0.0], n_samples=2000, h1_samples=256)
    assert rep.metrics[1]["max_gap"] == 0.0
    assert rep.metrics[0]["max_gap"] > 0


def test_cutoff_ignored_tail_gives_zero_gap():
    net = dense_net(np.random.default_rng(1), 8, 6)
    net.W[:, 3:] = 0
    rep = cutoff_study(None, net, 3, [0.2, 0.1, 0.05], n_samples=2000)
    assert all(r["max_gap"] == 0 for r in rep.metrics)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=15, deadline=None)
def test_cutoff_bound_dominates_and_scales(seed):
    rng = np.random.default_rng(seed)
    net = dense_net(rng, 12, 7)
    rep = cutoff_study(make_cubic([1.0] * 7), net, 4, [0.2, 0.1, 0.05], n_samples=2000,
                       h1_samples=256, seed=seed)
    assert rep.summary["violations"] == 0
    b = [r["certified_bound"] for r in rep.metrics]
    assert b[1] <= b[0] / 2 * (1 + 1e-12) and b[2] <= b[1] / 2 * (1 + 1e-12)
    for r in rep.metrics:
        assert r["max_gap"] <= r["tight_bound"] <= r["certified_bound"] * (1 + 1e-12)
        assert r["h1_violations"] == 0


def test_cutoff_validation():
    net = dense_net(np.random.default_rng(0), 4, 4)
    with pytest.raises(ValidationError):
        cutoff_study(None, net, 4, [0.1])
    with pytest.raises(ValidationError):
        cutoff_study(None, net, 2, [0.05, 0.1])
    with pytest.raises(ValidationError):
        cutoff_study(None, net, 2, [0.6])


def test_matched_widths():
    m_pc, m_dense = matched_widths(2000, 8)
    assert abs(3 * m_pc * 8 + 1 - 2000) <= 24 and abs(m_dense * 10 + 1 - 2000) <= 10


def test_per_coordinate_zero_functional():
    rep = per_coordinate_study(make_linear([0.0] * 4), 100, FAST, n_train=128, n_test=64)
    assert all(r["test_rmse"] < 1e-8 for r in rep.metrics)
    assert [g["form"] for g in rep.grid] == ["per-coordinate", "dense"]


def test_per_coordinate_needs_singletons():
    with pytest.raises(StructureError):
        per_coordinate_study(make_bilinear([1.0]), 100, FAST)


def test_per_coordinate_beats_constant_on_cubic():
    f = make_cubic([0.5 ** i for i in range(1, 5)])
    rep = per_coordinate_study(f, 400, TrainConfig(epochs=40), n_train=1024, n_test=512)
    assert rep.summary["both_beat_constant"]


def test_lattice_points_and_validation():
    assert lattice_points(1) == ((0.0,),)
    assert lattice_points(3) == ((0.0,), (0.5,), (1.0,))
    assert len(lattice_points(9, 2)) == 9
    with pytest.raises(ValidationError):
        BaselineSpec(2, 4, sample_points=(0.0, 0.3))
    with pytest.raises(ValidationError):
        lattice_points(5, 2)


def test_point_values_match_evaluate():
    X = np.random.default_rng(0).uniform(-0.5, 0.5, (3, 6))
    pts = lattice_points(5)
    P = point_values(X, pts)
    for row, vals in zip(X, P):
        assert np.allclose(vals, evaluate(CoeffVector(row), np.array(pts)[:, 0]))


def test_baseline_rows_for_every_width():
    spec = BaselineSpec(5, 4)
    rep = deeponet_baseline(make_linear([1.0, 0.5]), spec, FAST, 256, 128, widths=[2, 4, 8])
    assert [g["width"] for g in rep.grid] == [2, 4, 8]
    for r in rep.metrics:
        assert {"baseline_test_rmse", "spectral_test_rmse"} <= set(r)
        assert abs(r["baseline_params"] - r["spectral_params"]) <= 4


def test_baseline_without_signal():
    # sin modes vanish at x = 0, so v(0) carries no information about f
    f = make_linear([0, 1, 0, 1, 0, 1])
    rep = deeponet_baseline(f, BaselineSpec(1, 8), TrainConfig(epochs=20), 1024, 1024)
    assert rep.metrics[0]["baseline_test_rmse"] >= rep.summary["label_std"]


def test_per_coordinate_fits_linear_functional():
    f = make_linear([1.0, 0.75, 0.5, 0.25, 0.0, -0.25, -0.5, -0.75])
    rep = per_coordinate_study(f, 97, TrainConfig(epochs=200), n_train=4096, n_test=2048)
    row = rep.metrics[0]
    assert rep.grid[0]["form"] == "per-coordinate" and row["n_params"] == 97
    assert row["test_rmse"] < 1e-4


def test_per_coordinate_cubic_at_two_thousand_params():
    f = make_cubic([0.5 ** i for i in range(1, 9)])
    rep = per_coordinate_study(f, 2000, TrainConfig(epochs=30), n_train=2048, n_test=1024)
    assert rep.summary["both_beat_constant"]
    assert all(abs(r["n_params"] - 2000) <= 30 for r in rep.metrics)
