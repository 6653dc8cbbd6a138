import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from barronfunc.errors import DivergenceError, LengthMismatchError, ValidationError
from barronfunc.shallow_net import (NetGradient, ShallowNet, TrainConfig, forward, gradient,
                                    init_net, mse, path_norm, project, train)


def random_net(rng, m, N, form="dense"):
    W = rng.normal(size=(m, N))
    if form == "per-coordinate":
        mask = np.zeros_like(W, dtype=bool)
        mask[np.arange(m), np.arange(m) % N] = True
        W = np.where(mask, W, 0.0)
    return ShallowNet(rng.normal(), rng.normal(size=m), W, rng.normal(scale=0.3, size=m), form)


def test_forward_examples():
    net = ShallowNet(0.5, [2.0], [[1.0]], [0.1])
    assert forward(net, np.array([0.3])) == pytest.approx(0.9)
    net0 = ShallowNet(1.5, [0.0, 0.0], np.ones((2, 3)), [0, 0])
    assert np.all(forward(net0, np.random.default_rng(0).normal(size=(4, 3))) == 1.5)
    gated = ShallowNet(0.0, [3.0], [[1.0]], [0.5])
    assert forward(gated, np.array([0.2])) == 0.0


def test_gradient_examples():
    net = ShallowNet(0.5, [2.0], [[1.0]], [0.1])
    g = gradient(net, np.array([0.3]), residual_weight=0.7)
    assert g.c == 0.7
    assert g.t[0] == pytest.approx(-2.0 * 0.7)


def fd_gradient(net, b, h=1e-6):
    flat = []
    for name in ("c", "gamma", "W", "t"):
        val = getattr(net, name)
        if name == "c":
            up, dn = net.copy(), net.copy()
            up.c += h
            dn.c -= h
            flat.append((forward(up, b) - forward(dn, b)) / (2 * h))
            continue
        for idx in np.ndindex(val.shape):
            up, dn = net.copy(), net.copy()
            getattr(up, name)[idx] += h
            getattr(dn, name)[idx] -= h
            flat.append((forward(up, b) - forward(dn, b)) / (2 * h))
    return np.array(flat)


def kink_free_pair(rng, form="dense"):
    while True:
        net = random_net(rng, int(rng.integers(1, 6)), int(rng.integers(1, 5)), form)
        b = rng.uniform(-0.5, 0.5, net.N)
        if np.all(np.abs(net.W @ b - net.t) > 1e-3):
            return net, b


@pytest.mark.parametrize("form", ["dense", "per-coordinate"])
def test_gradient_matches_finite_differences(form):
    rng = np.random.default_rng(42)
    for _ in range(100):
        net, b = kink_free_pair(rng, form)
        analytic = gradient(net, b).flat()
        fd = fd_gradient(net, b)
        if form == "per-coordinate":
            fd = np.where(np.concatenate([[True], np.ones(net.m, bool), net.mask.ravel(),
                                          np.ones(net.m, bool)]), fd, 0.0)
        assert np.allclose(analytic, fd, rtol=1e-6, atol=1e-8)


def test_gradient_requires_single_input():
    net = random_net(np.random.default_rng(0), 2, 3)
    with pytest.raises(LengthMismatchError):
        gradient(net, np.zeros((2, 3)))
    with pytest.raises(LengthMismatchError):
        forward(net, np.zeros(4))


@given(st.integers(0, 10 ** 6))
@settings(max_examples=30)
def test_projection_preserves_outputs(seed):
    rng = np.random.default_rng(seed)
    net = random_net(rng, 6, 4)
    X = rng.uniform(-0.5, 0.5, (100, 4))
    proj = project(net, clip_bias=False)
    assert np.max(np.abs(forward(net, X) - forward(proj, X))) < 1e-10
    assert np.allclose(np.abs(proj.W).sum(axis=1), 1.0)
    assert path_norm(proj) == pytest.approx(path_norm(net), rel=1e-12)


def test_path_norm_examples():
    assert path_norm(ShallowNet(0, [0.0], [[0.0]], [0.0])) == 0
    assert path_norm(ShallowNet(1.0, [2.0], [[0.5, -0.5]], [0.0])) == 4


def test_per_coordinate_embeds_in_dense():
    rng = np.random.default_rng(3)
    net = init_net(3, 4, form="per-coordinate", seed=1)
    net.gamma[:] = rng.normal(size=net.m)
    assert net.m == 12 and np.all((net.W != 0).sum(axis=1) == 1)
    X = rng.uniform(-0.5, 0.5, (50, 4))
    assert np.array_equal(forward(net, X), forward(net.to_dense(), X))
    assert net.n_params == 1 + 3 * 12


def test_per_coordinate_rejects_dense_weights():
    with pytest.raises(ValidationError):
        ShallowNet(0, [1.0, 1.0], [[1.0, 1.0], [0.0, 1.0]], [0, 0], "per-coordinate")


def test_init_properties():
    net = init_net(16, 5, label_mean=0.3, seed=9, init_scale=0.5)
    assert net.c == 0.3 and np.all(net.gamma == 0)
    assert np.allclose(np.abs(net.W).sum(axis=1), 0.5)
    assert np.all(np.abs(net.t) < 0.5)


def test_constant_labels_fit_by_bias():
    X = np.random.default_rng(0).uniform(-0.5, 0.5, (64, 3))
    y = np.full(64, 0.7)
    res = train(init_net(4, 3, label_mean=float(y.mean())), X, y, TrainConfig())
    assert abs(res.net.c - 0.7) < 1e-6
    assert res.trace[-1]["train_loss"] < 1e-6


def test_single_sample_overfit():
    X = np.array([[0.2, -0.1]])
    y = np.array([1.3])
    for seed in range(3):
        res = train(init_net(4, 2, seed=seed), X, y, TrainConfig(epochs=2000, learning_rate=1e-3))
        losses = np.array([r["train_loss"] for r in res.trace])
        assert len(losses) == 2000 and losses[-1] < 1e-8
        assert np.all(np.diff(losses) <= 0)


def test_training_is_deterministic():
    rng = np.random.default_rng(5)
    X = rng.uniform(-0.5, 0.5, (200, 4))
    y = np.sin(X.sum(axis=1))
    cfg = TrainConfig(epochs=5, batch_size=32, seed=3)
    a = train(init_net(8, 4, seed=1), X, y, cfg)
    b = train(init_net(8, 4, seed=1), X, y, cfg)
    assert a.trace_csv() == b.trace_csv()


def test_training_reduces_loss_and_keeps_input():
    rng = np.random.default_rng(2)
    X = rng.uniform(-0.5, 0.5, (512, 3))
    y = X @ [1.0, -0.5, 0.2]
    net = init_net(8, 3, seed=0)
    before = net.copy()
    res = train(net, X, y, TrainConfig(epochs=30), X_test=X[:50], y_test=y[:50])
    assert res.trace[-1]["train_loss"] < 0.1 * mse(before, X, y)
    assert np.array_equal(net.W, before.W)
    assert res.trace[-1]["test_loss"] is not None


def test_projected_training_satisfies_constraints():
    rng = np.random.default_rng(4)
    X = rng.uniform(-0.5, 0.5, (128, 3))
    y = X[:, 0] ** 2
    res = train(init_net(6, 3, seed=0), X, y, TrainConfig(epochs=5, project_constraints=True))
    assert np.allclose(np.abs(res.net.W).sum(axis=1), 1.0)
    assert np.all(np.abs(res.net.t) <= 1.0)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_sgd_runs_and_divergence_is_reported():
    rng = np.random.default_rng(0)
    X = rng.uniform(-0.5, 0.5, (64, 2))
    y = 1e3 * X[:, 0]
    train(init_net(4, 2), X, y, TrainConfig(optimizer="sgd", epochs=2, learning_rate=1e-3))
    with pytest.raises(DivergenceError):
        train(init_net(4, 2, init_scale=50), X, 1e150 * y,
              TrainConfig(optimizer="sgd", epochs=50, learning_rate=10.0))


def test_dataset_pairs_accepted():
    pairs = [(np.array([0.1, 0.2]), 0.5), (np.array([-0.1, 0.0]), 0.1)]
    res = train(init_net(2, 2, label_mean=0.3), pairs, cfg=TrainConfig(epochs=2))
    assert len(res.trace) == 2


def test_json_roundtrip():
    net = random_net(np.random.default_rng(1), 3, 2)
    back = ShallowNet.from_json(net.to_json())
    assert np.array_equal(back.W, net.W) and back.c == net.c


@pytest.mark.parametrize("kw", [dict(optimizer="lbfgs"), dict(learning_rate=0), dict(epochs=0),
                                dict(lr_schedule="step"), dict(init_scale=-1)])
def test_config_validation(kw):
    with pytest.raises(ValidationError):
        TrainConfig(**kw)


def test_netgradient_flat_order():
    g = NetGradient(1.0, np.array([2.0]), np.array([[3.0, 4.0]]), np.array([5.0]))
    assert g.flat().tolist() == [1, 2, 3, 4, 5]
