import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from barronfunc.errors import OutOfGridError, ValidationError, ZeroModePresentError
from barronfunc.function_space import BasisSpec, CoeffVector, DomainSpec
from barronfunc.pde_app import (GridOperator, PointDataset, PoissonProblem, apply_grid_operator,
                                build_grid_operator, generate_dataset, learn_pointwise,
                                oracle_residual, solution_coeffs, solve_at, uniform_interior_grid)
from barronfunc.shallow_net import ShallowNet, TrainConfig, forward

PERIODIC = PoissonProblem("periodic-zero-mean", 1.0, n_modes=8)
SINE = PoissonProblem("dirichlet-sine", 1.0, n_modes=8)
DOMAIN = DomainSpec("bound", N=8)


def test_zero_rhs():
    assert solve_at(PERIODIC, np.zeros(8), 0.3) == 0
    assert np.all(solve_at(SINE, np.zeros((3, 8)), np.array([0.1, 0.5])) == 0)


def test_periodic_sine_rhs():
    g = np.zeros(8)
    g[1] = 1 / math.sqrt(2)  # sin(2 pi x)
    assert solve_at(PERIODIC, g, 0.25) == pytest.approx(1 / (4 * math.pi ** 2), abs=1e-15)
    assert solve_at(PERIODIC, g, 0.25) == pytest.approx(0.0253303, abs=1e-7)
    assert oracle_residual(PERIODIC, g) < 1e-10


def test_dirichlet_sine_rhs():
    g = np.zeros(8)
    g[0] = 1 / math.sqrt(2)  # sin(pi x)
    assert solve_at(SINE, g, 0.5) == pytest.approx(1 / math.pi ** 2, abs=1e-15)
    assert solve_at(SINE, g, 0.5) == pytest.approx(0.1013212, abs=1e-7)
    assert oracle_residual(SINE, g) < 1e-10


@pytest.mark.parametrize("problem", [PERIODIC, SINE, PoissonProblem("periodic-zero-mean", 2.5)],
                         ids=["periodic", "sine", "alpha"])
def test_oracle_residual_on_samples(problem):
    from barronfunc.function_space import sample_array
    for g in sample_array(DOMAIN, problem.n_modes, 20, 1):
        assert oracle_residual(problem, g) < 1e-8 * np.linalg.norm(g)


@given(st.lists(st.floats(-1, 1), min_size=8, max_size=8),
       st.lists(st.floats(-1, 1), min_size=8, max_size=8), st.floats(0, 1))
@settings(max_examples=100)
def test_oracle_is_linear(g1, g2, x0):
    g1, g2 = np.array(g1), np.array(g2)
    for p in (PERIODIC, SINE):
        assert abs(solve_at(p, g1 + g2, x0) - solve_at(p, g1, x0) - solve_at(p, g2, x0)) < 1e-10


def test_solution_satisfies_modal_equation():
    g = np.arange(1, 9) / 10
    u = solution_coeffs(PERIODIC, g)
    assert np.allclose(u.coeffs * PERIODIC.symbol(), g)


def test_zero_mode_rejected():
    g = CoeffVector(np.array([0.3, 0.1, 0.2]), BasisSpec(include_constant=True))
    with pytest.raises(ZeroModePresentError):
        solve_at(PERIODIC, g, 0.5)
    with pytest.raises(ValidationError):
        solve_at(PERIODIC, CoeffVector(np.ones(3), BasisSpec("sine")), 0.5)


def test_problem_validation():
    with pytest.raises(ValidationError):
        PoissonProblem("neumann")
    with pytest.raises(ValidationError):
        PoissonProblem(alpha=0)
    with pytest.raises(ValidationError):
        PoissonProblem(spatial_dim=2)


def test_dataset_shape_and_determinism():
    a = generate_dataset(PERIODIC, DOMAIN, 0.3, 1000, 5)
    b = generate_dataset(PERIODIC, DOMAIN, 0.3, 1000, 5)
    assert a.M == 1000 and a.labels.shape == (1000,)
    assert np.all(np.isfinite(a.labels))
    assert np.array_equal(a.coeffs, b.coeffs) and np.array_equal(a.labels, b.labels)
    assert a.to_csv() == b.to_csv()
    assert len(a.to_csv().splitlines()) == 1001


def test_shared_samples_across_grid():
    data = generate_dataset(PERIODIC, DOMAIN, [0.25, 0.5, 0.75], 50, 2)
    assert data.labels.shape == (50, 3)
    for q, y in enumerate((0.25, 0.5, 0.75)):
        assert np.allclose(data.column(q), solve_at(PERIODIC, data.coeffs, y))


def test_constant_labels_learned():
    X = np.random.default_rng(0).uniform(-0.5, 0.5, (200, 8))
    data = PointDataset((0.5,), X, np.full(200, 0.04))
    res = learn_pointwise(data, 8, TrainConfig())
    assert res.test_rmse < 1e-6


def test_boundary_point_labels_vanish():
    data = generate_dataset(SINE, DOMAIN, 0.0, 200, 0)
    assert np.all(np.abs(data.labels) < 1e-15)
    res = learn_pointwise(data, 8, TrainConfig(epochs=20))
    assert res.test_rmse < 1e-6


def test_pointwise_learning_small():
    data = generate_dataset(PERIODIC, DOMAIN, 0.3, 1000, 1)
    res = learn_pointwise(data, 32, TrainConfig(epochs=100))
    assert res.test_rmse < 0.05 * res.label_rms


def make_op(grid, values):
    nets = [ShallowNet(v, [0.0], [[0.0] * 8], [0.0]) for v in values]
    return GridOperator(tuple(grid), nets)


def test_interpolation_nodes_and_midpoints():
    op = make_op([0.2, 0.5, 0.8], [1.0, 3.0, -1.0])
    g = np.zeros(8)
    assert apply_grid_operator(op, g, 0.5) == 3.0
    assert apply_grid_operator(op, g, 0.35) == pytest.approx(2.0, abs=1e-15)
    assert apply_grid_operator(op, g, 0.65) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(OutOfGridError):
        apply_grid_operator(op, g, 0.9)


@given(st.floats(0.21, 0.49), st.floats(1e-4, 0.005))
def test_piecewise_linear_inside_cell(y, h):
    op = make_op([0.2, 0.5, 0.8], [1.0, 3.0, -1.0])
    g = np.zeros(8)
    y = min(y, 0.5 - 2 * h)
    vals = apply_grid_operator(op, g, np.array([y - h, y, y + h]))
    assert abs(vals[0] - 2 * vals[1] + vals[2]) < 1e-12


def test_single_node_operator():
    data_op, data = build_grid_operator(PERIODIC, DOMAIN, [0.5], 200, 4, TrainConfig(epochs=3), 0)
    assert len(data_op.nets) == 1
    g = data.coeffs[0]
    assert apply_grid_operator(data_op, g, 0.5) == forward(data_op.nets[0], g)


def test_grid_operator_nodes_match_nets():
    op, data = build_grid_operator(PERIODIC, DOMAIN, uniform_interior_grid(3), 200, 4,
                                   TrainConfig(epochs=3), 1, jobs=2)
    g = data.coeffs[3]
    for y, net in zip(op.grid, op.nets):
        assert apply_grid_operator(op, g, y) == pytest.approx(forward(net, g), abs=1e-14)
    back = GridOperator.from_dict(op.to_dict())
    assert apply_grid_operator(back, g, 0.4) == apply_grid_operator(op, g, 0.4)
    assert len(op.test_rmse) == 3


def test_grid_validation():
    with pytest.raises(ValidationError):
        build_grid_operator(PERIODIC, DOMAIN, [0.5, 0.2], 10, 2, TrainConfig(epochs=1), 0)
    with pytest.raises(ValidationError):
        build_grid_operator(PERIODIC, DOMAIN, [0.0, 0.5], 10, 2, TrainConfig(epochs=1), 0)
    assert uniform_interior_grid(17)[8] == pytest.approx(0.5)
