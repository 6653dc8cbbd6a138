"""Pointwise learning of the Poisson solution functional ``g -> u(x0)``.

The oracle inverts ``-alpha u'' = g`` mode by mode: the periodic variant uses
the zero-mean real-trigonometric basis (symbol ``alpha (2 pi n)^2``), the
Dirichlet variant the sine basis (symbol ``alpha (pi n)^2``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (OutOfGridError, ValidationError,
                     ZeroModePresentError)
from .experiments import _map
from .function_space import BasisSpec, CoeffVector, DomainSpec, sample_array
from .reporting import derive_seed, rows_to_csv
from .shallow_net import ShallowNet, TrainConfig, TrainResult, forward, init_net, mse, train

VARIANTS = ("periodic-zero-mean", "dirichlet-sine")


@dataclass(frozen=True)
class PoissonProblem:
    variant: str = "periodic-zero-mean"
    alpha: float = 1.0
    spatial_dim: int = 1
    n_modes: int = 8

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError(f"unknown Poisson variant {self.variant!r}")
        if not self.alpha > 0:
            raise ValidationError("alpha must be positive")
        if self.spatial_dim != 1:
            raise ValidationError("only spatial_dim = 1 is supported")
        if self.n_modes < 1:
            raise ValidationError("n_modes must be >= 1")

    @property
    def basis(self) -> BasisSpec:
        kind = "real-trigonometric" if self.variant == "periodic-zero-mean" else "sine"
        return BasisSpec(kind, self.spatial_dim)

    def symbol(self, n: int | None = None) -> np.ndarray:
        """Eigenvalue of ``-alpha d^2/dx^2`` on each of the first ``n`` modes."""
        n = self.n_modes if n is None else n
        scale = 2 * math.pi if self.variant == "periodic-zero-mean" else math.pi
        return np.array([self.alpha * scale ** 2 * float(np.dot(p, p))
                         for p, _ in self.basis.modes(n)])

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _coeffs_for(problem: PoissonProblem, g) -> np.ndarray:
    if isinstance(g, CoeffVector):
        if g.basis.include_constant and problem.variant == "periodic-zero-mean":
            if g.coeffs[0] != 0:
                raise ZeroModePresentError("periodic Poisson needs a zero-mean right-hand side")
            return np.asarray(g.coeffs[1:], dtype=float)
        if g.basis.kind != problem.basis.kind:
            raise ValidationError(f"{problem.variant} expects a {problem.basis.kind} basis")
        return np.asarray(g.coeffs, dtype=float)
    return np.asarray(g, dtype=float)


def solution_coeffs(problem: PoissonProblem, g) -> CoeffVector:
    b = _coeffs_for(problem, g)
    return CoeffVector(b / problem.symbol(b.shape[-1]), problem.basis)


def point_weights(problem: PoissonProblem, x0, n: int | None = None) -> np.ndarray:
    """Rows ``Phi_i(x0) / symbol_i``: the linear map ``g -> u(x0)``."""
    n = problem.n_modes if n is None else n
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    if np.any((x < 0) | (x > 1)):
        raise ValidationError("evaluation points must lie in [0, 1]")
    phi = problem.basis.design_matrix(x.reshape(-1, 1), n)
    return phi / problem.symbol(n)


def solve_at(problem: PoissonProblem, g, x0):
    """``u(x0)`` for ``-alpha u'' = g``; ``g`` may be a batch ``(M, n)``."""
    b = _coeffs_for(problem, g)
    out = b @ point_weights(problem, x0, b.shape[-1]).T
    if np.ndim(x0) == 0:
        out = out[..., 0]
    return float(out) if np.ndim(out) == 0 else out


def oracle_residual(problem: PoissonProblem, g, n_points: int = 512) -> float:
    """Mean of ``|-alpha u'' - g|`` on a uniform grid, with ``u''`` from an FFT.

    Independent of the modal symbol: ``u`` is sampled in physical space and
    differentiated spectrally (odd extension for the sine variant).
    """
    b = _coeffs_for(problem, g)
    u = solution_coeffs(problem, b)
    basis = problem.basis
    if problem.variant == "periodic-zero-mean":
        x = np.arange(n_points) / n_points
        period = 1.0
        uv = basis.design_matrix(x[:, None], b.size).real @ u.coeffs
    else:
        x = np.arange(2 * n_points) / n_points  # [0, 2), odd extension
        period = 2.0
        xs = np.where(x <= 1, x, 2 - x)
        sign = np.where(x <= 1, 1.0, -1.0)
        uv = sign * (basis.design_matrix(xs[:, None], b.size) @ u.coeffs)
    freq = np.fft.fftfreq(x.size, d=period / x.size)
    upp = np.fft.ifft(-(2 * np.pi * freq) ** 2 * np.fft.fft(uv)).real
    gv = basis.design_matrix(np.where(x <= 1, x, 2 - x)[:, None], b.size) @ b
    if problem.variant == "dirichlet-sine":
        gv = np.where(x <= 1, 1.0, -1.0) * gv
    return float(np.mean(np.abs(-problem.alpha * upp - gv)))


@dataclass
class PointDataset:
    x0: tuple[float, ...]
    coeffs: np.ndarray
    labels: np.ndarray
    basis: BasisSpec = field(default_factory=BasisSpec)

    @property
    def M(self) -> int:
        return self.coeffs.shape[0]

    @property
    def samples(self) -> list[tuple[CoeffVector, np.ndarray | float]]:
        return [(CoeffVector(b, self.basis), lab) for b, lab in zip(self.coeffs, self.labels)]

    def column(self, q: int = 0) -> np.ndarray:
        return self.labels if self.labels.ndim == 1 else self.labels[:, q]

    def to_csv(self) -> str:
        n = self.coeffs.shape[1]
        labels = self.labels.reshape(self.M, -1)
        header = [f"b_{i}" for i in range(1, n + 1)] + [f"u({x!r})" for x in self.x0]
        return rows_to_csv(header, np.hstack([self.coeffs, labels]).tolist())


def generate_dataset(problem: PoissonProblem, domain: DomainSpec, x0, M: int,
                     seed: int) -> PointDataset:
    """``M`` right-hand sides from ``domain`` labelled by the oracle at ``x0``.

    ``x0`` may be a sequence; then the labels have one column per point and
    all columns share the same ``g`` samples.
    """
    if M < 1:
        raise ValidationError("M must be >= 1")
    G = sample_array(domain, problem.n_modes, M, seed)
    pts = tuple(float(x) for x in np.atleast_1d(x0))
    labels = solve_at(problem, G, np.array(pts))
    if np.ndim(x0) == 0:
        labels = labels[:, 0]
    return PointDataset(pts, G, np.asarray(labels), problem.basis)


@dataclass
class PointwiseResult:
    net: ShallowNet
    test_rmse: float
    label_rms: float
    train_result: TrainResult


def split_indices(M: int, seed: int, train_fraction: float = 0.8) -> tuple[np.ndarray, np.ndarray]:
    order = np.random.default_rng(seed).permutation(M)
    cut = max(1, int(round(train_fraction * M)))
    return order[:cut], order[cut:]


def learn_pointwise(dataset: PointDataset, net_width: int, cfg: TrainConfig, *,
                    column: int = 0, seed: int = 0) -> PointwiseResult:
    """Fit one net on an 80/20 split and report the held-out RMSE."""
    if dataset.M < 1:
        raise ValidationError("dataset is empty")
    y = dataset.column(column)
    tr, te = split_indices(dataset.M, derive_seed(seed, 11))
    if te.size == 0:
        te = tr
    X = dataset.coeffs
    net = init_net(net_width, X.shape[1], label_mean=float(np.mean(y[tr])),
                   seed=derive_seed(seed, 12, column), init_scale=cfg.init_scale)
    result = train(net, X[tr], y[tr], cfg, X_test=X[te], y_test=y[te])
    rmse = math.sqrt(mse(result.net, X[te], y[te]))
    return PointwiseResult(result.net, rmse, float(np.sqrt(np.mean(y[te] ** 2))), result)


@dataclass
class GridOperator:
    """Piecewise-linear-in-space operator built from one pointwise net per node."""

    grid: tuple[float, ...]
    nets: list[ShallowNet]
    test_rmse: list[float] = field(default_factory=list)
    label_rms: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.grid = tuple(float(y) for y in self.grid)
        if not self.grid:
            raise ValidationError("grid must be nonempty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValidationError("grid must be strictly increasing")
        if len(self.nets) != len(self.grid):
            raise ValidationError("one net per grid point is required")

    def to_dict(self) -> dict:
        return {"grid": list(self.grid), "nets": [n.to_dict() for n in self.nets],
                "test_rmse": list(self.test_rmse), "label_rms": list(self.label_rms)}

    @classmethod
    def from_dict(cls, data: dict) -> "GridOperator":
        return cls(tuple(data["grid"]), [ShallowNet.from_dict(n) for n in data["nets"]],
                   list(data.get("test_rmse", [])), list(data.get("label_rms", [])))


def build_grid_operator(problem: PoissonProblem, domain: DomainSpec, grid: Sequence[float],
                        M: int, net_width: int, cfg: TrainConfig, seed: int, *,
                        jobs: int = 1) -> tuple[GridOperator, PointDataset]:
    """Train one pointwise net per grid node on a shared set of ``g`` samples."""
    grid = tuple(float(y) for y in grid)
    if not grid:
        raise ValidationError("grid must be nonempty")
    if any(not 0 < y < 1 for y in grid):
        raise ValidationError("grid points must lie in (0, 1)")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError("grid must be strictly increasing")
    data = generate_dataset(problem, domain, list(grid), M, seed)
    if data.labels.ndim == 1:
        data.labels = data.labels[:, None]
    results = _map(lambda q: learn_pointwise(data, net_width, cfg, column=q, seed=seed),
                   list(range(len(grid))), jobs)
    op = GridOperator(grid, [r.net for r in results], [r.test_rmse for r in results],
                      [r.label_rms for r in results])
    return op, data


def apply_grid_operator(op: GridOperator, g, y):
    """Linear interpolation of the node predictions ``f_q[g]`` at ``y``."""
    b = np.asarray(getattr(g, "coeffs", g), dtype=float)
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    lo, hi = op.grid[0], op.grid[-1]
    if np.any((ys < lo) | (ys > hi)):
        raise OutOfGridError(f"y must lie in [{lo}, {hi}]")
    node_vals = np.array([forward(net, b) for net in op.nets])
    if len(op.grid) == 1:
        out = np.full(ys.shape, node_vals[0])
    else:
        grid = np.asarray(op.grid)
        q = np.clip(np.searchsorted(grid, ys, side="right") - 1, 0, len(grid) - 2)
        theta = (ys - grid[q]) / (grid[q + 1] - grid[q])
        out = (1.0 - theta) * node_vals[q] + theta * node_vals[q + 1]
    return float(out[0]) if np.ndim(y) == 0 else out


def uniform_interior_grid(Q: int) -> tuple[float, ...]:
    """``Q`` equally spaced nodes ``q / (Q + 1)`` strictly inside (0, 1)."""
    return tuple((q + 1) / (Q + 1) for q in range(Q))
