"""Desk-scale studies of the approximation rates.

Every study returns an :class:`ExperimentReport`. Errors are RMSE under the
uniform sampling measure of the functional's domain; wall times are kept
out of the serialised report so repeated runs hash identically.
"""
from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .errors import DivergenceError, StructureError, ValidationError
from .function_space import DEFAULT_BASIS, BasisSpec, DomainSpec, sample_array
from .functional_zoo import FunctionalSpec
from .reporting import canonical_json, code_version, config_hash, derive_seed, rows_to_csv, write_text
from .shallow_net import (ShallowNet, TrainConfig, forward, init_net, mse, path_norm, project,
                          train)

METRIC_FIELDS = ("train_rmse", "test_rmse", "path_norm")


@dataclass
class ExperimentReport:
    experiment_id: str
    grid: list[dict]
    metrics: list[dict]
    fitted_slope: float | None = None
    slope_halfwidth: float | None = None
    metadata: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    timings: list[float] = field(default_factory=list)

    def __post_init__(self):
        if len(self.grid) != len(self.metrics):
            raise ValidationError("every grid point needs a metric row")

    def rows(self) -> list[dict]:
        return [{**g, **m} for g, m in zip(self.grid, self.metrics)]

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "grid": self.grid,
            "metrics": self.metrics,
            "fitted_slope": self.fitted_slope,
            "slope_halfwidth": self.slope_halfwidth,
            "metadata": self.metadata,
            "summary": self.summary,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict(), indent=1)

    def report_hash(self) -> str:
        return config_hash(self.to_dict())

    def metrics_csv(self) -> str:
        rows = self.rows()
        header = list(dict.fromkeys(k for r in rows for k in r))
        return rows_to_csv(header, rows)

    def plot_csv(self, x_key: str = "m", y_key: str = "test_rmse") -> str:
        rows = [{"log_" + x_key: math.log(r[x_key]), "log_" + y_key: math.log(r[y_key])}
                for r in self.rows() if r.get(y_key, 0) > 0]
        return rows_to_csv(["log_" + x_key, "log_" + y_key], rows)

    def write(self, directory: Path, plot: tuple[str, str] | None = None) -> list[Path]:
        directory = Path(directory)
        out = [write_text(directory / "report.json", self.to_json()),
               write_text(directory / "metrics.csv", self.metrics_csv())]
        if plot is not None:
            out.append(write_text(directory / "plot_data.csv", self.plot_csv(*plot)))
        # timings are informational and excluded from reproducibility checks
        write_text(directory / "timings.json", canonical_json({"wall_time": self.timings}))
        return out


def fit_loglog_slope(x: Sequence[float], y: Sequence[float],
                     confidence: float = 0.95) -> tuple[float, float, float]:
    """Least-squares slope of ``log y`` on ``log x``.

    Returns ``(slope, intercept, half_width)`` with a Student-t confidence
    half-width on the slope.
    """
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size < 4:
        raise ValidationError("slope fitting needs at least 4 points")
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    dof = lx.size - 2
    sxx = np.sum((lx - lx.mean()) ** 2)
    se = math.sqrt(float(resid @ resid) / dof / sxx)
    half = float(stats.t.ppf(0.5 + confidence / 2, dof) * se)
    return float(coef[0]), float(coef[1]), half


def _metadata(kind: str, config: dict) -> dict:
    return {"study": kind, "config": config, "config_hash": config_hash(config),
            "code_version": code_version(),
            "error_metric": "RMSE under the uniform sampling measure (H0 surrogate)"}


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def draw_dataset(f: FunctionalSpec, n: int, seed: int,
                 domain: DomainSpec | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``n`` inputs sampled from the functional's domain, with exact labels."""
    X = sample_array(domain or f.domain, f.n_inputs, n, seed)
    return X, np.asarray(f(X), dtype=float)


def _rmse(net: ShallowNet, X, y) -> float:
    return math.sqrt(mse(net, X, y))


def fit_best_of(m: int, X, y, Xt, yt, cfg: TrainConfig, *, seeds: int = 3, form: str = "dense",
                base_seed: int = 0) -> tuple[ShallowNet, dict]:
    """Train ``seeds`` independent initialisations; keep the lowest training RMSE."""
    best = None
    for r in range(seeds):
        s = derive_seed(base_seed, m, r, 0 if form == "dense" else 1)
        net = init_net(m, X.shape[1], form=form, label_mean=float(np.mean(y)), seed=s,
                       init_scale=cfg.init_scale)
        run_cfg = TrainConfig.from_dict({**cfg.to_dict(), "seed": derive_seed(s, 1)})
        result = train(net, X, y, run_cfg)
        row = {"train_rmse": _rmse(result.net, X, y), "test_rmse": _rmse(result.net, Xt, yt),
               "path_norm": path_norm(result.net), "n_params": result.net.n_params,
               "best_seed": r}
        if best is None or row["train_rmse"] < best[1]["train_rmse"]:
            best = (result.net, row)
    return best


def convergence_study(f: FunctionalSpec, m_grid: Sequence[int], cfg: TrainConfig,
                      n_train: int, n_test: int, *, seeds: int = 3, seed: int = 0,
                      jobs: int = 1) -> ExperimentReport:
    """Test RMSE of the best-of-``seeds`` dense net for each width, with log-log slope."""
    m_grid = [int(m) for m in m_grid]
    if len(m_grid) < 4 or any(b <= a for a, b in zip(m_grid, m_grid[1:])):
        raise ValidationError("m_grid must be strictly increasing with at least 4 entries")
    X, y = draw_dataset(f, n_train, derive_seed(seed, 0))
    Xt, yt = draw_dataset(f, n_test, derive_seed(seed, 1))
    config = {"functional": f.name, "params": dict(f.params), "m_grid": m_grid,
              "train": cfg.to_dict(), "n_train": n_train, "n_test": n_test, "seeds": seeds,
              "seed": seed}

    done: dict[int, tuple[dict, float]] = {}

    def point(m):
        t0 = time.perf_counter()
        try:
            _, row = fit_best_of(m, X, y, Xt, yt, cfg, seeds=seeds, base_seed=seed)
        except DivergenceError as exc:
            raise DivergenceError(f"convergence study diverged at m={m}: {exc}") from exc
        done[m] = (row, time.perf_counter() - t0)
        return row, done[m][1]

    try:
        results = _map(point, m_grid, jobs)
    except DivergenceError as exc:
        ms = [m for m in m_grid if m in done]
        exc.partial_report = ExperimentReport("convergence", [{"m": m} for m in ms],
                                              [done[m][0] for m in ms],
                                              metadata=_metadata("convergence", config))
        raise
    rows = [r for r, _ in results]
    rmse = [r["test_rmse"] for r in rows]
    summary = {"label_std": float(np.std(yt)), "n_inputs": f.n_inputs}
    slope = half = None
    if all(v > 0 for v in rmse):
        slope, intercept, half = fit_loglog_slope(m_grid, rmse)
        summary["intercept"] = intercept
    return ExperimentReport("convergence", [{"m": m} for m in m_grid], rows, slope, half,
                            _metadata("convergence", config), summary,
                            [t for _, t in results])


def truncate_inputs(net: ShallowNet, n_keep: int) -> ShallowNet:
    """Copy of ``net`` whose units ignore every coordinate after the first ``n_keep``."""
    out = net.copy()
    out.W[:, n_keep:] = 0.0
    return out


def sample_cut(n_full: int, n_cut: int, delta: float, n: int, seed: int) -> np.ndarray:
    """Uniform samples of L_cut(delta); ``delta = 0`` pins the tail to zero."""
    if delta == 0:
        X = sample_array(DomainSpec("bound", N=n_full), n_full, n, seed)
        X[:, n_cut:] = 0.0
        return X
    return sample_array(DomainSpec("cut", N=n_cut, delta=delta), n_full, n, seed)


def unit_h1_norm(gamma: float, w: np.ndarray, t: float, n_head: int, n_active: int,
                 delta: float, n_samples: int, seed: int) -> float:
    """Monte Carlo ``H^1`` norm of ``gamma relu(w.b - t)`` on the box
    ``(-1/2,1/2)^n_head x (-delta,delta)^(n_active - n_head)``."""
    rng = np.random.default_rng(seed)
    half = np.where(np.arange(n_active) < n_head, 0.5, delta)
    B = rng.uniform(-half, half, size=(n_samples, n_active))
    z = B @ w[:n_active] - t
    grad_sq = gamma ** 2 * float(w[:n_active] @ w[:n_active])
    integrand = (gamma * np.maximum(z, 0.0)) ** 2 + grad_sq * (z > 0)
    volume = (2 * delta) ** (n_active - n_head)
    return math.sqrt(volume * float(np.mean(integrand)))


def cutoff_study(f: FunctionalSpec, net: ShallowNet, N_cut: int, deltas: Sequence[float], *,
                 n_samples: int = 10_000, h1_samples: int = 4096, seed: int = 0) -> ExperimentReport:
    """Sup-gap between a net and its input-truncated copy on L_cut(delta).

    The net is first rescaled to unit-l1 rows (function values unchanged), so
    ``sum |gamma_j| * delta`` certifies the gap. The second part checks the
    H-norm of the dropped units against ``|gamma_j| sqrt((1/2 + max(|t_j|, 1))^2 + 1)
    (2 delta)^((N_kj - N_cut)/2)``, which is the ``sqrt(13)/2`` constant when
    ``|t_j| <= 1``.
    """
    deltas = [float(d) for d in deltas]
    if not 0 < N_cut < net.N:
        raise ValidationError(f"need 0 < N_cut < N_full={net.N}, got {N_cut}")
    if any(d < 0 for d in deltas) or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValidationError("deltas must be nonnegative and strictly decreasing")
    if any(d >= 0.5 for d in deltas):
        raise ValidationError("deltas must be < 1/2")
    normalized = project(net, clip_bias=False)
    starred = truncate_inputs(normalized, N_cut)
    gamma_l1 = float(np.abs(normalized.gamma).sum())
    tail_l1 = np.abs(normalized.W[:, N_cut:]).sum(axis=1)
    support = np.array([np.max(np.nonzero(row)[0]) + 1 if np.any(row) else 0
                        for row in normalized.W])
    dropped = np.nonzero(support > N_cut)[0]

    grid, metrics = [], []
    for i, delta in enumerate(deltas):
        X = sample_cut(net.N, N_cut, delta, n_samples, derive_seed(seed, i))
        full = forward(normalized, X)
        cut = forward(starred, X)
        gap = float(np.max(np.abs(cut - full)))
        bound = gamma_l1 * delta
        row = {"max_gap": gap, "certified_bound": bound,
               "tight_bound": float(np.abs(normalized.gamma) @ tail_l1) * delta,
               "bound_holds": bool(gap <= bound)}
        if f is not None:
            labels = np.asarray(f(X), dtype=float)
            row["rmse_full"] = float(np.sqrt(np.mean((full - labels) ** 2)))
            row["rmse_cut"] = float(np.sqrt(np.mean((cut - labels) ** 2)))
        h1_sum = bound_sum = 0.0
        h_violations = 0
        if delta > 0:
            for j in dropped:
                g, w, t = normalized.gamma[j], normalized.W[j], normalized.t[j]
                h1 = unit_h1_norm(g, w, t, N_cut, int(support[j]), delta, h1_samples,
                                  derive_seed(seed, i, int(j)))
                ub = abs(g) * math.sqrt((0.5 + max(abs(t), 1.0)) ** 2 + 1.0) \
                    * (2 * delta) ** ((support[j] - N_cut) / 2)
                h1_sum += h1
                bound_sum += ub
                h_violations += int(h1 > ub)
        row.update({"dropped_units": int(dropped.size), "dropped_h1_sum": h1_sum,
                    "dropped_h1_bound": bound_sum, "h1_violations": h_violations})
        grid.append({"delta": delta})
        metrics.append(row)
    config = {"functional": None if f is None else f.name, "N_full": net.N, "N_cut": N_cut,
              "deltas": deltas, "n_samples": n_samples, "h1_samples": h1_samples, "seed": seed}
    summary = {"sum_abs_gamma": gamma_l1,
               "violations": sum(not r["bound_holds"] for r in metrics),
               "h1_violations": sum(r["h1_violations"] for r in metrics),
               "units_with_large_threshold": int(np.sum(np.abs(normalized.t) > 1))}
    return ExperimentReport("cutoff", grid, metrics, metadata=_metadata("cutoff", config),
                            summary=summary)


def matched_widths(budget: int, n_inputs: int) -> tuple[int, int]:
    """Per-coordinate ``m`` (``3mN + 1`` params) and dense width (``m(N+2) + 1``)."""
    m_pc = max(1, round((budget - 1) / (3 * n_inputs)))
    m_dense = max(1, round((budget - 1) / (n_inputs + 2)))
    return m_pc, m_dense


def per_coordinate_study(f: FunctionalSpec, budget: int, cfg: TrainConfig, *,
                         n_train: int = 4096, n_test: int = 2048, seeds: int = 1,
                         seed: int = 0) -> ExperimentReport:
    """Per-coordinate versus dense form at (approximately) equal parameter count."""
    if not f.singleton_structure:
        raise StructureError(f"{f.name!r} does not have singleton structure")
    if budget < 4:
        raise ValidationError("parameter budget must be >= 4")
    X, y = draw_dataset(f, n_train, derive_seed(seed, 0))
    Xt, yt = draw_dataset(f, n_test, derive_seed(seed, 1))
    m_pc, m_dense = matched_widths(budget, f.n_inputs)
    grid, metrics, timings = [], [], []
    for form, m in (("per-coordinate", m_pc), ("dense", m_dense)):
        t0 = time.perf_counter()
        _, row = fit_best_of(m, X, y, Xt, yt, cfg, seeds=seeds, form=form, base_seed=seed)
        timings.append(time.perf_counter() - t0)
        grid.append({"form": form, "m": m})
        metrics.append(row)
    constant_rmse = float(np.sqrt(np.mean((yt - np.mean(y)) ** 2)))
    config = {"functional": f.name, "params": dict(f.params), "budget": budget,
              "train": cfg.to_dict(), "n_train": n_train, "n_test": n_test, "seeds": seeds,
              "seed": seed}
    summary = {"constant_predictor_rmse": constant_rmse,
               "both_beat_constant": all(r["test_rmse"] < constant_rmse for r in metrics)}
    return ExperimentReport("per-coordinate", grid, metrics,
                            metadata=_metadata("per-coordinate", config), summary=summary,
                            timings=timings)


@dataclass(frozen=True)
class BaselineSpec:
    """Grid-sampling (branch-only) baseline: a width-n net on ``v(x_1..x_m)``."""

    grid_size: int
    hidden_width: int
    sample_points: tuple[float, ...] = ()
    spatial_dim: int = 1

    def __post_init__(self):
        if self.grid_size < 1 or self.hidden_width < 1:
            raise ValidationError("grid_size and hidden_width must be >= 1")
        pts = self.sample_points or lattice_points(self.grid_size, self.spatial_dim)
        pts = tuple(tuple(p) if np.ndim(p) else (float(p),) for p in pts)
        s = round(len(pts) ** (1 / self.spatial_dim)) - 1
        for p in pts:
            for c in p:
                if not 0 <= c <= 1 or (s > 0 and abs(c * s - round(c * s)) > 1e-12) \
                        or (s == 0 and c != 0):
                    raise ValidationError(f"sample point {p} is not on the uniform lattice")
        if len(pts) != self.grid_size:
            raise ValidationError("grid_size must equal the number of sample points")
        object.__setattr__(self, "sample_points", pts)


def lattice_points(grid_size: int, spatial_dim: int = 1) -> tuple[tuple[float, ...], ...]:
    """``(s+1)^d`` nodes of ``{0, 1/s, ..., 1}^d`` with ``grid_size = (s+1)^d``."""
    side = round(grid_size ** (1 / spatial_dim))
    if side ** spatial_dim != grid_size:
        raise ValidationError(f"grid_size {grid_size} is not a perfect {spatial_dim}-th power")
    axis = [0.0] if side == 1 else [i / (side - 1) for i in range(side)]
    return tuple(itertools.product(axis, repeat=spatial_dim))


def point_values(X: np.ndarray, points, basis: BasisSpec = DEFAULT_BASIS) -> np.ndarray:
    """``v(x_j)`` for each row of coefficients ``X``."""
    pts = np.asarray(points, dtype=float).reshape(-1, basis.spatial_dim)
    phi = basis.design_matrix(pts, X.shape[1])
    vals = X @ phi.T
    return 2.0 * vals.real if basis.kind == "complex-exponential" else np.real(vals)


def deeponet_baseline(f: FunctionalSpec, baseline: BaselineSpec, cfg: TrainConfig,
                      n_train: int, n_test: int, *, widths: Sequence[int] | None = None,
                      seeds: int = 1, seed: int = 0,
                      basis: BasisSpec = DEFAULT_BASIS) -> ExperimentReport:
    """Grid-sampling baseline next to the coefficient net at matched parameter count."""
    widths = [int(w) for w in (widths or [baseline.hidden_width])]
    X, y = draw_dataset(f, n_train, derive_seed(seed, 0))
    Xt, yt = draw_dataset(f, n_test, derive_seed(seed, 1))
    P, Pt = point_values(X, baseline.sample_points, basis), point_values(Xt, baseline.sample_points, basis)
    grid, metrics, timings = [], [], []
    for n in widths:
        t0 = time.perf_counter()
        _, base_row = fit_best_of(n, P, y, Pt, yt, cfg, seeds=seeds, base_seed=derive_seed(seed, 7))
        budget = n * (baseline.grid_size + 2) + 1
        m_spec = max(1, round((budget - 1) / (f.n_inputs + 2)))
        _, spec_row = fit_best_of(m_spec, X, y, Xt, yt, cfg, seeds=seeds, base_seed=seed)
        timings.append(time.perf_counter() - t0)
        grid.append({"width": n, "grid_size": baseline.grid_size})
        metrics.append({"baseline_params": base_row["n_params"],
                        "baseline_test_rmse": base_row["test_rmse"],
                        "spectral_width": m_spec, "spectral_params": spec_row["n_params"],
                        "spectral_test_rmse": spec_row["test_rmse"]})
    config = {"functional": f.name, "params": dict(f.params), "grid_size": baseline.grid_size,
              "sample_points": [list(p) for p in baseline.sample_points], "widths": widths,
              "train": cfg.to_dict(), "n_train": n_train, "n_test": n_test, "seeds": seeds,
              "seed": seed}
    summary = {"label_std": float(np.std(yt))}
    return ExperimentReport("baseline", grid, metrics, metadata=_metadata("baseline", config),
                            summary=summary, timings=timings)
