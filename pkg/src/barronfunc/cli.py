"""Command-line entry point.

    barronfunc coefficients --config cfg.json
    barronfunc study {convergence,cutoff,per-coordinate,baseline} --config cfg.json
    barronfunc pde {pointwise,grid} --config cfg.json
    barronfunc sample-data --config cfg.json

Each run writes ``<out>/<command>[-<kind>]-<hash>/`` holding the resolved
config, a manifest and the artifacts. Passing a manifest back through
``--config`` re-runs with the recorded configuration. Exit status is 0 on
success, 1 on numerical/runtime failure and 2 on configuration errors.
"""
from __future__ import annotations

import argparse
import copy
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DivergenceError, NumericalError, ValidationError
from .experiments import (BaselineSpec, ExperimentReport, convergence_study, cutoff_study,
                          deeponet_baseline, draw_dataset, per_coordinate_study)
from .function_space import DomainSpec, evaluate, sample_array
from .functional_zoo import make_functional
from .pde_app import (PoissonProblem, apply_grid_operator, build_grid_operator,
                      generate_dataset, learn_pointwise, oracle_residual, solution_coeffs,
                      split_indices, uniform_interior_grid)
from .reporting import (canonical_json, code_version, config_hash, derive_seed, file_sha256,
                        rows_to_csv, write_text)
from .shallow_net import TrainConfig, forward, init_net, train
from .spectral import barron_norm, coefficients, coefficients_cut, hilbert_norm

log = logging.getLogger("barronfunc")

CONFIG_VERSION = 1
STUDY_KINDS = ("convergence", "cutoff", "per-coordinate", "baseline")
PDE_MODES = ("pointwise", "grid")
# wall-clock artifacts; excluded from the manifest digests
VOLATILE = {"timings.json"}
PLOT_AXES = {"convergence": ("m", "test_rmse"), "cutoff": ("delta", "max_gap"),
             "per-coordinate": ("m", "test_rmse"), "baseline": ("width", "baseline_test_rmse")}

TRAIN_DEFAULTS = TrainConfig().to_dict()
DOMAIN_KEYS = {"kind", "N", "delta", "decay_C", "decay_exponent"}
FUNCTIONAL_KEYS = {"name", "params"}

REQUIRED = object()

# top-level keys per command with their defaults
SCHEMAS: dict[str, dict] = {
    "coefficients": {"functional": REQUIRED, "domain": {}, "max_linf": 32, "quad_points": None,
                     "cut_domain": None},
    "study:convergence": {"functional": REQUIRED, "domain": {}, "train": {}, "m_grid": REQUIRED,
                          "n_train": 4096, "n_test": 2048, "seeds": 3},
    "study:cutoff": {"functional": REQUIRED, "domain": {}, "train": {}, "net_width": 32,
                     "n_train": 4096, "N_cut": REQUIRED, "deltas": [0.1, 0.05, 0.025],
                     "n_samples": 10000, "h1_samples": 4096},
    "study:per-coordinate": {"functional": REQUIRED, "domain": {}, "train": {}, "budget": REQUIRED,
                             "n_train": 4096, "n_test": 2048, "seeds": 1},
    "study:baseline": {"functional": REQUIRED, "domain": {}, "train": {}, "grid_size": REQUIRED,
                       "hidden_width": 16, "widths": None, "n_train": 4096, "n_test": 2048,
                       "seeds": 1},
    "pde:pointwise": {"problem": {}, "domain": {}, "train": {}, "x0": 0.3, "M": 2000,
                      "net_width": 64},
    "pde:grid": {"problem": {}, "domain": {}, "train": {}, "Q": 17, "grid": None, "M": 2000,
                 "net_width": 64, "n_eval": 20, "eval_points": 401},
    "sample-data": {"functional": REQUIRED, "domain": {}, "n_samples": 100, "n_coeffs": None},
}
COMMON = {"version": CONFIG_VERSION, "seed": 0}


def _reject_unknown(section: str, data: dict, allowed) -> None:
    for key in data:
        if key not in allowed:
            raise ValidationError(f"unknown config key {section + key!r}")


def resolve_config(schema_key: str, raw: dict, seed: int | None = None) -> dict:
    """Merge defaults, reject unknown keys and check that required keys exist."""
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    schema = {**COMMON, **SCHEMAS[schema_key]}
    _reject_unknown("", raw, schema)
    if raw.get("version", CONFIG_VERSION) != CONFIG_VERSION:
        raise ValidationError(f"unsupported config version {raw.get('version')!r}")
    for key, default in schema.items():
        if default is REQUIRED and raw.get(key) is None:
            raise ValidationError(f"missing required config key {key!r}")
    cfg = copy.deepcopy({k: v for k, v in schema.items() if v is not REQUIRED})
    cfg.update(copy.deepcopy(raw))
    if seed is not None:
        cfg["seed"] = seed
    if "train" in cfg:
        _reject_unknown("train.", cfg["train"], TRAIN_DEFAULTS)
        cfg["train"] = {**TRAIN_DEFAULTS, **cfg["train"]}
    for key in ("domain", "cut_domain"):
        if cfg.get(key) is not None:
            _reject_unknown(key + ".", cfg[key], DOMAIN_KEYS)
    if cfg.get("functional") is not None:
        if not isinstance(cfg["functional"], dict):
            raise ValidationError("'functional' must be an object with 'name' and 'params'")
        _reject_unknown("functional.", cfg["functional"], FUNCTIONAL_KEYS)
        if "name" not in cfg["functional"]:
            raise ValidationError("missing required config key 'functional.name'")
    if "problem" in cfg:
        _reject_unknown("problem.", cfg["problem"], {"variant", "alpha", "n_modes"})
    return cfg


def _domain(cfg: dict, key: str = "domain", n_default: int = 8) -> DomainSpec:
    data = dict(cfg.get(key) or {})
    data.setdefault("N", n_default)
    try:
        return DomainSpec(**data)
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc


def _functional(cfg: dict):
    spec = cfg["functional"]
    domain = _domain(cfg)
    try:
        f = make_functional(spec["name"], spec.get("params", {}), domain)
    except ValidationError as exc:
        raise ValidationError(f"functional: {exc}") from exc
    return dataclasses.replace(f, domain=domain) if cfg.get("domain") else f


def _train_cfg(cfg: dict) -> TrainConfig:
    try:
        return TrainConfig.from_dict(cfg["train"])
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc


class RunDir:
    """Collects artifacts and writes the manifest last."""

    def __init__(self, out: Path, label: str, config: dict):
        self.config = config
        self.hash = config_hash(config)
        self.path = Path(out) / f"{label}-{self.hash}"
        self.path.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []
        self.write("config.json", canonical_json(config, indent=1))

    def write(self, name: str, text: str) -> Path:
        p = write_text(self.path / name, text)
        self.files.append(p)
        return p

    def add(self, paths) -> None:
        self.files.extend(paths)

    def finish(self, label: str, status: str = "complete") -> Path:
        manifest = {
            "manifest_version": CONFIG_VERSION,
            "code_version": code_version(),
            "command": label,
            "status": status,
            "config_hash": self.hash,
            "resolved_config": self.config,
            "files": {str(p.relative_to(self.path)): file_sha256(p)
                      for p in sorted(set(self.files)) if p.name not in VOLATILE},
            "volatile_files": sorted(VOLATILE),
        }
        return write_text(self.path / "manifest.json", canonical_json(manifest, indent=1))


def cmd_coefficients(cfg: dict, out: Path, jobs: int) -> Path:
    f = _functional(cfg)
    quad = cfg["quad_points"] or 8 * cfg["max_linf"]
    if cfg.get("cut_domain"):
        table = coefficients_cut(f, _domain(cfg, "cut_domain"), cfg["max_linf"], quad, jobs=jobs)
    else:
        table = coefficients(f, cfg["max_linf"], quad, jobs=jobs)
    run = RunDir(out, "coefficients", cfg)
    run.write("table.json", table.to_json())
    run.write("table.csv", table.to_csv())
    b, h = barron_norm(table), hilbert_norm(table)
    run.write("norms.json", canonical_json({"barron_norm": b, "hilbert_norm": h,
                                            "s_barron": table.s_barron,
                                            "s_hilbert": table.s_hilbert,
                                            "n_entries": len(table),
                                            "embedding_holds": h <= b}, indent=1))
    if not h <= b:
        raise NumericalError(f"embedding violated: hilbert {h} > barron {b}")
    run.finish("coefficients")
    return run.path


def _study_report(kind: str, cfg: dict, f, tcfg: TrainConfig, baseline: BaselineSpec | None,
                  jobs: int) -> tuple[ExperimentReport, dict]:
    seed = int(cfg["seed"])
    extra = {}
    if kind == "convergence":
        report = convergence_study(f, cfg["m_grid"], tcfg, cfg["n_train"], cfg["n_test"],
                                   seeds=cfg["seeds"], seed=seed, jobs=jobs)
    elif kind == "cutoff":
        X, y = draw_dataset(f, cfg["n_train"], derive_seed(seed, 0))
        net = init_net(cfg["net_width"], X.shape[1], label_mean=float(np.mean(y)),
                       seed=derive_seed(seed, 1), init_scale=tcfg.init_scale)
        net = train(net, X, y, tcfg).net
        report = cutoff_study(f, net, cfg["N_cut"], cfg["deltas"], n_samples=cfg["n_samples"],
                              h1_samples=cfg["h1_samples"], seed=seed)
        extra["net.json"] = net.to_json()
    elif kind == "per-coordinate":
        report = per_coordinate_study(f, cfg["budget"], tcfg, n_train=cfg["n_train"],
                                      n_test=cfg["n_test"], seeds=cfg["seeds"], seed=seed)
    else:
        report = deeponet_baseline(f, baseline, tcfg, cfg["n_train"], cfg["n_test"],
                                   widths=cfg["widths"], seeds=cfg["seeds"], seed=seed)
    return report, extra


def cmd_study(kind: str, cfg: dict, out: Path, jobs: int) -> Path:
    f = _functional(cfg)
    tcfg = _train_cfg(cfg)
    baseline = None
    if kind == "baseline":
        baseline = BaselineSpec(int(cfg["grid_size"]), int(cfg["hidden_width"]))
    if kind == "cutoff" and not 0 < int(cfg["N_cut"]) < f.n_inputs:
        raise ValidationError(f"'N_cut' must lie in [1, {f.n_inputs - 1}]")
    run = RunDir(out, f"study-{kind}", cfg)
    try:
        report, extra = _study_report(kind, cfg, f, tcfg, baseline, jobs)
    except DivergenceError as exc:
        partial = getattr(exc, "partial_report", None)
        if partial is not None:
            run.add(partial.write(run.path / "partial"))
        run.finish(f"study {kind}", status="diverged")
        raise
    run.add(report.write(run.path, plot=PLOT_AXES[kind]))
    for name, text in extra.items():
        run.write(name, text)
    run.finish(f"study {kind}")
    return run.path


def _problem(cfg: dict) -> PoissonProblem:
    try:
        return PoissonProblem(**cfg["problem"])
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc


def cmd_pde(mode: str, cfg: dict, out: Path, jobs: int) -> Path:
    problem = _problem(cfg)
    domain = _domain(cfg, n_default=problem.n_modes)
    tcfg = _train_cfg(cfg)
    seed = int(cfg["seed"])
    if mode == "grid":
        grid = cfg["grid"] or uniform_interior_grid(int(cfg["Q"]))
        if not isinstance(grid, (list, tuple)) or not grid:
            raise ValidationError("'grid' must be a nonempty list")
        if any(not 0 < y < 1 for y in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("'grid' must be strictly increasing inside (0, 1)")
    x0 = float(cfg["x0"]) if mode == "pointwise" else None
    if x0 is not None and not 0 < x0 < 1:
        raise ValidationError("'x0' must lie in (0, 1)")
    run = RunDir(out, f"pde-{mode}", cfg)
    if mode == "pointwise":
        data = generate_dataset(problem, domain, x0, int(cfg["M"]), seed)
        res = learn_pointwise(data, int(cfg["net_width"]), tcfg, seed=seed)
        run.write("dataset.csv", data.to_csv())
        run.write("net.json", res.net.to_json())
        run.write("loss_trace.csv", res.train_result.trace_csv())
        run.write("metrics.csv", rows_to_csv(
            ["x0", "test_rmse", "label_rms", "relative_rmse"],
            [[x0, res.test_rmse, res.label_rms, res.test_rmse / res.label_rms]]))
        _, te = split_indices(data.M, derive_seed(seed, 11))
        pred = forward(res.net, data.coeffs[te])
        run.write("oracle_errors.csv", rows_to_csv(
            ["sample", "prediction", "oracle", "abs_error"],
            [[int(i), float(p), float(u), float(abs(p - u))]
             for i, p, u in zip(te, pred, data.labels[te])]))
    else:
        op, data = build_grid_operator(problem, domain, grid, int(cfg["M"]),
                                       int(cfg["net_width"]), tcfg, seed, jobs=jobs)
        run.write("dataset.csv", data.to_csv())
        run.write("grid_operator.json", canonical_json(op.to_dict()))
        for q, net in enumerate(op.nets):
            run.write(f"nets/net_{q:03d}.json", net.to_json())
        run.write("metrics.csv", rows_to_csv(
            ["y", "test_rmse", "label_rms"],
            [[y, r, s] for y, r, s in zip(op.grid, op.test_rmse, op.label_rms)]))
        G = sample_array(domain, problem.n_modes, int(cfg["n_eval"]), derive_seed(seed, 99))
        ys = np.linspace(op.grid[0], op.grid[-1], int(cfg["eval_points"]))
        xs = np.linspace(0.0, 1.0, 1001)
        rows = []
        for s, g in enumerate(G):
            u = solution_coeffs(problem, g)
            err = float(np.max(np.abs(apply_grid_operator(op, g, ys) - evaluate(u, ys))))
            sup = float(np.max(np.abs(evaluate(u, xs))))
            rows.append([s, err, sup, err / sup, oracle_residual(problem, g)])
        run.write("oracle_errors.csv", rows_to_csv(
            ["sample", "sup_error", "u_sup", "relative_sup_error", "oracle_residual"], rows))
    run.finish(f"pde {mode}")
    return run.path


def cmd_sample_data(cfg: dict, out: Path, jobs: int) -> Path:
    f = _functional(cfg)
    n = int(cfg["n_coeffs"] or f.n_inputs)
    X = sample_array(f.domain, n, int(cfg["n_samples"]), int(cfg["seed"]))
    y = np.asarray(f(X), dtype=float)
    run = RunDir(out, "sample-data", cfg)
    header = [f"b_{i}" for i in range(1, n + 1)] + ["label"]
    run.write("dataset.csv", rows_to_csv(header, np.hstack([X, y[:, None]]).tolist()))
    run.finish("sample-data")
    return run.path


def _load_config(path: str | None) -> tuple[dict, str | None]:
    if path is None:
        return {}, None
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    if isinstance(data, dict) and "resolved_config" in data:
        return data["resolved_config"], data.get("command")
    return data, None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="barronfunc", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file or a run manifest")
    common.add_argument("--out", default="runs", help="parent directory for run directories")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--jobs", type=int, default=1, help="max concurrent tasks")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("coefficients", parents=[common], help="Fourier table and norms")
    study = sub.add_parser("study", parents=[common], help="rate studies")
    study.add_argument("kind", choices=STUDY_KINDS)
    pde = sub.add_parser("pde", parents=[common], help="pointwise Poisson learning")
    pde.add_argument("mode", choices=PDE_MODES)
    sub.add_parser("sample-data", parents=[common], help="labelled functional samples")
    return parser


def run(argv=None) -> Path:
    """Parse ``argv`` and execute; raises on failure (see :func:`main`)."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.jobs < 1:
        raise ValidationError("--jobs must be >= 1")
    raw, _ = _load_config(args.config)
    out = Path(args.out)
    if args.command == "coefficients":
        cfg = resolve_config("coefficients", raw, args.seed)
        return cmd_coefficients(cfg, out, args.jobs)
    if args.command == "study":
        cfg = resolve_config(f"study:{args.kind}", raw, args.seed)
        return cmd_study(args.kind, cfg, out, args.jobs)
    if args.command == "pde":
        cfg = resolve_config(f"pde:{args.mode}", raw, args.seed)
        return cmd_pde(args.mode, cfg, out, args.jobs)
    cfg = resolve_config("sample-data", raw, args.seed)
    return cmd_sample_data(cfg, out, args.jobs)


def main(argv=None) -> int:
    try:
        path = run(argv)
    except ValidationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - the CLI must not surface tracebacks
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
