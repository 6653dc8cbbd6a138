"""Two-layer ReLU functional approximant

    f_m(b) = c + sum_j gamma_j * relu(w_j . b - t_j)

with exact forward evaluation, analytic gradients and SGD/Adam training.
The per-coordinate form restricts every unit to one input coordinate
(``c + sum_{j,i} gamma_ij relu(w_ij b_i - t_ij)``); it is stored densely
with a fixed mask so both forms share one code path.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DivergenceError, LengthMismatchError, ValidationError

FORMS = ("dense", "per-coordinate")


@dataclass
class ShallowNet:
    c: float
    gamma: np.ndarray
    W: np.ndarray
    t: np.ndarray
    form: str = "dense"

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=float).ravel()
        self.t = np.asarray(self.t, dtype=float).ravel()
        self.W = np.atleast_2d(np.asarray(self.W, dtype=float))
        self.c = float(self.c)
        m, n = self.W.shape
        if m < 1 or n < 1:
            raise ValidationError("a net needs m >= 1 units and N >= 1 inputs")
        if self.gamma.shape != (m,) or self.t.shape != (m,):
            raise ValidationError("gamma and t must have one entry per unit")
        if self.form not in FORMS:
            raise ValidationError(f"unknown net form {self.form!r}")
        if self.form == "per-coordinate" and np.any(self.W[~self.mask] != 0):
            raise ValidationError("per-coordinate units must read exactly one coordinate")

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def N(self) -> int:
        return self.W.shape[1]

    @property
    def mask(self) -> np.ndarray:
        """Which weights are free parameters."""
        if self.form == "dense":
            return np.ones_like(self.W, dtype=bool)
        out = np.zeros_like(self.W, dtype=bool)
        out[np.arange(self.m), np.arange(self.m) % self.N] = True
        return out

    @property
    def n_params(self) -> int:
        return 1 + 2 * self.m + int(self.mask.sum())

    def copy(self) -> "ShallowNet":
        return replace(self, gamma=self.gamma.copy(), W=self.W.copy(), t=self.t.copy())

    def to_dense(self) -> "ShallowNet":
        return replace(self.copy(), form="dense")

    def to_dict(self) -> dict:
        units = [{"gamma": float(g), "w": [float(x) for x in w], "t": float(t)}
                 for g, w, t in zip(self.gamma, self.W, self.t)]
        return {"form": self.form, "c": self.c, "N": self.N, "units": units}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ShallowNet":
        units = data["units"]
        return cls(c=data["c"], gamma=[u["gamma"] for u in units],
                   W=[u["w"] for u in units], t=[u["t"] for u in units], form=data["form"])

    @classmethod
    def from_json(cls, text: str) -> "ShallowNet":
        return cls.from_dict(json.loads(text))


@dataclass
class NetGradient:
    c: float
    gamma: np.ndarray
    W: np.ndarray
    t: np.ndarray

    def flat(self) -> np.ndarray:
        return np.concatenate([[self.c], self.gamma, self.W.ravel(), self.t])


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 1e-2
    batch_size: int = 128
    epochs: int = 200
    seed: int = 0
    init_scale: float = 1.0
    project_constraints: bool = False
    lr_schedule: str = "cosine"
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8

    def __post_init__(self):
        if self.optimizer not in ("sgd", "adam"):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValidationError("batch_size and epochs must be >= 1")
        if not self.init_scale > 0:
            raise ValidationError("init_scale must be positive")
        if self.lr_schedule not in ("cosine", "constant"):
            raise ValidationError(f"unknown lr_schedule {self.lr_schedule!r}")

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["betas"] = list(self.betas)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        data = dict(data)
        if "betas" in data:
            data["betas"] = tuple(data["betas"])
        return cls(**data)


def init_net(m: int, N: int, *, form: str = "dense", label_mean: float = 0.0,
             seed: int = 0, init_scale: float = 1.0) -> ShallowNet:
    """Initial net: l1-normalised random weights, ``t`` in ``(-1, 1)``, ``gamma = 0``.

    For the per-coordinate form ``m`` counts units per coordinate, so the
    net has ``m * N`` units.
    """
    if m < 1 or N < 1:
        raise ValidationError("m and N must be >= 1")
    rng = np.random.default_rng(seed)
    units = m if form == "dense" else m * N
    bound = 1.0 / math.sqrt(N)
    W = rng.uniform(-bound, bound, size=(units, N))
    if form == "per-coordinate":
        mask = np.zeros_like(W, dtype=bool)
        mask[np.arange(units), np.arange(units) % N] = True
        W = np.where(mask, W, 0.0)
    norms = np.abs(W).sum(axis=1)
    norms[norms == 0] = 1.0
    W = init_scale * W / norms[:, None]
    t = init_scale * rng.uniform(-1.0, 1.0, size=units)
    return ShallowNet(c=label_mean, gamma=np.zeros(units), W=W, t=t, form=form)


def _inputs(net: ShallowNet, b) -> np.ndarray:
    b = np.asarray(getattr(b, "coeffs", b), dtype=float)
    if b.shape[-1] != net.N:
        raise LengthMismatchError(f"net expects {net.N} inputs, got {b.shape[-1]}")
    return b


def forward(net: ShallowNet, b):
    """``c + sum_j gamma_j max(0, w_j . b - t_j)``; accepts one input or a batch."""
    x = _inputs(net, b)
    z = x @ net.W.T - net.t
    out = net.c + np.maximum(z, 0.0) @ net.gamma
    return float(out) if np.ndim(out) == 0 else out


def gradient(net: ShallowNet, b, residual_weight: float = 1.0) -> NetGradient:
    """``residual_weight * d forward / d theta`` at one input; ReLU'(0) taken as 0."""
    x = _inputs(net, b)
    if x.ndim != 1:
        raise LengthMismatchError("gradient takes a single input vector")
    z = net.W @ x - net.t
    active = (z > 0).astype(float)
    g = residual_weight * net.gamma * active
    dW = np.outer(g, x) * net.mask
    return NetGradient(c=float(residual_weight), gamma=residual_weight * np.maximum(z, 0.0),
                       W=dW, t=-g)


def path_norm(net: ShallowNet) -> float:
    """``sum_j |gamma_j| |w_j|_1 + 2 |c|``."""
    return float(np.sum(np.abs(net.gamma) * np.abs(net.W).sum(axis=1)) + 2 * abs(net.c))


def project(net: ShallowNet, *, clip_bias: bool = True) -> ShallowNet:
    """Rescale every unit to ``|w_j|_1 = 1`` (exact by positive homogeneity).

    With ``clip_bias`` the thresholds are then clipped to ``|t_j| <= 1``,
    which may change function values.
    """
    out = net.copy()
    s = np.abs(out.W).sum(axis=1)
    live = s > 0
    out.W[live] /= s[live, None]
    out.t[live] /= s[live]
    out.gamma[live] *= s[live]
    if clip_bias:
        np.clip(out.t, -1.0, 1.0, out=out.t)
    return out


def mse(net: ShallowNet, X: np.ndarray, y: np.ndarray) -> float:
    r = forward(net, X) - y
    return float(np.mean(r * r))


@dataclass
class TrainResult:
    net: ShallowNet
    trace: list[dict] = field(default_factory=list)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "test_loss", "path_norm"])
        for row in self.trace:
            test = "" if row["test_loss"] is None else repr(row["test_loss"])
            w.writerow([row["epoch"], repr(row["train_loss"]), test, repr(row["path_norm"])])
        return buf.getvalue()


def dataset_arrays(dataset) -> tuple[np.ndarray, np.ndarray]:
    """Turn a sequence of ``(coeffs, label)`` pairs into ``(X, y)`` arrays."""
    X = np.array([np.asarray(getattr(v, "coeffs", v), dtype=float) for v, _ in dataset])
    y = np.array([float(lab) for _, lab in dataset])
    return X, y


def train(net: ShallowNet, X, y=None, cfg: TrainConfig = TrainConfig(), *,
          X_test: np.ndarray | None = None, y_test: np.ndarray | None = None) -> TrainResult:
    """Minimise the empirical mean-squared error.

    ``X`` is an ``(M, N)`` array with labels ``y``, or a sequence of
    ``(coeffs, label)`` pairs with ``y`` omitted. The input net is not
    modified. Raises :class:`DivergenceError` on a non-finite loss.
    """
    if y is None:
        X, y = dataset_arrays(X)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("training needs a nonempty (M, N) input array")
    if X.shape[0] != y.shape[0]:
        raise LengthMismatchError("inputs and labels differ in length")
    _inputs(net, X)
    M = X.shape[0]
    batch = min(cfg.batch_size, M)
    rng = np.random.default_rng(cfg.seed)
    net = net.copy()
    mask = net.mask.astype(float)

    params = [np.array([net.c]), net.gamma, net.W, net.t]
    m1 = [np.zeros_like(p) for p in params]
    m2 = [np.zeros_like(p) for p in params]
    steps_per_epoch = -(-M // batch)
    total = cfg.epochs * steps_per_epoch
    beta1, beta2 = cfg.betas
    step = 0
    trace = []

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(M)
        for start in range(0, M, batch):
            idx = order[start:start + batch]
            xb, yb = X[idx], y[idx]
            z = xb @ net.W.T - net.t
            a = np.maximum(z, 0.0)
            r = (net.c + a @ net.gamma - yb) * (2.0 / len(idx))
            G = r[:, None] * (z > 0) * net.gamma
            grads = [np.array([r.sum()]), a.T @ r, (G.T @ xb) * mask, -G.sum(axis=0)]

            if cfg.lr_schedule == "cosine":
                lr = cfg.learning_rate * 0.5 * (1.0 + math.cos(math.pi * step / total))
            else:
                lr = cfg.learning_rate
            step += 1
            if cfg.optimizer == "adam":
                bc1 = 1.0 - beta1 ** step
                bc2 = 1.0 - beta2 ** step
                for p, g, s1, s2 in zip(params, grads, m1, m2):
                    s1 *= beta1
                    s1 += (1 - beta1) * g
                    s2 *= beta2
                    s2 += (1 - beta2) * g * g
                    p -= lr * (s1 / bc1) / (np.sqrt(s2 / bc2) + cfg.eps)
            else:
                for p, g in zip(params, grads):
                    p -= lr * g
            net.c = float(params[0][0])
            if cfg.project_constraints:
                s = np.abs(net.W).sum(axis=1)
                live = s > 0
                net.W[live] /= s[live, None]
                net.t[live] /= s[live]
                net.gamma[live] *= s[live]
                np.clip(net.t, -1.0, 1.0, out=net.t)

        train_loss = mse(net, X, y)
        if not math.isfinite(train_loss):
            raise DivergenceError(f"training loss became non-finite at epoch {epoch}")
        test_loss = mse(net, X_test, y_test) if X_test is not None else None
        trace.append({"epoch": epoch, "train_loss": train_loss, "test_loss": test_loss,
                      "path_norm": path_norm(net)})
    return TrainResult(net, trace)
