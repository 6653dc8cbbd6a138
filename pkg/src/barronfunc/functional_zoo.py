"""Concrete target functionals with declared decomposition structure.

Each functional splits as ``f(v) = sum_j f_j(b restricted to D_j)`` over
finite coordinate groups ``D_j`` (1-based positions). Blocks are vectorised:
a block callable receives an array of shape ``(..., |D_j|)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DecayTooSlowError, StructureError, ValidationError
from .function_space import DomainSpec

BlockFn = Callable[[np.ndarray], np.ndarray]
ClosedForm = Callable[[int, tuple[int, ...]], complex]


@dataclass(frozen=True)
class FunctionalSpec:
    name: str
    evaluate_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    n_inputs: int
    structure: tuple[tuple[int, ...], ...] | None = None
    blocks: tuple[BlockFn, ...] | None = field(default=None, repr=False)
    params: Mapping[str, object] = field(default_factory=dict)
    domain: DomainSpec = field(default_factory=DomainSpec)
    closed_form: ClosedForm | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.structure is not None:
            if any(len(block) == 0 for block in self.structure):
                raise StructureError("every coordinate group must be nonempty")
            if self.blocks is None or len(self.blocks) != len(self.structure):
                raise StructureError("one block function per structure element is required")

    @property
    def separable(self) -> bool:
        return self.structure is not None

    @property
    def singleton_structure(self) -> bool:
        return self.separable and all(len(block) == 1 for block in self.structure)

    def _inputs(self, v) -> np.ndarray:
        b = np.asarray(getattr(v, "coeffs", v), dtype=float)
        n = b.shape[-1]
        if n >= self.n_inputs:
            return b[..., : self.n_inputs]
        pad = np.zeros(b.shape[:-1] + (self.n_inputs - n,))
        return np.concatenate([b, pad], axis=-1)

    def evaluate(self, v):
        """Value on a coefficient vector, or row-wise on a ``(M, N)`` array.

        Missing trailing coefficients are treated as zero; coefficients past
        ``n_inputs`` are ignored.
        """
        b = self._inputs(v)
        out = self.evaluate_fn(b)
        return float(out) if np.ndim(out) == 0 else out

    __call__ = evaluate


def _check_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float).ravel()
    if w.size < 1 or not np.all(np.isfinite(w)):
        raise ValidationError("weights must be a nonempty finite sequence")
    return w


def linear_kernel(k: int) -> complex:
    """``int_{-1/2}^{1/2} b exp(-2 pi i k b) db``."""
    if k == 0:
        return 0j
    return 1j * (-1) ** k / (2 * math.pi * k)


def cubic_kernel(k: int) -> complex:
    """``int_{-1/2}^{1/2} b^3 exp(-2 pi i k b) db``."""
    if k == 0:
        return 0j
    return 1j * (-1) ** k * (1 / (8 * math.pi * k) - 3 / (4 * math.pi ** 3 * k ** 3))


def square_kernel(k: int) -> complex:
    """``int_{-1/2}^{1/2} b^2 exp(-2 pi i k b) db``."""
    if k == 0:
        return 1 / 12 + 0j
    return (-1) ** k / (2 * math.pi ** 2 * k ** 2) + 0j


def _singletons(n: int) -> tuple[tuple[int, ...], ...]:
    return tuple((i,) for i in range(1, n + 1))


def _scaled_power_blocks(w: np.ndarray, power: int) -> tuple[BlockFn, ...]:
    return tuple((lambda b, a=float(a): a * b[..., 0] ** power) for a in w)


def make_linear(weights: Sequence[float]) -> FunctionalSpec:
    """``f(v) = sum_i c_i b_i`` with singleton structure."""
    c = _check_weights(weights)
    return FunctionalSpec(
        name="linear",
        evaluate_fn=lambda b: b @ c,
        n_inputs=c.size,
        structure=_singletons(c.size),
        blocks=_scaled_power_blocks(c, 1),
        params={"weights": c.tolist()},
        closed_form=lambda j, k: c[j] * linear_kernel(k[0]),
    )


def make_cubic(weights: Sequence[float]) -> FunctionalSpec:
    """``f(v) = sum_i s_i b_i^3``."""
    s = _check_weights(weights)
    return FunctionalSpec(
        name="cubic",
        evaluate_fn=lambda b: b ** 3 @ s,
        n_inputs=s.size,
        structure=_singletons(s.size),
        blocks=_scaled_power_blocks(s, 3),
        params={"weights": s.tolist()},
        closed_form=lambda j, k: s[j] * cubic_kernel(k[0]),
    )


def make_bilinear(weights: Sequence[float]) -> FunctionalSpec:
    """``f(v) = sum_i s_i b_i b_{i+1}`` on the overlapping pairs ``{i, i+1}``."""
    s = _check_weights(weights)
    n = s.size
    blocks = tuple((lambda b, a=float(a): a * b[..., 0] * b[..., 1]) for a in s)
    return FunctionalSpec(
        name="bilinear",
        evaluate_fn=lambda b: (b[..., :n] * b[..., 1:n + 1]) @ s,
        n_inputs=n + 1,
        structure=tuple((i, i + 1) for i in range(1, n + 1)),
        blocks=blocks,
        params={"weights": s.tolist()},
        closed_form=lambda j, k: s[j] * linear_kernel(k[0]) * linear_kernel(k[1]),
    )


def make_constant(value: float, n_inputs: int = 1) -> FunctionalSpec:
    """Constant functional; only ``a_0`` is nonzero."""
    value = float(value)
    return FunctionalSpec(
        name="constant",
        evaluate_fn=lambda b: np.full(b.shape[:-1], value) if b.ndim > 1 else value,
        n_inputs=n_inputs,
        structure=((1,),),
        blocks=(lambda b: np.full(b.shape[:-1], value),),
        params={"value": value},
        closed_form=lambda j, k: complex(value) if k[0] == 0 else 0j,
    )


def energy_band(i: int) -> int:
    """Frequency of coefficient position ``i`` in the 1-D real-trigonometric basis."""
    return (i + 1) // 2


def make_energy(alpha: float, domain: DomainSpec) -> FunctionalSpec:
    """Gradient energy ``int_0^1 alpha/2 v'(x)^2 dx`` on the 1-D real-trig basis.

    Position ``i`` carries frequency ``n = ceil(i/2)`` and contributes
    ``2 pi^2 alpha n^2 b_i^2``; ``domain.N`` coefficients are read.
    """
    if alpha <= 0:
        raise ValidationError("alpha must be positive")
    if domain.kind != "decay":
        raise ValidationError("the energy functional needs a decay-kind domain")
    if domain.decay_exponent <= 1.5:
        raise DecayTooSlowError(
            f"energy needs decay exponent > 3/2, got {domain.decay_exponent}")
    n = domain.N
    scale = np.array([2 * math.pi ** 2 * alpha * energy_band(i) ** 2 for i in range(1, n + 1)])
    return FunctionalSpec(
        name="energy",
        evaluate_fn=lambda b: b ** 2 @ scale,
        n_inputs=n,
        structure=_singletons(n),
        blocks=_scaled_power_blocks(scale, 2),
        params={"alpha": float(alpha), "bands": [energy_band(i) for i in range(1, n + 1)]},
        domain=domain,
        closed_form=lambda j, k: scale[j] * square_kernel(k[0]),
    )


def make_l2norm(domain: DomainSpec) -> FunctionalSpec:
    """``||v||_{L2} = sqrt(sum b_i^2)``; flagged non-separable (no structure)."""
    if domain.kind != "decay":
        raise ValidationError("the L2-norm functional needs a decay-kind domain")
    if domain.decay_exponent <= 0.5:
        raise DecayTooSlowError(
            f"L2 norm needs decay exponent > 1/2, got {domain.decay_exponent}")
    return FunctionalSpec(
        name="l2norm",
        evaluate_fn=lambda b: np.sqrt(np.sum(b ** 2, axis=-1)),
        n_inputs=domain.N,
        params={},
        domain=domain,
    )


def _weights_from(params: Mapping) -> list[float]:
    if "weights" in params:
        return list(params["weights"])
    if "n_modes" in params:
        # geometric weights s_i = ratio^i
        ratio = float(params.get("ratio", 0.5))
        return [ratio ** i for i in range(1, int(params["n_modes"]) + 1)]
    raise ValidationError("functional params need 'weights' or 'n_modes'")


def make_functional(name: str, params: Mapping | None = None,
                    domain: DomainSpec | None = None) -> FunctionalSpec:
    """Look up a zoo functional by name (used by the CLI)."""
    params = dict(params or {})
    if name == "linear":
        return make_linear(_weights_from(params))
    if name == "cubic":
        return make_cubic(_weights_from(params))
    if name == "bilinear":
        return make_bilinear(_weights_from(params))
    if name == "constant":
        return make_constant(params.get("value", 1.0), int(params.get("n_inputs", 1)))
    if name == "energy":
        if domain is None:
            raise ValidationError("energy needs a domain")
        return make_energy(float(params.get("alpha", 1.0)), domain)
    if name == "l2norm":
        if domain is None:
            raise ValidationError("l2norm needs a domain")
        return make_l2norm(domain)
    raise ValidationError(f"unknown functional name {name!r}")


ZOO_NAMES = ("linear", "cubic", "bilinear", "constant", "energy", "l2norm")
