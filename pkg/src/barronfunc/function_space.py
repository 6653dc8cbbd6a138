"""Functions on [0,1]^d represented by basis coefficient vectors.

Three bases are supported:

``real-trigonometric``
    ``sqrt(2) cos(2 pi p.x)`` and ``sqrt(2) sin(2 pi p.x)`` for ``p`` in a
    half lattice (first nonzero component positive); cos precedes sin.
    Orthonormal on the unit cube. Optionally prefixed by the constant 1.
``complex-exponential``
    One complex coefficient ``c_p`` per half-lattice frequency with
    ``v = sum_p c_p exp(2 pi i p.x) + conj(c_p) exp(-2 pi i p.x)``.
``sine``
    ``2^(d/2) prod_j sin(pi p_j x_j)`` for ``p`` in the positive orthant.

Frequencies are ordered by ``|p|_1`` then lexicographically.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import (DimensionMismatchError, InsufficientResolutionError,
                     InvalidDomainError, ValidationError)
from .quadrature import PANEL_ORDER, composite_gauss_legendre

BASIS_KINDS = ("real-trigonometric", "complex-exponential", "sine")
DOMAIN_KINDS = ("bound", "cut", "decay")


@lru_cache(maxsize=32)
def _lattice(kind: str, dim: int, count: int) -> tuple[tuple[int, ...], ...]:
    """First ``count`` frequency vectors of a basis family in canonical order."""
    out: list[tuple[int, ...]] = []
    level = 1
    while len(out) < count:
        shell = []
        for p in itertools.product(range(-level, level + 1), repeat=dim):
            if sum(abs(c) for c in p) != level:
                continue
            if kind == "sine":
                if min(p) < 1:
                    continue
            else:
                first = next(c for c in p if c != 0)
                if first < 0:
                    continue
            shell.append(p)
        out.extend(sorted(shell))
        level += 1
        if level > 10_000:  # pragma: no cover - guards a non-terminating loop
            raise ValidationError("frequency lattice exhausted")
    return tuple(out[:count])


@dataclass(frozen=True)
class BasisSpec:
    kind: str = "real-trigonometric"
    spatial_dim: int = 1
    include_constant: bool = False

    def __post_init__(self):
        if self.kind not in BASIS_KINDS:
            raise ValidationError(f"unknown basis kind {self.kind!r}")
        if self.spatial_dim < 1:
            raise ValidationError("spatial_dim must be >= 1")
        if self.include_constant and self.kind != "real-trigonometric":
            raise ValidationError("only the real-trigonometric basis may include the constant")

    def modes(self, n: int) -> list[tuple[tuple[int, ...], str]]:
        """``(frequency, part)`` for positions 1..n; part is cos, sin, exp, sine or const."""
        d = self.spatial_dim
        out: list[tuple[tuple[int, ...], str]] = []
        if self.kind == "real-trigonometric":
            if self.include_constant:
                out.append(((0,) * d, "const"))
            need = n - len(out)
            for p in _lattice("trig", d, -(-need // 2) if need > 0 else 0):
                out.append((p, "cos"))
                out.append((p, "sin"))
        elif self.kind == "complex-exponential":
            out = [(p, "exp") for p in _lattice("trig", d, n)]
        else:
            out = [(p, "sine") for p in _lattice("sine", d, n)]
        return out[:n]

    def max_frequency(self, n: int) -> float:
        """Largest per-axis frequency, in cycles per unit length, among the first n modes."""
        top = 0.0
        for p, part in self.modes(n):
            f = max((abs(c) for c in p), default=0)
            top = max(top, f / 2 if part == "sine" else f)
        return top

    def design_matrix(self, x: np.ndarray, n: int) -> np.ndarray:
        """Values ``Phi_i(x)`` with shape ``(n_points, n)``; complex for exp."""
        x = np.atleast_2d(x)
        cols = []
        for p, part in self.modes(n):
            p = np.asarray(p, dtype=float)
            if part == "const":
                cols.append(np.ones(x.shape[0]))
            elif part == "cos":
                cols.append(math.sqrt(2) * np.cos(2 * np.pi * x @ p))
            elif part == "sin":
                cols.append(math.sqrt(2) * np.sin(2 * np.pi * x @ p))
            elif part == "exp":
                cols.append(np.exp(2j * np.pi * x @ p))
            else:
                cols.append(2 ** (x.shape[1] / 2) * np.prod(np.sin(np.pi * x * p), axis=1))
        return np.stack(cols, axis=1)

    def gradient_matrix(self, x: np.ndarray, n: int) -> np.ndarray:
        """Spatial gradients ``grad Phi_i(x)`` with shape ``(n_points, n, d)``."""
        x = np.atleast_2d(x)
        d = x.shape[1]
        out = []
        for p, part in self.modes(n):
            p = np.asarray(p, dtype=float)
            phase = 2 * np.pi * x @ p
            if part == "const":
                g = np.zeros((x.shape[0], d))
            elif part == "cos":
                g = -math.sqrt(2) * np.sin(phase)[:, None] * (2 * np.pi * p)
            elif part == "sin":
                g = math.sqrt(2) * np.cos(phase)[:, None] * (2 * np.pi * p)
            elif part == "exp":
                g = 2j * np.pi * np.exp(phase)[:, None] * p
            else:
                s = np.sin(np.pi * x * p)
                c = np.cos(np.pi * x * p)
                g = np.empty((x.shape[0], d))
                for a in range(d):
                    others = np.prod(np.delete(s, a, axis=1), axis=1)
                    g[:, a] = np.pi * p[a] * c[:, a] * others
                g *= 2 ** (d / 2)
            out.append(g)
        return np.stack(out, axis=1)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "spatial_dim": self.spatial_dim,
                "include_constant": self.include_constant}

    @classmethod
    def from_dict(cls, data: dict) -> "BasisSpec":
        return cls(**data)


DEFAULT_BASIS = BasisSpec()


@dataclass(frozen=True)
class CoeffVector:
    """Coefficients ``b_1..b_N`` of ``v = sum_i b_i Phi_i``."""

    coeffs: np.ndarray
    basis: BasisSpec = field(default=DEFAULT_BASIS)

    def __post_init__(self):
        dtype = complex if self.basis.kind == "complex-exponential" else float
        arr = np.array(self.coeffs, dtype=dtype).ravel()
        if arr.size < 1:
            raise ValidationError("a coefficient vector needs at least one entry")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("coefficients must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    def __len__(self) -> int:
        return self.coeffs.size

    def in_bound(self) -> bool:
        """Membership in L_bound: every ``|b_i| < 1/2``."""
        return bool(np.all(np.abs(self.coeffs) < 0.5))

    def to_dict(self) -> dict:
        if np.iscomplexobj(self.coeffs):
            values = [[float(c.real), float(c.imag)] for c in self.coeffs]
        else:
            values = [float(c) for c in self.coeffs]
        return {"basis": self.basis.to_dict(), "coeffs": values}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "CoeffVector":
        basis = BasisSpec.from_dict(data["basis"])
        vals = data["coeffs"]
        if basis.kind == "complex-exponential":
            vals = [complex(re, im) for re, im in vals]
        return cls(np.asarray(vals), basis)

    @classmethod
    def from_json(cls, text: str) -> "CoeffVector":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DomainSpec:
    """Box of admissible coefficients.

    ``bound``: every ``|b_i| < 1/2``. ``cut``: additionally ``|b_i| < delta``
    for ``i > N``. ``decay``: ``|b_n| < min(C n^-exponent, 1/2)``.
    """

    kind: str = "bound"
    N: int = 8
    delta: float | None = None
    decay_C: float | None = None
    decay_exponent: float | None = None

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise InvalidDomainError(f"unknown domain kind {self.kind!r}")
        if int(self.N) != self.N or self.N < 1:
            raise InvalidDomainError(f"N must be a positive integer, got {self.N!r}")
        if self.kind == "cut":
            if self.delta is None or not 0 < self.delta < 0.5:
                raise InvalidDomainError(f"cut domain needs 0 < delta < 1/2, got {self.delta!r}")
        if self.kind == "decay":
            if self.decay_C is None or self.decay_C <= 0:
                raise InvalidDomainError("decay domain needs decay_C > 0")
            if self.decay_exponent is None or self.decay_exponent <= 0:
                raise InvalidDomainError("decay domain needs decay_exponent > 0")

    def bounds(self, n_coeffs: int) -> np.ndarray:
        """Half-widths ``B_i`` of the sampling interval for positions 1..n_coeffs."""
        i = np.arange(1, n_coeffs + 1, dtype=float)
        if self.kind == "bound":
            return np.full(n_coeffs, 0.5)
        if self.kind == "cut":
            return np.where(i <= self.N, 0.5, self.delta)
        return np.minimum(self.decay_C * i ** (-self.decay_exponent), 0.5)

    def contains(self, b) -> bool:
        b = np.asarray(getattr(b, "coeffs", b))
        return bool(np.all(np.abs(b) < self.bounds(b.shape[-1])))

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> "DomainSpec":
        return cls(**data)


def sample_array(domain: DomainSpec, n_coeffs: int, n_samples: int,
                 rng: np.random.Generator | int) -> np.ndarray:
    """Draw ``(n_samples, n_coeffs)`` coefficients uniformly from the open domain box."""
    if n_coeffs < 1 or n_samples < 1:
        raise InvalidDomainError("n_coeffs and n_samples must be >= 1")
    if domain.kind == "cut" and n_coeffs < domain.N:
        raise InvalidDomainError(f"cut domain with N={domain.N} needs n_coeffs >= N")
    rng = np.random.default_rng(rng)
    half = domain.bounds(n_coeffs)
    out = rng.uniform(-half, half, size=(n_samples, n_coeffs))
    # the left endpoint is attainable in floating point; redraw it
    bad = out <= -half
    while np.any(bad):
        out[bad] = rng.uniform(-half, half, size=(n_samples, n_coeffs))[bad]
        bad = out <= -half
    assert np.all(np.abs(out) < half)
    return out


def sample(domain: DomainSpec, n_coeffs: int, rng_seed: int,
           basis: BasisSpec = DEFAULT_BASIS) -> CoeffVector:
    """One function drawn uniformly from ``domain``; deterministic in ``rng_seed``."""
    return CoeffVector(sample_array(domain, n_coeffs, 1, rng_seed)[0], basis)


def _as_points(x, d: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0 or (arr.ndim == 1 and d > 1 and arr.shape[0] == d)
    if d == 1:
        pts = arr.reshape(-1, 1)
    else:
        pts = np.atleast_2d(arr)
        if pts.shape[-1] != d:
            raise DimensionMismatchError(f"expected points in dimension {d}, got shape {arr.shape}")
    if d == 1 and arr.ndim == 2 and arr.shape[1] != 1:
        raise DimensionMismatchError(f"expected points in dimension 1, got shape {arr.shape}")
    return pts, scalar


def evaluate(v: CoeffVector, x):
    """Value of ``v`` at ``x``.

    ``x`` may be a single point or an array of points (shape ``(n,)`` when
    d = 1, ``(n, d)`` otherwise). Scalars in, float out.
    """
    pts, scalar = _as_points(x, v.basis.spatial_dim)
    phi = v.basis.design_matrix(pts, len(v))
    vals = phi @ v.coeffs
    if v.basis.kind == "complex-exponential":
        vals = 2.0 * vals.real
    vals = np.real(vals)
    return float(vals[0]) if scalar else vals


def evaluate_gradient(v: CoeffVector, x):
    """Spatial gradient of ``v``; for d = 1 the derivative ``v'(x)``."""
    d = v.basis.spatial_dim
    pts, scalar = _as_points(x, d)
    g = np.einsum("pnd,n->pd", v.basis.gradient_matrix(pts, len(v)), v.coeffs)
    if v.basis.kind == "complex-exponential":
        g = 2.0 * g.real
    g = np.real(g)
    if d == 1:
        g = g[:, 0]
    return g[0] if scalar else g


def extract_coeffs(g: Callable[[np.ndarray], np.ndarray], basis: BasisSpec,
                   n_coeffs: int, quad_points: int) -> CoeffVector:
    """Project ``g`` onto the first ``n_coeffs`` basis functions.

    ``g`` is called once on all quadrature nodes: an array of shape ``(n,)``
    when d = 1 and ``(n, d)`` otherwise. The per-axis panel count is at least
    twice the highest product frequency so that every panel spans at most
    half a period.
    """
    fmax = basis.max_frequency(n_coeffs)
    if quad_points < 4 * fmax or quad_points < 1:
        raise InsufficientResolutionError(
            f"quad_points={quad_points} < 4 * max frequency ({fmax:g})")
    d = basis.spatial_dim
    panels = max(-(-quad_points // PANEL_ORDER), int(math.ceil(4 * fmax)))
    nodes, weights = composite_gauss_legendre(0.0, 1.0, panels)
    if d == 1:
        pts = nodes[:, None]
        wts = weights
        gx = np.asarray(g(nodes), dtype=float)
    else:
        mesh = np.meshgrid(*([nodes] * d), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        wmesh = np.meshgrid(*([weights] * d), indexing="ij")
        wts = np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1)
        gx = np.asarray(g(pts), dtype=float)
    phi = basis.design_matrix(pts, n_coeffs)
    coeffs = (np.conj(phi) * (wts * gx)[:, None]).sum(axis=0)
    if basis.kind != "complex-exponential":
        coeffs = coeffs.real
    return CoeffVector(coeffs, basis)
