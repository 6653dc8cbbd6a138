"""Fourier coefficients of functionals, truncated reconstruction and norms.

For a functional with structure ``D = {D_j}``::

    a_k = sum_{j : supp k in D_j} int_{(-1/2,1/2)^|D_j|} f_j(b) prod_i exp(-2 pi i k_i b_i) db

Tables are truncated per block at ``|k_i| <= max_linf``. On a cut domain
(``|b_i| < delta`` for ``i > N``) tail coordinates are integrated over
``(-delta, delta)`` against ``exp(-i pi k b / delta)`` and each block is
scaled by ``(2 delta)^(-t_j/2)`` where ``t_j`` is its number of tail
coordinates.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientResolutionError, NumericalError, StructureError, ValidationError
from .functional_zoo import FunctionalSpec
from .function_space import DomainSpec
from .multi_index import MultiIndex
from .quadrature import rule_for_points

CROSS_CHECK_TOL = 1e-9
IMAG_TOL = 1e-8


@dataclass
class FourierTable:
    """Map from multi-index to complex coefficient ``a_k``.

    ``synthesis`` holds the weights actually multiplied by the phase
    products during reconstruction; it equals ``entries`` except on cut
    tables, where each block contribution picks up ``(2 delta)^(-t_j/2)``.
    """

    entries: dict[MultiIndex, complex] = field(default_factory=dict)
    provenance: dict[MultiIndex, str] = field(default_factory=dict)
    s_barron: float = 2.0
    s_hilbert: float = 1.0
    cut: tuple[int, float] | None = None
    synthesis: dict[MultiIndex, complex] | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, k: MultiIndex) -> complex:
        return self.entries.get(k, 0j)

    def sorted_keys(self) -> list[MultiIndex]:
        return sorted(self.entries, key=MultiIndex.sort_key)

    @classmethod
    def from_mapping(cls, values: dict, **kwargs) -> "FourierTable":
        entries = {}
        for k, v in values.items():
            key = k if isinstance(k, MultiIndex) else MultiIndex(k)
            entries[key] = complex(v)
        return cls(entries=entries, provenance={k: "given" for k in entries}, **kwargs)

    def is_conjugate_symmetric(self, tol: float = 1e-9) -> bool:
        for k, a in self.entries.items():
            if abs(self[-k] - np.conj(a)) > tol:
                return False
        return True

    def to_rows(self) -> list[list]:
        return [[k.to_list(), float(self.entries[k].real), float(self.entries[k].imag),
                 self.provenance.get(k, "")] for k in self.sorted_keys()]

    def to_json(self) -> str:
        payload = {
            "s_barron": self.s_barron,
            "s_hilbert": self.s_hilbert,
            "cut": list(self.cut) if self.cut else None,
            "rows": self.to_rows(),
        }
        if self.synthesis is not None and self.synthesis is not self.entries:
            payload["synthesis"] = [[k.to_list(), float(v.real), float(v.imag)]
                                    for k, v in sorted(self.synthesis.items(),
                                                       key=lambda kv: kv[0].sort_key())]
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "FourierTable":
        data = json.loads(text)
        entries, prov = {}, {}
        for k, re, im, tag in data["rows"]:
            key = MultiIndex.from_json(k)
            entries[key] = complex(re, im)
            prov[key] = tag
        synth = None
        if "synthesis" in data:
            synth = {MultiIndex.from_json(k): complex(re, im) for k, re, im in data["synthesis"]}
        cut = tuple(data["cut"]) if data.get("cut") else None
        return cls(entries, prov, data["s_barron"], data["s_hilbert"], cut, synth)

    def to_csv(self) -> str:
        """Plot-ready rows: multi_index, l1, re, im, abs, provenance."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["multi_index", "l1", "re", "im", "abs", "provenance"])
        for k in self.sorted_keys():
            a = self.entries[k]
            w.writerow([json.dumps(k.to_list()), k.l1_norm, repr(float(a.real)),
                        repr(float(a.imag)), repr(float(abs(a))), self.provenance.get(k, "")])
        return buf.getvalue()


def _block_quadrature(fn, head_positions_mask, max_linf: int, quad_points: int,
                      delta: float | None) -> np.ndarray:
    """Coefficient tensor of one block, shape ``(2K+1,)*c``.

    ``head_positions_mask[a]`` is True for coordinates integrated over the
    full interval, False for tail coordinates of a cut domain.
    """
    ks = np.arange(-max_linf, max_linf + 1)
    kernels, nodes = [], []
    prefactor = 1.0
    for head in head_positions_mask:
        if head:
            x, w = rule_for_points(-0.5, 0.5, quad_points)
            ker = np.exp(-2j * np.pi * np.outer(ks, x)) * w
        else:
            x, w = rule_for_points(-delta, delta, quad_points)
            ker = np.exp(-1j * np.pi / delta * np.outer(ks, x)) * w
            prefactor /= math.sqrt(2 * delta)
        kernels.append(ker)
        nodes.append(x)
    mesh = np.meshgrid(*nodes, indexing="ij")
    values = np.asarray(fn(np.stack(mesh, axis=-1)), dtype=float)
    out = values.astype(complex)
    # contract axis by axis: out[..., x_a, ...] -> out[..., k_a, ...]
    for axis, ker in enumerate(kernels):
        out = np.moveaxis(np.tensordot(ker, out, axes=([1], [axis])), 0, axis)
    return prefactor * out


def _block_closed_form(f: FunctionalSpec, j: int, size: int, max_linf: int) -> np.ndarray:
    rng = range(-max_linf, max_linf + 1)
    out = np.empty((2 * max_linf + 1,) * size, dtype=complex)
    for local in itertools.product(rng, repeat=size):
        out[tuple(v + max_linf for v in local)] = f.closed_form(j, local)
    return out


def _assemble(f: FunctionalSpec, max_linf: int, quad_points: int, cut: DomainSpec | None,
              method: str, cross_check: bool, jobs: int) -> FourierTable:
    if not f.separable:
        raise StructureError(f"functional {f.name!r} has no declared decomposition")
    if max_linf < 1:
        raise ValidationError("max_linf must be >= 1")
    if quad_points < 8 * max_linf:
        raise InsufficientResolutionError(
            f"quad_points={quad_points} < 8 * max_linf={8 * max_linf}")
    if method not in ("auto", "quadrature", "closed-form"):
        raise ValidationError(f"unknown coefficient method {method!r}")
    if method == "closed-form" and f.closed_form is None:
        raise ValidationError(f"no closed form registered for {f.name!r}")

    n_head = cut.N if cut is not None else None
    delta = cut.delta if cut is not None else None

    def block_job(j: int):
        positions = f.structure[j]
        head = [n_head is None or p <= n_head for p in positions]
        tails = len(head) - sum(head)
        use_closed = f.closed_form is not None and tails == 0 and method != "quadrature"
        quad = None
        if not use_closed or cross_check:
            quad = _block_quadrature(f.blocks[j], head, max_linf, quad_points, delta)
        if use_closed:
            coeffs = _block_closed_form(f, j, len(positions), max_linf)
            if quad is not None:
                gap = np.max(np.abs(coeffs - quad))
                if gap > CROSS_CHECK_TOL:
                    raise NumericalError(
                        f"closed form and quadrature disagree by {gap:.3e} on block {j}")
            return coeffs, "closed-form", tails
        return quad, "quadrature", tails

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(block_job, range(len(f.structure))))
    else:
        results = [block_job(j) for j in range(len(f.structure))]

    entries: dict[MultiIndex, complex] = {}
    synthesis: dict[MultiIndex, complex] = {}
    prov: dict[MultiIndex, str] = {}
    rng = range(-max_linf, max_linf + 1)
    for (coeffs, tag, tails), positions in zip(results, f.structure):
        norm = (2 * delta) ** (-tails / 2) if tails else 1.0
        for local in itertools.product(rng, repeat=len(positions)):
            key = MultiIndex(zip(positions, local))
            a = complex(coeffs[tuple(v + max_linf for v in local)])
            entries[key] = entries.get(key, 0j) + a
            synthesis[key] = synthesis.get(key, 0j) + a * norm
            if prov.get(key) != "quadrature":
                prov[key] = tag
    table = FourierTable(entries, prov)
    if cut is not None:
        table.cut = (cut.N, cut.delta)
        table.synthesis = synthesis
    return table


def coefficients(f: FunctionalSpec, max_linf: int, quad_points: int, *,
                 method: str = "auto", cross_check: bool = True, jobs: int = 1) -> FourierTable:
    """Fourier coefficients of ``f`` on L_bound, truncated at ``|k_i| <= max_linf``.

    Registered closed forms are used when available (``method="auto"``) and,
    with ``cross_check``, compared against tensor Gauss-Legendre quadrature.
    Requires ``quad_points >= 8 * max_linf`` nodes per axis.
    """
    return _assemble(f, max_linf, quad_points, None, method, cross_check, jobs)


def coefficients_cut(f: FunctionalSpec, domain: DomainSpec, max_linf: int, quad_points: int, *,
                     method: str = "auto", cross_check: bool = True,
                     jobs: int = 1) -> FourierTable:
    """Modified coefficients on the cut domain (rescaled tail coordinates)."""
    if domain.kind != "cut":
        raise ValidationError("coefficients_cut needs a cut-kind domain")
    return _assemble(f, max_linf, quad_points, domain, method, cross_check, jobs)


def _phase_matrix(keys: list[MultiIndex], n: int) -> np.ndarray:
    K = np.zeros((len(keys), n))
    for r, k in enumerate(keys):
        for p, v in k.items:
            K[r, p - 1] = v
    return K


def reconstruct(table: FourierTable, v, *, check_real: bool = True):
    """Truncated Fourier series ``sum_k a_k e_k(v)`` (real part).

    ``v`` may be a coefficient vector or an ``(M, N)`` array. Raises
    :class:`NumericalError` when the imaginary residue exceeds 1e-8 and
    ``check_real`` is set.
    """
    b = np.asarray(getattr(v, "coeffs", v), dtype=float)
    single = b.ndim == 1
    b = np.atleast_2d(b)
    weights = table.synthesis if table.synthesis is not None else table.entries
    if not weights:
        out = np.zeros(b.shape[0])
        return float(out[0]) if single else out
    keys = list(weights)
    need = max(k.max_support for k in keys)
    if need > b.shape[1]:
        b = np.concatenate([b, np.zeros((b.shape[0], need - b.shape[1]))], axis=1)
    K = _phase_matrix(keys, b.shape[1])
    if table.cut is not None:
        n_head, delta = table.cut
        scale = np.where(np.arange(1, b.shape[1] + 1) <= n_head, 2 * np.pi, np.pi / delta)
    else:
        scale = np.full(b.shape[1], 2 * np.pi)
    phases = np.exp(1j * (b * scale) @ K.T)
    a = np.array([weights[k] for k in keys])
    total = phases @ a
    if check_real and np.max(np.abs(total.imag)) >= IMAG_TOL:
        raise NumericalError(
            f"reconstruction has imaginary residue {np.max(np.abs(total.imag)):.3e}")
    out = total.real
    return float(out[0]) if single else out


def _weights(table: FourierTable, power: float) -> tuple[np.ndarray, np.ndarray]:
    keys = list(table.entries)
    l1 = np.array([k.l1_norm for k in keys], dtype=float)
    a = np.array([table.entries[k] for k in keys], dtype=complex)
    return 1.0 + (2 * np.pi) ** power * l1 ** power, a


def barron_norm(table: FourierTable, s: float | None = None) -> float:
    """``sum_k (1 + (2 pi)^s |k|_1^s) |a_k|`` over stored entries."""
    s = table.s_barron if s is None else s
    if not table.entries:
        return 0.0
    w, a = _weights(table, s)
    return float(np.sum(w * np.abs(a)))


def hilbert_norm(table: FourierTable, s: float | None = None) -> float:
    """``sqrt(sum_k (1 + (2 pi)^(2s) |k|_1^(2s)) |a_k|^2)``."""
    s = table.s_hilbert if s is None else s
    if not table.entries:
        return 0.0
    w, a = _weights(table, 2 * s)
    return float(np.sqrt(np.sum(w * np.abs(a) ** 2)))


def hilbert_inner(tA: FourierTable, tB: FourierTable, s: float | None = None) -> complex:
    """``sum_k (1 + (2 pi)^(2s) |k|_1^(2s)) conj(a_k(A)) a_k(B)`` over the common support."""
    s = tA.s_hilbert if s is None else s
    total = 0j
    for k in sorted(set(tA.entries) & set(tB.entries), key=MultiIndex.sort_key):
        w = 1.0 + (2 * np.pi) ** (2 * s) * k.l1_norm ** (2 * s)
        total += w * np.conj(tA.entries[k]) * tB.entries[k]
    return complex(total)
