"""Multi-indices with finite support and the functional Fourier basis.

A multi-index ``k`` is an integer sequence ``(k_1, k_2, ...)`` with finitely
many nonzero entries. Positions are 1-based. The basis functional attached
to ``k`` is ``e_k(v) = exp(2*pi*i * sum_i k_i b_i)`` where ``b_i`` are the
basis coefficients of ``v``.
"""
from __future__ import annotations

import itertools
import json
from typing import Iterable, Mapping

import numpy as np

from .errors import SupportOutOfRangeError, ValidationError


class MultiIndex:
    """Immutable sparse integer multi-index.

    Zero entries are dropped on construction, so two indices compare equal
    exactly when their nonzero entries agree.

    >>> k = MultiIndex({1: 2, 2: -1, 4: 3})
    >>> k.l1_norm, k.max_support
    (6, 4)
    """

    __slots__ = ("_items", "_hash")

    def __init__(self, entries: Mapping[int, int] | Iterable[tuple[int, int]] = ()):
        pairs = entries.items() if isinstance(entries, Mapping) else entries
        clean = {}
        for pos, val in pairs:
            pos, ival = int(pos), int(val)
            if ival != val:
                raise ValidationError(f"multi-index value {val!r} is not an integer")
            if pos < 1:
                raise ValidationError(f"multi-index positions are 1-based, got {pos}")
            if ival:
                clean[pos] = ival
        self._items = tuple(sorted(clean.items()))
        self._hash = hash(self._items)

    @classmethod
    def from_dense(cls, values: Iterable[int]) -> "MultiIndex":
        """Build from a dense sequence whose first entry is position 1."""
        return cls((i + 1, v) for i, v in enumerate(values))

    @property
    def items(self) -> tuple[tuple[int, int], ...]:
        return self._items

    @property
    def l1_norm(self) -> int:
        return sum(abs(v) for _, v in self._items)

    @property
    def max_support(self) -> int:
        return self._items[-1][0] if self._items else 0

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self._items)

    def get(self, pos: int) -> int:
        return dict(self._items).get(pos, 0)

    def dense(self, length: int | None = None) -> tuple[int, ...]:
        """Dense tuple ``(k_1, ..., k_length)``; default length is ``N_k``."""
        n = self.max_support if length is None else length
        if n < self.max_support:
            raise SupportOutOfRangeError(f"length {n} < max support {self.max_support}")
        out = [0] * n
        for p, v in self._items:
            out[p - 1] = v
        return tuple(out)

    def sort_key(self) -> tuple[int, ...]:
        # lexicographic on the dense prefix up to N_k; the zero index sorts first
        return self.dense()

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        acc = dict(self._items)
        for p, v in other._items:
            acc[p] = acc.get(p, 0) + v
        return MultiIndex(acc)

    def __neg__(self) -> "MultiIndex":
        return MultiIndex((p, -v) for p, v in self._items)

    def __eq__(self, other) -> bool:
        return isinstance(other, MultiIndex) and self._items == other._items

    def __lt__(self, other: "MultiIndex") -> bool:
        return self.sort_key() < other.sort_key()

    def __hash__(self) -> int:
        return self._hash

    def __bool__(self) -> bool:
        return bool(self._items)

    def __repr__(self) -> str:
        return "MultiIndex({" + ", ".join(f"{p}: {v}" for p, v in self._items) + "})"

    def to_json(self) -> str:
        """Sorted JSON array of ``[position, value]`` pairs."""
        return json.dumps([list(pair) for pair in self._items])

    def to_list(self) -> list[list[int]]:
        return [list(pair) for pair in self._items]

    @classmethod
    def from_json(cls, text: str | list) -> "MultiIndex":
        data = json.loads(text) if isinstance(text, str) else text
        return cls((p, v) for p, v in data)


def l1_norm(k: MultiIndex) -> int:
    return k.l1_norm


def max_support(k: MultiIndex) -> int:
    return k.max_support


def enumerate_indices(max_dim: int, max_linf: int) -> list[MultiIndex]:
    """All indices with ``N_k <= max_dim`` and ``|k_i| <= max_linf``.

    The result has ``(2*max_linf + 1)**max_dim`` entries, sorted by
    :meth:`MultiIndex.sort_key`.
    """
    if max_dim < 1 or max_linf < 1:
        raise ValidationError("max_dim and max_linf must be >= 1")
    rng = range(-max_linf, max_linf + 1)
    out = [MultiIndex.from_dense(v) for v in itertools.product(rng, repeat=max_dim)]
    out.sort(key=MultiIndex.sort_key)
    return out


def _coeff_array(v) -> np.ndarray:
    coeffs = getattr(v, "coeffs", v)
    return np.asarray(coeffs)


def basis_eval(k: MultiIndex, v) -> complex:
    """Evaluate ``e_k(v) = exp(2*pi*i * sum_i k_i b_i)``.

    ``v`` is a :class:`~barronfunc.function_space.CoeffVector` or a plain
    coefficient sequence (``b_1`` first).
    """
    b = _coeff_array(v)
    if k.max_support > b.shape[-1]:
        raise SupportOutOfRangeError(
            f"index references position {k.max_support} but v has {b.shape[-1]} coefficients"
        )
    phase = sum(val * b[..., pos - 1] for pos, val in k.items) if k else 0.0
    return np.exp(2j * np.pi * phase) if np.ndim(phase) else complex(np.exp(2j * np.pi * phase))
