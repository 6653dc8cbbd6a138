"""Composite Gauss-Legendre rules on intervals and tensor-product boxes."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

PANEL_ORDER = 16


@lru_cache(maxsize=64)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_gauss_legendre(a: float, b: float, n_panels: int,
                             order: int = PANEL_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of ``n_panels`` equal Gauss-Legendre panels on [a, b]."""
    n_panels = max(1, int(n_panels))
    x, w = _leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    h = np.diff(edges)
    nodes = edges[:-1, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)
    weights = 0.5 * h[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def rule_for_points(a: float, b: float, n_points: int,
                    order: int = PANEL_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule with at least ``n_points`` nodes."""
    return composite_gauss_legendre(a, b, -(-int(n_points) // order), order)


def tensor_rule(intervals, n_points: int):
    """Per-axis nodes/weights for a box given as a list of ``(a, b)`` pairs.

    Returns a list of ``(nodes, weights)``; callers contract axis by axis
    instead of materialising the full tensor grid.
    """
    return [rule_for_points(a, b, n_points) for a, b in intervals]


def tensor_grid(rules) -> tuple[np.ndarray, np.ndarray]:
    """Materialise a tensor rule as ``(points[..., d], weights[...])``."""
    nodes = [r[0] for r in rules]
    mesh = np.meshgrid(*nodes, indexing="ij")
    pts = np.stack(mesh, axis=-1)
    wts = np.ones(pts.shape[:-1])
    for axis, (_, w) in enumerate(rules):
        shape = [1] * len(rules)
        shape[axis] = -1
        wts = wts * w.reshape(shape)
    return pts, wts
