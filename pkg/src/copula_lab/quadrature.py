"""Gauss-Legendre rules on intervals and boxes."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(m: int, a=0.0, b=1.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``m``-point rule mapped to ``[a, b]``.

    ``a`` and ``b`` may be arrays; the returned arrays then have shape
    ``broadcast(a, b).shape + (m,)``.
    """
    x, w = _legendre(int(m))
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def tensor_rule(lower, upper, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product rule on the box ``prod_j [lower_j, upper_j]``.

    Returns ``(nodes, weights)`` with shapes ``(m**d, d)`` and ``(m**d,)``.
    Degenerate axes (``lower_j >= upper_j``) yield zero weights.
    """
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    upper = np.maximum(upper, lower)
    per_axis = [gauss_legendre(m, lo, hi) for lo, hi in zip(lower, upper)]
    mesh = np.meshgrid(*[p[0] for p in per_axis], indexing="ij")
    wmesh = np.meshgrid(*[p[1] for p in per_axis], indexing="ij")
    nodes = np.stack([g.ravel() for g in mesh], axis=-1)
    weights = np.prod(np.stack([g.ravel() for g in wmesh], axis=-1), axis=-1)
    return nodes, weights
