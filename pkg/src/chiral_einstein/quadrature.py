"""Tensor-product Gauss-Legendre quadrature and polynomial cutoffs."""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import jax.numpy as jnp
import numpy as np

BUMP_POWER = 4


@lru_cache(maxsize=None)
def _gl(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre_box(box: Sequence[tuple[float, float]], n: int):
    """Nodes (n^d, d) and weights (n^d,) on a box."""
    x, w = _gl(n)
    axes, weights = [], []
    for lo, hi in box:
        axes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * w)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    W = weights[0]
    for wk in weights[1:]:
        W = np.multiply.outer(W, wk)
    return pts, W.ravel()


def bump(x, center, radius, power: int = BUMP_POWER):
    """``prod_k (1 - s_k^2)^power`` with ``s = (x - c)/r`` inside the box, 0 outside.

    C^{power-1} across the box boundary; the box is ``center +- radius``.
    """
    s = (jnp.asarray(x) - jnp.asarray(center)) / jnp.asarray(radius)
    inside = jnp.all(jnp.abs(s) < 1)
    val = jnp.prod((1 - s**2) ** power)
    return jnp.where(inside, val, 0.0)


def support_box(center, radius) -> list[tuple[float, float]]:
    return [(float(c - r), float(c + r)) for c, r in zip(center, radius)]
