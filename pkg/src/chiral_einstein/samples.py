"""Random compactly supported test fields, parametrized by coefficient arrays.

Each family is ``bump(x) * (affine polynomial in x)``; passing the
coefficients as traced arguments lets one ``jax.jit`` compilation serve every
sample.
"""

from __future__ import annotations

import jax
import jax.numpy as jnp
import numpy as np

from .forms import Form
from .quadrature import bump, gauss_legendre_box, support_box
from .so3conn import EForm, gauge_action_field
from .torsionlin import Integral, _pairwise_sum, eform_to_array, h_integrand, linearized_torsion_field

CENTER = (1.0, 0.0, 0.0, 0.0)
RADIUS = (0.4, 0.5, 0.5, 0.5)
BOX = support_box(CENTER, RADIUS)
INNER_POINTS = np.array([
    [1.0, 0.0, 0.0, 0.0],
    [0.85, 0.2, -0.1, 0.15],
    [1.2, -0.25, 0.2, 0.05],
    [0.95, 0.1, 0.3, -0.2],
])


def _affine(c, x):
    return c[..., 0] + c[..., 1:] @ x


def section(cu):
    """E-valued 0-form from ``cu`` of shape (3, 5)."""
    return lambda x: EForm.scalars(list(bump(x, CENTER, RADIUS) * _affine(cu, x)))


def vector(cv):
    """Vector field from ``cv`` of shape (4, 5)."""
    return lambda x: bump(x, CENTER, RADIUS) * _affine(cv, x)


def one_form(cb):
    """E-valued 1-form from ``cb`` of shape (3, 4, 5)."""
    return lambda x: EForm([Form(1, list(bump(x, CENTER, RADIUS) * _affine(cb[i], x))) for i in range(3)])


def random_params(rng: np.random.Generator):
    return (jnp.asarray(rng.normal(size=(3, 5))), jnp.asarray(rng.normal(size=(4, 5))),
            jnp.asarray(rng.normal(size=(3, 4, 5))))


def gauge_invariance(field, n: int = 20, seed: int = 0, points=INNER_POINTS) -> np.ndarray:
    """Sup over points of ``|D_A(d_A u + iota_v F_A)|`` for n random (u, v)."""
    def res(cu, cv, x):
        a = gauge_action_field(field.A, section(cu), vector(cv))
        return jnp.max(jnp.abs(eform_to_array(linearized_torsion_field(field, a)(x))))

    f = jax.jit(jax.vmap(res, in_axes=(None, None, 0)))
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        cu, cv, _ = random_params(rng)
        out.append(float(jnp.max(f(cu, cv, jnp.asarray(points)))))
    return np.array(out)


def _two_grid(fv, args, n: int) -> Integral:
    vals = []
    for m in (n, 2 * n):
        pts, w = gauss_legendre_box(BOX, m)
        vals.append(_pairwise_sum(np.asarray(fv(*args, jnp.asarray(pts))) * w))
    return Integral(vals[1], abs(vals[1] - vals[0]), (n, 2 * n))


def h_pairings(field, n_samples: int = 3, seed: int = 0, n: int = 6) -> list[tuple[Integral, Integral]]:
    """``(h_A(d_A u + iota_v F, b), h_A(c, b))`` for random (u, v, b) and a generic c."""
    def h_gauge(cu, cv, cb, x):
        a = gauge_action_field(field.A, section(cu), vector(cv))
        return h_integrand(field, a, one_form(cb))(x)

    def h_generic(cc, cb, x):
        return h_integrand(field, one_form(cc), one_form(cb))(x)

    fg = jax.jit(jax.vmap(h_gauge, in_axes=(None, None, None, 0)))
    fc = jax.jit(jax.vmap(h_generic, in_axes=(None, None, 0)))
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_samples):
        cu, cv, cb = random_params(rng)
        cc = jnp.asarray(rng.normal(size=(3, 4, 5)))
        out.append((_two_grid(fg, (cu, cv, cb), n), _two_grid(fc, (cc, cb), n)))
    return out
