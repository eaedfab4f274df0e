"""Catalogue of test geometries: metrics and connections with known curvature."""

from __future__ import annotations

import numpy as np
import sympy as sp

from .riemann4 import Metric, levi_civita_selfdual
from .so3conn import So3Connection
from .symcalc import Chart, cartesian_chart, half_space_chart


def hyperbolic_half_space() -> Metric:
    ch = half_space_chart()
    rho = ch.symbols[0]
    return Metric(sp.diag(*[rho**-2] * 4), ch)


def hyperbolic_connection() -> So3Connection:
    """``A^i = dy^i / rho``: the Levi-Civita connection on Lambda^+ of the half-space."""
    from .h4model.frames import model_connection_forms

    return model_connection_forms()


def _ball_chart(radius: float = 0.6) -> Chart:
    box = ((-radius, radius),) * 4
    return Chart(("x1", "x2", "x3", "x4"), box=box,
                 domain=lambda p: np.sum(p**2, axis=1) < radius**2)


def poincare_ball() -> Metric:
    """``rho^-2 |dx|^2`` with ``rho = (1 - |x|^2)/2``."""
    ch = _ball_chart()
    rho = (1 - sum(x**2 for x in ch.symbols)) / 2
    return Metric(sp.diag(*[rho**-2] * 4), ch)


def round_sphere() -> Metric:
    """Stereographic chart of the unit 4-sphere, ``4 |dx|^2 / (1 + |x|^2)^2``."""
    ch = cartesian_chart(box=((-1.0, 1.0),) * 4)
    f = 4 / (1 + sum(x**2 for x in ch.symbols)) ** 2
    return Metric(sp.diag(*[f] * 4), ch)


def flat() -> Metric:
    return Metric(sp.eye(4), cartesian_chart())


def perturbed_hyperbolic(eps=sp.Rational(1, 10)) -> Metric:
    """Half-space metric with a diagonal non-Einstein perturbation."""
    ch = half_space_chart()
    rho, y1, y2, _ = ch.symbols
    bump = eps * (1 + y1**2 + y1 * y2)
    return Metric(sp.diag((1 + bump) / rho**2, 1 / rho**2, 1 / rho**2, 1 / rho**2), ch)


def ads_schwarzschild(m=sp.Rational(1, 10)) -> Metric:
    """Riemannian AdS-Schwarzschild, ``V^-1 dr^2 + V dtau^2 + r^2 g_{S^2}``, ``V = 1 + r^2 - 2m/r``.

    Einstein with ``Ric = -3g``; the sampling box keeps ``r`` well outside the horizon.
    """
    ch = Chart(("r", "tau", "theta", "phi"), box=((1.0, 3.0), (0.0, 1.0), (0.6, 2.5), (0.0, 1.0)))
    r, _, th, _ = ch.symbols
    V = 1 + r**2 - 2 * m / r
    return Metric(sp.diag(1 / V, V, r**2, r**2 * sp.sin(th) ** 2), ch)


def selfdual_connection(g: Metric) -> So3Connection:
    return levi_civita_selfdual(g)


EINSTEIN_MODELS = {
    "hyperbolic": (hyperbolic_half_space, -3),
    "ball": (poincare_ball, -3),
    "sphere": (round_sphere, 3),
    "flat": (flat, 0),
    "ads-schwarzschild": (ads_schwarzschild, -3),
}
