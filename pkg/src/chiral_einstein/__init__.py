"""Chiral (definite-connection) formulation of 4d Einstein metrics, with
numerical verification of the hyperbolic model operators."""

import jax

jax.config.update("jax_enable_x64", True)

__version__ = "0.1.0"
