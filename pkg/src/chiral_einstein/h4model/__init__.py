"""The hyperbolic half-space model: frames, model operator, indicial data and grid numerics."""

from .frames import (J_TABLE_PRINTED, connection_matrix, j_table, model_chart, model_connection,
                     model_frames, model_J, model_metric, model_projector, pi_d, projector_matrix)
from .normal import R_COEFF_DERIVED, R_COEFF_PRINTED, identity_residual, identity_residuals, normal_operator, normal_rhs, r_operator

__all__ = [
    "J_TABLE_PRINTED", "R_COEFF_DERIVED", "R_COEFF_PRINTED", "connection_matrix", "identity_residual", "identity_residuals",
    "j_table", "model_J", "model_chart", "model_connection", "model_frames", "model_metric",
    "model_projector", "normal_operator", "normal_rhs", "pi_d", "projector_matrix", "r_operator",
]
