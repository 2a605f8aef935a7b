"""Correlation-tensor criteria for multisetting multiqubit Bell inequalities."""

from .corrtensor import CorrelationTensor, compute_tensor, contract, rotate, schmidt_split, top2_plane_norm
from .criteria import (
    CriterionResult,
    OptimizerConfig,
    condition_332,
    condition_442_analytic,
    condition_442_numeric,
    condition_N,
    condition_standard,
    evaluate,
    noise_threshold,
    standard_tensor_bound,
)
from .qstate import QuantumState, make_four_photon, make_ghz, make_w, mix_white_noise, parse_state_spec

__version__ = "0.1.0"
