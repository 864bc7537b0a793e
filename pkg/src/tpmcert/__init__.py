"""tpmcert: device-independent certification of quantum memories from
two-point-measurement statistics."""

from .certify import (
    CertReport,
    S_K,
    acde,
    bootstrap_errors,
    certify_behavior,
    chsh_decomposition,
    corrected_lhs,
    fidelity_lower_bound,
    gamma_functional,
    pearl_delta,
)
from .process import (
    Behavior,
    DoTable,
    MpInstrument,
    ProcessOperator,
    born_rule,
    build_process,
    do_probabilities,
    validate_process,
)
from .proclib import (
    EbChannel,
    NoiseParams,
    apply_eb_channel,
    classical_crossing_time,
    decay_prediction,
    partial_swap,
    partial_swap_gamma_curve,
    upsilon,
    w222,
)

__version__ = "0.1.0"

__all__ = [
    "Behavior",
    "CertReport",
    "DoTable",
    "EbChannel",
    "MpInstrument",
    "NoiseParams",
    "ProcessOperator",
    "S_K",
    "acde",
    "apply_eb_channel",
    "bootstrap_errors",
    "born_rule",
    "build_process",
    "certify_behavior",
    "chsh_decomposition",
    "classical_crossing_time",
    "corrected_lhs",
    "decay_prediction",
    "do_probabilities",
    "fidelity_lower_bound",
    "gamma_functional",
    "partial_swap",
    "partial_swap_gamma_curve",
    "pearl_delta",
    "upsilon",
    "validate_process",
    "w222",
]
