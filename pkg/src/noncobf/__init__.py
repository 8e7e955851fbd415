"""Non-coherent beamforming for FDD massive MIMO downlinks.

Designs use path signatures and phase statistics, not instantaneous
phases: stationary (dominant eigenvector), worst case (DC programming),
zero forcing and regularized zero forcing (SLNR).
"""
from .array_channel import (ArrayGeometry, ExplicitR, IIDUniform, Known, PathComponent,
                            SignatureSet, WrappedGaussian, draw_phase_vector, phase_correlation,
                            realize_channel, steering_vector, synthesize_signatures)
from .errors import (DegenerateChannelError, InfeasibleZFError, InvalidArgumentError,
                     UnsupportedSamplingError)
from .mu import (MultiUserScenario, UserChannel, rzf_slnr_bf, zf_feasibility, zf_prebeamformer,
                 zf_stationary_bf, zf_worst_case_bf)
from .su import (Beamformer, Criterion, WorstCaseOptions, coherent_bf, stationary_bf,
                 stationary_power, stationary_power_bounds, uniform_bf, worst_case_bf,
                 worst_case_phases, worst_case_power)

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry", "ExplicitR", "IIDUniform", "Known", "PathComponent", "SignatureSet",
    "WrappedGaussian", "draw_phase_vector", "phase_correlation", "realize_channel",
    "steering_vector", "synthesize_signatures",
    "DegenerateChannelError", "InfeasibleZFError", "InvalidArgumentError",
    "UnsupportedSamplingError",
    "MultiUserScenario", "UserChannel", "rzf_slnr_bf", "zf_feasibility", "zf_prebeamformer",
    "zf_stationary_bf", "zf_worst_case_bf",
    "Beamformer", "Criterion", "WorstCaseOptions", "coherent_bf", "stationary_bf",
    "stationary_power", "stationary_power_bounds", "uniform_bf", "worst_case_bf",
    "worst_case_phases", "worst_case_power",
]
