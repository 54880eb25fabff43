"""Factor-graph symbol detection for linear ISI channels."""

from .channel import (ChannelModel, ObservationModel, TransmissionFrame,
                      build_convolution_matrix, make_channel,
                      matched_filter_model, preprocessed_model, transmit)
from .constellations import Constellation, ebn0_to_sigma2, make_constellation, modulate
from .errors import (CapabilityError, ConfigurationError, FgdetectError,
                     ParamsIOError, TrainingError)
from .metrics import LlrFrame, ber, bmd_llrs, bmi_estimate

__all__ = [
    "ChannelModel", "ObservationModel", "TransmissionFrame", "Constellation",
    "LlrFrame", "make_channel", "make_constellation", "modulate",
    "ebn0_to_sigma2", "transmit", "build_convolution_matrix",
    "matched_filter_model", "preprocessed_model", "bmd_llrs", "ber",
    "bmi_estimate", "FgdetectError", "ConfigurationError", "CapabilityError",
    "TrainingError", "ParamsIOError",
]

__version__ = "0.1.0"
