"""OFDM simulation and detection over rapidly time-varying multipath channels."""

from .channel import (
    ChannelRealization,
    DopplerSpec,
    PowerDelayProfile,
    freq_channel_matrix,
    generate_realization,
    transfer_function,
)
from .harness import BerRecord, SimConfig, default_q, run_cell, run_sweep
from .linear import DetectionError, DetectorOutput, exact_map, mf, mmse, quantize, vblast_mmse_sd, zf
from .mapgs import GibbsConfig, SubProblem, build_subproblem, cancel_detected, detect, gibbs_posterior
from .numerics import BandedMat, OpCounters, RngStream, band, complex_gaussian, dft
from .ofdm import Constellation, OfdmConfig, apply_channel, ebn0_to_noise_var, receive, transmit

__version__ = "0.1.0"
