"""Discrete-time transmit/receive chain and tap-based MDL/MDG estimation."""

from .equalizer import (
    ConvergenceError,
    EqConfig,
    EqualizerState,
    estimate_from_taps,
    lms_equalize,
    load_taps,
    save_taps,
    taps_to_transfer,
)
from .link import inband_snr_db, load_awgn, propagate, signal_power
from .pulse import SignalConfig, Waveform, modulate, receive, rrc_taps
from .qam import SymbolFrame, constellation, decide, generate_frame, map_bits

__all__ = [
    "ConvergenceError",
    "EqConfig",
    "EqualizerState",
    "SignalConfig",
    "SymbolFrame",
    "Waveform",
    "constellation",
    "decide",
    "estimate_from_taps",
    "generate_frame",
    "inband_snr_db",
    "lms_equalize",
    "load_awgn",
    "load_taps",
    "map_bits",
    "modulate",
    "propagate",
    "receive",
    "rrc_taps",
    "save_taps",
    "signal_power",
    "taps_to_transfer",
]
