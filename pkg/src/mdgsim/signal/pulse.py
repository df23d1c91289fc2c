"""Root-raised-cosine shaping, matched filtering and rate conversion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import oaconvolve

from .qam import SymbolFrame


@dataclass(frozen=True)
class SignalConfig:
    symbols_per_stream: int = 100_000
    symbol_rate: float = 30.0  # GBd
    modulation: str = "16qam"
    rolloff: float = 0.01
    tx_oversampling: int = 8
    rx_oversampling: int = 2
    rrc_span: int = 256  # symbols

    def __post_init__(self):
        if self.symbols_per_stream < 1:
            raise ValueError("symbols_per_stream must be >= 1")
        if not 0 < self.rolloff <= 1:
            raise ValueError("rolloff must lie in (0, 1]")
        if self.tx_oversampling % self.rx_oversampling:
            raise ValueError("tx_oversampling must be divisible by rx_oversampling")
        if self.symbol_rate <= 0 or self.rrc_span < 1:
            raise ValueError("symbol_rate and rrc_span must be positive")

    @property
    def symbol_time(self) -> float:
        """Symbol period in ps."""
        return 1e3 / self.symbol_rate

    @property
    def tx_sample_rate(self) -> float:
        return self.symbol_rate * self.tx_oversampling

    @property
    def rx_sample_rate(self) -> float:
        return self.symbol_rate * self.rx_oversampling


@dataclass(frozen=True)
class Waveform:
    """Sampled streams, shape ``(n_streams, n_samples)``; rates in GSa/s and GBd."""

    streams: np.ndarray
    sample_rate: float
    symbol_rate: float

    @property
    def n_streams(self) -> int:
        return self.streams.shape[0]

    @property
    def oversampling(self) -> int:
        return int(round(self.sample_rate / self.symbol_rate))


def rrc_taps(rolloff: float, sps: int, span: int) -> np.ndarray:
    """Unit-energy RRC impulse response over ``span`` symbols (``span*sps+1`` taps)."""
    n = span * sps
    t = (np.arange(n + 1) - n / 2) / sps  # in symbol periods
    a = rolloff
    h = np.empty_like(t)
    zero = np.isclose(t, 0.0)
    sing = np.isclose(np.abs(t), 1.0 / (4 * a))
    reg = ~(zero | sing)
    tr = t[reg]
    h[reg] = (np.sin(np.pi * tr * (1 - a)) + 4 * a * tr * np.cos(np.pi * tr * (1 + a))) / (
        np.pi * tr * (1 - (4 * a * tr) ** 2)
    )
    h[zero] = 1 - a + 4 * a / np.pi
    h[sing] = a / np.sqrt(2) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * a)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * a))
    )
    return h / np.linalg.norm(h)


def _filter(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    # odd-length centred taps: "same" keeps symbol instants aligned
    return oaconvolve(x, h[None, :], mode="same", axes=-1)


def modulate(frame: SymbolFrame, cfg: SignalConfig) -> Waveform:
    """Upsample by ``tx_oversampling`` and shape with the RRC filter."""
    sps = cfg.tx_oversampling
    up = np.zeros((frame.n_streams, frame.n_symbols * sps), dtype=complex)
    up[:, ::sps] = frame.streams
    h = rrc_taps(cfg.rolloff, sps, cfg.rrc_span)
    return Waveform(_filter(up, h), cfg.tx_sample_rate, cfg.symbol_rate)


def receive(wf: Waveform, cfg: SignalConfig) -> Waveform:
    """Matched RRC filter, then decimate to ``rx_oversampling`` samples/symbol."""
    sps = wf.oversampling
    if sps % cfg.rx_oversampling:
        raise ValueError("input oversampling is not a multiple of rx_oversampling")
    h = rrc_taps(cfg.rolloff, sps, cfg.rrc_span)
    y = _filter(wf.streams, h)
    step = sps // cfg.rx_oversampling
    return Waveform(y[:, ::step], wf.symbol_rate * cfg.rx_oversampling, wf.symbol_rate)
