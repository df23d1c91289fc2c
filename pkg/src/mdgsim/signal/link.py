"""Channel application and noise loading on sampled waveforms."""

from __future__ import annotations

import numpy as np

from ..channel import ChannelRealization
from ..linops import as_rng
from ..metrics import SnrSpec
from .pulse import Waveform


def propagate(wf: Waveform, ch: ChannelRealization) -> Waveform:
    """Apply ``H(f)`` block-wise in the frequency domain.

    Each FFT bin of the waveform is multiplied by the channel matrix of the
    nearest channel bin (nearest-neighbour replication of the channel grid).
    The block is treated as periodic.
    """
    if wf.n_streams != ch.dim:
        raise ValueError(f"waveform has {wf.n_streams} streams, channel dimension is {ch.dim}")
    n = wf.streams.shape[1]
    X = np.fft.fft(wf.streams, axis=1)
    f = np.fft.fftfreq(n, d=1.0 / wf.sample_rate)
    if ch.n_bins == 1:
        idx = np.zeros(n, dtype=int)
    else:
        df = ch.frequencies[1] - ch.frequencies[0]
        idx = np.clip(np.rint((f - ch.frequencies[0]) / df).astype(int), 0, ch.n_bins - 1)
    Y = np.empty_like(X)
    order = np.argsort(idx, kind="stable")
    bounds = np.searchsorted(idx[order], np.arange(ch.n_bins + 1))
    for b in range(ch.n_bins):
        sel = order[bounds[b]:bounds[b + 1]]
        if sel.size:
            Y[:, sel] = ch.matrices[b] @ X[:, sel]
    return Waveform(np.fft.ifft(Y, axis=1), wf.sample_rate, wf.symbol_rate)


def signal_power(wf: Waveform) -> float:
    """Mean power per stream per sample."""
    return float(np.mean(np.abs(wf.streams) ** 2))


def load_awgn(wf: Waveform, snr: SnrSpec, seed=None, signal_power_ref: float = None) -> Waveform:
    """Add white circular Gaussian noise at the requested in-band SNR.

    The noise variance per sample is identical on every stream and chosen so
    that signal power over noise power inside the symbol-rate bandwidth equals
    ``snr``. The signal power is measured from ``wf`` unless
    ``signal_power_ref`` (mean per-stream power per sample) is given, which
    references the SNR to a fixed launch level instead.
    """
    if snr.is_infinite:
        return wf
    p = signal_power(wf) if signal_power_ref is None else float(signal_power_ref)
    var = p * (wf.sample_rate / wf.symbol_rate) / snr.snr_linear
    rng = as_rng(seed)
    shape = wf.streams.shape
    noise = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(var / 2)
    return Waveform(wf.streams + noise, wf.sample_rate, wf.symbol_rate)


def inband_snr_db(clean: Waveform, noisy: Waveform) -> float:
    """Measured SNR: known-signal subtraction, noise integrated over ``|f| <= Rs/2``."""
    noise = noisy.streams - clean.streams
    n = noise.shape[1]
    f = np.fft.fftfreq(n, d=1.0 / clean.sample_rate)
    band = np.abs(f) <= clean.symbol_rate / 2
    N = np.fft.fft(noise, axis=1)
    p_noise = np.sum(np.abs(N[:, band]) ** 2) / n**2
    p_sig = np.sum(np.abs(clean.streams) ** 2) / n
    return float(10 * np.log10(p_sig / p_noise))
