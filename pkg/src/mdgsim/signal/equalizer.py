"""Fractionally spaced MIMO FIR equalizer trained by supervised LMS, and
MDL/MDG estimation from its taps."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numba
import numpy as np

from ..metrics import MdgReport, SnrSpec, correct_spectrum, observed_spectrum_from_equalizer, peak_to_peak, sigma_mdg
from .pulse import Waveform
from .qam import SymbolFrame

# block length (symbols) used to smooth the MSE trace
MSE_WINDOW = 1000
DIVERGENCE_FACTOR = 10.0
# floor on the initial MSE for the divergence test; avoids flagging
# noise-level wobble when training starts from a near-perfect solution
DIVERGENCE_FLOOR = 1e-2


class ConvergenceError(RuntimeError):
    """LMS diverged; ``telemetry`` holds the smoothed MSE trace."""

    def __init__(self, message: str, telemetry: dict):
        super().__init__(message)
        self.telemetry = telemetry


@dataclass(frozen=True)
class EqConfig:
    taps_per_filter: int = 100
    step_size: float = 5e-4
    epochs: int = 1
    supervised: bool = True

    def __post_init__(self):
        if self.taps_per_filter < 1:
            raise ValueError("taps_per_filter must be >= 1")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.supervised:
            raise ValueError("only supervised (data-aided) training is implemented")


@dataclass
class EqualizerState:
    """Tap tensor ``[n_out, n_in, taps]`` at ``sample_rate`` plus telemetry.

    Tap ``l`` of every filter multiplies input sample ``2n + center - l`` when
    producing output symbol ``n`` (for 2 samples/symbol).
    """

    taps: np.ndarray
    sample_rate: float  # GSa/s
    symbol_rate: float  # GBd
    rolloff: float = 0.01
    mse_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    converged: bool = False

    @property
    def n_outputs(self) -> int:
        return self.taps.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.taps.shape[1]

    @property
    def n_taps(self) -> int:
        return self.taps.shape[2]

    @property
    def center(self) -> int:
        return self.n_taps // 2

    @property
    def oversampling(self) -> int:
        return int(round(self.sample_rate / self.symbol_rate))

    @classmethod
    def center_spike(cls, n_modes: int, n_taps: int, sample_rate: float, symbol_rate: float, rolloff=0.01):
        taps = np.zeros((n_modes, n_modes, n_taps), dtype=complex)
        taps[np.arange(n_modes), np.arange(n_modes), n_taps // 2] = 1.0
        return cls(taps, sample_rate, symbol_rate, rolloff)


@numba.njit(cache=True)
def _lms_epoch(xpad, ref, w, mu, sps, center, pad, out, sqerr):
    n_out, n_in, n_taps = w.shape
    n_sym = ref.shape[1]
    e = np.empty(n_out, dtype=np.complex128)
    for n in range(n_sym):
        m = sps * n + center + pad
        for i in range(n_out):
            acc = 0j
            for j in range(n_in):
                for l in range(n_taps):
                    acc += w[i, j, l] * xpad[j, m - l]
            out[i, n] = acc
            e[i] = ref[i, n] - acc
        s = 0.0
        for i in range(n_out):
            s += e[i].real ** 2 + e[i].imag ** 2
            g = mu * e[i]
            for j in range(n_in):
                for l in range(n_taps):
                    w[i, j, l] += g * np.conj(xpad[j, m - l])
        sqerr[n] = s / n_out


def _smooth(sqerr: np.ndarray, window: int = MSE_WINDOW) -> np.ndarray:
    nb = max(1, sqerr.size // window)
    return sqerr[: nb * window].reshape(nb, -1).mean(axis=1) if sqerr.size >= window else np.array([sqerr.mean()])


def lms_equalize(rx: Waveform, reference: SymbolFrame, cfg: EqConfig, rolloff: float = 0.01):
    """Train a T/``sps`` spaced MIMO equalizer with supervised LMS.

    Parameters
    ----------
    rx : Waveform
        Received streams at the equalizer rate (normally 2 samples/symbol),
        symbol ``n`` centred on sample ``sps * n``.
    reference : SymbolFrame
        Transmitted symbols; the error is ``reference - output`` on every
        symbol (never decisions).
    cfg : EqConfig

    Returns
    -------
    state : EqualizerState
    equalized : SymbolFrame
        One sample per symbol from the final epoch.

    Raises
    ------
    ConvergenceError
        If the smoothed MSE exceeds ten times its initial value.
    """
    sps = rx.oversampling
    n_in = rx.n_streams
    n_out = reference.n_streams
    n_sym = min(reference.n_symbols, rx.streams.shape[1] // sps)
    L = cfg.taps_per_filter
    state = EqualizerState.center_spike(max(n_in, n_out), L, rx.sample_rate, rx.symbol_rate, rolloff)
    w = np.ascontiguousarray(state.taps[:n_out, :n_in])
    pad = L
    xpad = np.zeros((n_in, rx.streams.shape[1] + 2 * pad), dtype=complex)
    xpad[:, pad:pad + rx.streams.shape[1]] = rx.streams
    ref = np.ascontiguousarray(reference.streams[:, :n_sym])
    out = np.empty((n_out, n_sym), dtype=complex)
    traces = []
    for _ in range(cfg.epochs):
        sq = np.empty(n_sym)
        _lms_epoch(xpad, ref, w, cfg.step_size, sps, L // 2, pad, out, sq)
        traces.append(sq)
        sm = _smooth(np.concatenate(traces))
        if not np.all(np.isfinite(sm)) or sm.max() > DIVERGENCE_FACTOR * max(sm[0], DIVERGENCE_FLOOR):
            raise ConvergenceError("LMS diverged", {"mse_trace": sm.tolist(), "step_size": cfg.step_size})
    trace = _smooth(np.concatenate(traces))
    converged = bool(trace.size < 2 or trace[-1] <= 1.1 * trace[-2] + 1e-12)
    state = EqualizerState(w, rx.sample_rate, rx.symbol_rate, rolloff, trace, converged)
    return state, SymbolFrame(out, seed=reference.seed, scale=reference.scale)


def transfer_grid(state: EqualizerState, n_points: int) -> np.ndarray:
    """Uniform frequency grid (GHz) spanning one equalizer sample-rate period."""
    fs = state.sample_rate
    return (np.arange(n_points) - n_points // 2) * fs / n_points


def taps_to_transfer(state: EqualizerState, n_points: int):
    """Frequency response ``W(f)`` of every tap filter.

    ``W_ij(f) = sum_l w_ij[l] exp(-j 2 pi f (l - center) / fs)``, evaluated on
    :func:`transfer_grid`. Returns ``(freqs, W)`` with ``W`` of shape
    ``(n_points, n_out, n_in)``.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    f = transfer_grid(state, n_points)
    lag = np.arange(state.n_taps) - state.center
    E = np.exp(-2j * np.pi * np.outer(f / state.sample_rate, lag))  # (n_points, L)
    W = np.einsum("ijl,fl->fij", state.taps, E)
    return f, W


def signal_band(state: EqualizerState) -> float:
    return (1 + state.rolloff) / 2 * state.symbol_rate


def estimate_from_taps(
    state: EqualizerState, snr: Optional[SnrSpec] = None, corrected: bool = False, n_points: int = 512
) -> MdgReport:
    """MDL/MDG report from equalizer taps.

    ``W^-1 (W^-1)^H`` eigenvalues are computed at each in-band frequency
    point (``|f| <= (1 + rolloff) Rs / 2``), optionally mapped through
    :func:`~mdgsim.metrics.correct_spectrum`, and reduced to band-averaged
    ``sigma_mdg`` and peak-to-peak values.
    """
    if corrected and (snr is None or snr.is_infinite):
        raise ValueError("corrected estimate requires a finite SNR")
    if state.n_outputs != state.n_inputs:
        raise ValueError("tap tensor must be square in its mode dimensions")
    f, W = taps_to_transfer(state, n_points)
    band = np.abs(f) <= signal_band(state) + 1e-12
    diag = {}
    lam = observed_spectrum_from_equalizer(W[band], diagnostics=diag)
    if corrected:
        lam = correct_spectrum(lam, snr)
    diag["n_points_in_band"] = int(band.sum())
    diag["converged"] = bool(state.converged)
    return MdgReport(
        sigma_mdg=sigma_mdg(lam),
        peak_to_peak=peak_to_peak(lam),
        corrected=corrected,
        snr_used=snr,
        source="equalizer-taps",
        diagnostics=diag,
    )


# -- tap dump ----------------------------------------------------------------

TAP_FORMAT = "mdgsim.taps"


def save_taps(state: EqualizerState, path) -> None:
    """Write a tap dump: ``.json`` text, anything else numpy ``.npz`` binary."""
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(taps_to_dict(state)))
        return
    with open(path, "wb") as fh:
        np.savez(
            fh,
            format=TAP_FORMAT,
            taps=state.taps,
            sample_rate=state.sample_rate,
            symbol_rate=state.symbol_rate,
            rolloff=state.rolloff,
            mse_trace=state.mse_trace,
            converged=state.converged,
        )


def taps_to_dict(state: EqualizerState) -> dict:
    t = state.taps
    return {
        "format": TAP_FORMAT,
        "n_outputs": t.shape[0],
        "n_inputs": t.shape[1],
        "taps_per_filter": t.shape[2],
        "sample_rate_gsps": state.sample_rate,
        "symbol_rate_gbd": state.symbol_rate,
        "rolloff": state.rolloff,
        "taps_re": t.real.tolist(),
        "taps_im": t.imag.tolist(),
        "mse_trace": np.asarray(state.mse_trace).tolist(),
        "converged": bool(state.converged),
    }


def load_taps(path) -> EqualizerState:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"PK":
        with np.load(path, allow_pickle=False) as z:
            if str(z["format"]) != TAP_FORMAT:
                raise ValueError("not a tap dump")
            return EqualizerState(
                taps=z["taps"].astype(complex),
                sample_rate=float(z["sample_rate"]),
                symbol_rate=float(z["symbol_rate"]),
                rolloff=float(z["rolloff"]),
                mse_trace=z["mse_trace"],
                converged=bool(z["converged"]),
            )
    d = json.loads(path.read_text())
    if d.get("format") != TAP_FORMAT:
        raise ValueError("not a tap dump")
    taps = np.asarray(d["taps_re"], float) + 1j * np.asarray(d["taps_im"], float)
    return EqualizerState(
        taps=taps,
        sample_rate=float(d["sample_rate_gsps"]),
        symbol_rate=float(d["symbol_rate_gbd"]),
        rolloff=float(d.get("rolloff", 0.01)),
        mse_trace=np.asarray(d.get("mse_trace", []), float),
        converged=bool(d.get("converged", False)),
    )
