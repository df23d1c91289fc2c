"""Gray-mapped square 16-QAM symbol generation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..linops import as_rng

# 2-bit Gray code per quadrature: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
_GRAY_LEVELS = np.array([-3.0, -1.0, 3.0, 1.0])
BITS_PER_SYMBOL = 4


def constellation() -> np.ndarray:
    """The 16 canonical points indexed by their 4-bit Gray label, unit mean power."""
    idx = np.arange(16)
    pts = _GRAY_LEVELS[idx >> 2] + 1j * _GRAY_LEVELS[idx & 3]
    return pts / np.sqrt(10.0)


def map_bits(bits: np.ndarray) -> np.ndarray:
    """Map a ``(..., 4k)`` bit array onto ``(..., k)`` unit-power 16-QAM symbols."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[-1] % BITS_PER_SYMBOL:
        raise ValueError("bit count must be a multiple of 4")
    b = bits.reshape(*bits.shape[:-1], -1, BITS_PER_SYMBOL)
    label = (b[..., 0] << 3) | (b[..., 1] << 2) | (b[..., 2] << 1) | b[..., 3]
    return constellation()[label]


def decide(x: np.ndarray, scale=1.0) -> np.ndarray:
    """Nearest-point hard decision on a (per-stream) scaled alphabet."""
    pts = constellation()
    scale = np.asarray(scale, dtype=float)
    if scale.ndim:
        scale = scale[:, None]
    z = np.asarray(x) / scale
    k = np.argmin(np.abs(z[..., None] - pts), axis=-1)
    return pts[k] * scale


@dataclass(frozen=True)
class SymbolFrame:
    """``streams`` has shape ``(n_streams, n_symbols)``."""

    streams: np.ndarray
    seed: object = None
    scale: np.ndarray = field(default=None)

    @property
    def n_streams(self) -> int:
        return self.streams.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.streams.shape[1]


def generate_frame(cfg, n_streams: int, seed=None) -> SymbolFrame:
    """Independent Gray-mapped 16-QAM streams with unit average power each.

    Each stream is drawn from its own bit sequence and rescaled by its
    empirical RMS so the per-stream mean power is exactly one.
    """
    if int(n_streams) != n_streams or n_streams < 1:
        raise ValueError("n_streams must be >= 1")
    if cfg.modulation.lower() not in ("16qam", "16-qam"):
        raise ValueError(f"unsupported modulation {cfg.modulation!r}")
    rng = as_rng(seed)
    bits = rng.integers(0, 2, size=(n_streams, cfg.symbols_per_stream * BITS_PER_SYMBOL))
    sym = map_bits(bits)
    rms = np.sqrt(np.mean(np.abs(sym) ** 2, axis=1))
    sym = sym / rms[:, None]
    return SymbolFrame(streams=sym, seed=seed if not isinstance(seed, np.random.Generator) else None,
                       scale=1.0 / rms)
