"""MMSE equalizer model, observed-eigenvalue mapping, its inversion and the
scalar MDL/MDG figures of merit.

Conventions
-----------
* Eigenvalues are linear power gains of ``H H^H`` (not amplitudes).
* ``sigma_mdg`` and ``peak_to_peak`` are in dB, averaged over frequency bins.
* SNR is a linear power ratio wrapped in :class:`SnrSpec`; ``SnrSpec.infinite()``
  is the noiseless sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linops import hermitian_spectrum, regularized_inverse

__all__ = [
    "SnrSpec",
    "EigenSpectrum",
    "MdgReport",
    "mmse_transfer",
    "observed_spectrum_analytic",
    "correct_spectrum",
    "observed_spectrum_from_equalizer",
    "channel_spectrum",
    "sigma_mdg",
    "peak_to_peak",
    "osnr_to_snr",
    "estimation_error",
    "db",
    "undb",
]

REFERENCE_BANDWIDTH_GHZ = 12.5


def db(x):
    return 10.0 * np.log10(x)


def undb(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


@dataclass(frozen=True)
class SnrSpec:
    """Electrical SNR as a linear power ratio; ``math.inf`` means noiseless."""

    snr_linear: float

    def __post_init__(self):
        if not (self.snr_linear > 0):
            raise ValueError(f"snr_linear must be > 0, got {self.snr_linear!r}")

    @classmethod
    def from_db(cls, snr_db: float) -> "SnrSpec":
        if snr_db is None or math.isinf(snr_db) and snr_db > 0:
            return cls.infinite()
        return cls(10.0 ** (snr_db / 10.0))

    @classmethod
    def infinite(cls) -> "SnrSpec":
        return cls(math.inf)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.snr_linear)

    @property
    def db(self) -> float:
        return math.inf if self.is_infinite else 10.0 * math.log10(self.snr_linear)

    def to_json(self):
        return None if self.is_infinite else self.db


def _as_snr(snr) -> SnrSpec:
    if isinstance(snr, SnrSpec):
        return snr
    return SnrSpec(float(snr))


@dataclass(frozen=True)
class EigenSpectrum:
    """Per-frequency eigenvalues ``lambda_i^2``, shape ``(n_bins, n_modes)``.

    Rows are sorted in descending order on construction.
    """

    per_bin: np.ndarray

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.per_bin, dtype=float))
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("spectrum must be a nonempty (n_bins, n_modes) array")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError("spectrum entries must be finite and strictly positive")
        arr = -np.sort(-arr, axis=1)
        arr.setflags(write=False)
        object.__setattr__(self, "per_bin", arr)

    @property
    def n_bins(self) -> int:
        return self.per_bin.shape[0]

    @property
    def n_modes(self) -> int:
        return self.per_bin.shape[1]

    def db(self) -> np.ndarray:
        return db(self.per_bin)

    def scaled(self, c: float) -> "EigenSpectrum":
        return EigenSpectrum(self.per_bin * c)


@dataclass(frozen=True)
class MdgReport:
    sigma_mdg: float
    peak_to_peak: float
    corrected: bool = False
    snr_used: Optional[SnrSpec] = None
    source: str = "analytic-H"
    diagnostics: dict = field(default_factory=dict)

    SOURCES = ("analytic-H", "analytic-W", "equalizer-taps")

    def __post_init__(self):
        if self.source not in self.SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if self.sigma_mdg < 0 or self.peak_to_peak < 0:
            raise ValueError("MDG figures must be nonnegative")

    def to_dict(self) -> dict:
        snr_db = None if self.snr_used is None else self.snr_used.db
        if snr_db is not None and math.isinf(snr_db):
            snr_db = "inf"
        return {
            "sigma_mdg_db": float(self.sigma_mdg),
            "peak_to_peak_db": float(self.peak_to_peak),
            "corrected": bool(self.corrected),
            "snr_used_db": snr_db,
            "source": self.source,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MdgReport":
        snr = d.get("snr_used_db")
        if snr is None:
            snr_spec = None
        elif snr == "inf":
            snr_spec = SnrSpec.infinite()
        else:
            snr_spec = SnrSpec.from_db(float(snr))
        return cls(
            sigma_mdg=float(d["sigma_mdg_db"]),
            peak_to_peak=float(d["peak_to_peak_db"]),
            corrected=bool(d["corrected"]),
            snr_used=snr_spec,
            source=d["source"],
            diagnostics=dict(d.get("diagnostics", {})),
        )


def mmse_transfer(H: np.ndarray, snr) -> np.ndarray:
    """MMSE equalizer ``W = (I/SNR + H^H H)^-1 H^H``.

    Accepts a single square matrix or a stack ``(..., n, n)``. At infinite
    SNR this is the zero-forcing solution ``(H^H H)^-1 H^H``, computed through
    :func:`~mdgsim.linops.regularized_inverse` so singular bins do not fail.
    """
    snr = _as_snr(snr)
    H = np.asarray(H, dtype=complex)
    if H.shape[-1] != H.shape[-2]:
        raise ValueError(f"H must be square, got shape {H.shape}")
    if snr.is_infinite:
        return regularized_inverse(H)
    Hh = np.swapaxes(H, -1, -2).conj()
    eye = np.eye(H.shape[-1])
    return np.linalg.solve(eye / snr.snr_linear + Hh @ H, Hh)


def observed_spectrum_analytic(lambda2, snr):
    """Eigenvalue seen through an MMSE equalizer: ``1/(S^2 l) + 2/S + l``."""
    snr = _as_snr(snr)
    lam = np.asarray(lambda2, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("lambda2 must be positive")
    if snr.is_infinite:
        out = lam.copy()
    else:
        s = snr.snr_linear
        out = 1.0 / (lam * s * s) + 2.0 / s + lam
    return out if out.ndim else float(out)


def correct_spectrum(lambda2_mmse, snr):
    """Recover ``lambda^2`` from an MMSE-observed eigenvalue at known SNR.

    Returns the larger root of ``S^2 l^2 - (S^2 m - 2S) l + 1 = 0``. Inputs
    below the analytic floor ``4/S`` (negative discriminant) map to the
    double root ``1/S``.
    """
    snr = _as_snr(snr)
    if snr.is_infinite:
        raise ValueError("correction requires a finite SNR")
    m = np.asarray(lambda2_mmse, dtype=float)
    if np.any(m <= 0):
        raise ValueError("lambda2_mmse must be positive")
    s = snr.snr_linear
    b = s * s * m - 2.0 * s
    disc = b * b - 4.0 * s * s
    ok = disc >= 0
    root = (b + np.sqrt(np.where(ok, disc, 0.0))) / (2.0 * s * s)
    out = np.where(ok, root, 1.0 / s)
    return out if out.ndim else float(out)


def observed_spectrum_from_equalizer(W: np.ndarray, eps: float = 1e-9, diagnostics: Optional[dict] = None):
    """Descending eigenvalues of ``W^-1 (W^-1)^H``.

    For a stack of matrices returns shape ``(n_bins, n)``. When ``diagnostics``
    is given, indices of numerically singular bins are stored under
    ``"singular_bins"``.
    """
    W = np.asarray(W, dtype=complex)
    if W.shape[-1] != W.shape[-2]:
        raise ValueError(f"W must be square, got shape {W.shape}")
    Winv = regularized_inverse(W, eps)
    if diagnostics is not None:
        s = np.linalg.svd(W, compute_uv=False)
        bad = np.atleast_1d(s[..., -1] <= eps * s[..., 0])
        diagnostics["singular_bins"] = [int(i) for i in np.flatnonzero(bad)]
    G = Winv @ np.swapaxes(Winv, -1, -2).conj()
    return hermitian_spectrum(G).eigenvalues


def channel_spectrum(H: np.ndarray) -> np.ndarray:
    """Descending eigenvalues of ``H H^H`` for a matrix or stack of matrices."""
    H = np.asarray(H, dtype=complex)
    G = H @ np.swapaxes(H, -1, -2).conj()
    return hermitian_spectrum(G).eigenvalues


def _spectrum_db(spec) -> np.ndarray:
    if isinstance(spec, EigenSpectrum):
        return spec.db()
    arr = np.atleast_2d(np.asarray(spec, dtype=float))
    if arr.size == 0:
        raise ValueError("empty spectrum")
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("spectrum entries must be finite and strictly positive")
    return db(arr)


def sigma_mdg(spec) -> float:
    """Band-averaged MDG standard deviation in dB.

    Population standard deviation of ``10 log10(lambda^2)`` over the modes of
    each bin, then the arithmetic mean over bins.
    """
    return float(np.mean(np.std(_spectrum_db(spec), axis=1)))


def peak_to_peak(spec) -> float:
    """Band-averaged ratio of largest to smallest eigenvalue, in dB."""
    d = _spectrum_db(spec)
    return float(np.mean(d.max(axis=1) - d.min(axis=1)))


def osnr_to_snr(osnr_db: float, symbol_time_ps: float) -> float:
    """Electrical SNR (dB) from OSNR in a 12.5 GHz reference bandwidth."""
    if not symbol_time_ps > 0:
        raise ValueError("symbol_time must be positive")
    factor = symbol_time_ps * 1e-12 * REFERENCE_BANDWIDTH_GHZ * 1e9
    return osnr_db + 10.0 * math.log10(factor)


def estimation_error(sigma_ref: float, sigma_nl: float) -> float:
    """Signed estimation error ``sigma_ref - sigma_nl`` in dB."""
    return sigma_ref - sigma_nl


def report_from_spectrum(
    spec,
    *,
    snr: Optional[SnrSpec] = None,
    corrected: bool = False,
    source: str = "analytic-H",
    diagnostics: Optional[dict] = None,
) -> MdgReport:
    """Build an :class:`MdgReport`, optionally correcting the spectrum first."""
    arr = spec.per_bin if isinstance(spec, EigenSpectrum) else np.atleast_2d(spec)
    if corrected:
        if snr is None or snr.is_infinite:
            raise ValueError("corrected estimate needs a finite SNR")
        arr = correct_spectrum(arr, snr)
    return MdgReport(
        sigma_mdg=sigma_mdg(arr),
        peak_to_peak=peak_to_peak(arr),
        corrected=corrected,
        snr_used=snr,
        source=source,
        diagnostics=diagnostics or {},
    )

