"""Frequency-resolved coupled SDM channel synthesis.

Two generators are provided:

* :func:`build_channel` - strongly coupled multisection link. Every section
  (one per span) applies a Haar coupling ``V^H``, per-mode group delays, a
  second Haar coupling ``U`` and a zero-mean log-gain profile.
* :func:`voa_channel` - frequency-flat weak-coupling emulation of a short
  link whose per-mode launch powers are set by variable optical attenuators.

Units: frequencies in GHz, delays in ps, gains in dB.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .linops import as_rng, haar_unitary, weak_coupling_unitary
from .metrics import channel_spectrum

__all__ = [
    "LinkConfig",
    "SectionRealization",
    "ChannelRealization",
    "VoaSweepConfig",
    "frequency_grid",
    "sample_section",
    "build_channel",
    "normalize_channel",
    "voa_channel",
    "table_i_attenuations",
    "save_channel",
    "load_channel",
    "LP_MODES",
]

LP_MODES = ("LP01", "LP11a", "LP11b")


@dataclass(frozen=True)
class LinkConfig:
    spatial_modes: int = 6
    spans: int = 100
    span_length: float = 50.0  # km
    gd_coeff: float = 3.1  # ps/sqrt(km)
    sigma_g: float = 0.3  # dB per section
    n_bins: int = 1000
    bandwidth: float = 240.0  # GHz
    seed: int = 0

    def __post_init__(self):
        for name in ("spatial_modes", "spans", "n_bins"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
        for name in ("span_length", "bandwidth"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("gd_coeff", "sigma_g"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def dim(self) -> int:
        return 2 * self.spatial_modes

    @property
    def section_gd_std(self) -> float:
        """Per-section group-delay standard deviation in ps."""
        return self.gd_coeff * np.sqrt(self.span_length)

    @property
    def total_gd_std(self) -> float:
        return self.gd_coeff * np.sqrt(self.span_length * self.spans)


@dataclass(frozen=True)
class SectionRealization:
    input_coupling: np.ndarray
    output_coupling: np.ndarray
    group_delays: np.ndarray  # ps
    log_gains: np.ndarray  # dB

    def transfer(self, omega: np.ndarray) -> np.ndarray:
        """Section matrices ``G U D(w) V^H`` for angular frequencies in rad/ps."""
        amp = 10.0 ** (self.log_gains / 20.0)
        gu = amp[:, None] * self.output_coupling
        phase = np.exp(-1j * np.outer(omega, self.group_delays))
        return (gu[None, :, :] * phase[:, None, :]) @ self.input_coupling.conj().T


@dataclass(frozen=True)
class ChannelRealization:
    """One ``H(f)`` per frequency bin, ``matrices.shape == (n_bins, dim, dim)``."""

    frequencies: np.ndarray  # GHz
    matrices: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        m = np.asarray(self.matrices, dtype=complex)
        if m.ndim != 3 or m.shape[1] != m.shape[2]:
            raise ValueError(f"matrices must have shape (n_bins, dim, dim), got {m.shape}")
        if f.shape != (m.shape[0],):
            raise ValueError("one matrix per frequency bin is required")
        if f.size > 1 and not np.allclose(np.diff(f), f[1] - f[0], rtol=1e-9, atol=1e-12):
            raise ValueError("frequency grid must be uniform")
        f.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "matrices", m)

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    @property
    def n_bins(self) -> int:
        return self.matrices.shape[0]

    @property
    def bin_spacing(self) -> float:
        if self.n_bins > 1:
            return float(self.frequencies[1] - self.frequencies[0])
        return float(self.metadata.get("bandwidth", 0.0))

    def spectrum(self) -> np.ndarray:
        """Eigenvalues of ``H H^H`` per bin, shape ``(n_bins, dim)``."""
        return channel_spectrum(self.matrices)

    def band(self, half_width: float) -> "ChannelRealization":
        """Sub-channel restricted to bins with ``|f| <= half_width`` GHz."""
        sel = np.abs(self.frequencies) <= half_width + 1e-12
        if not np.any(sel):
            # narrower than one bin: keep the bin nearest to DC
            sel = np.zeros(self.n_bins, bool)
            sel[np.argmin(np.abs(self.frequencies))] = True
        return ChannelRealization(self.frequencies[sel], self.matrices[sel], dict(self.metadata))

    def scaled(self, c: float) -> "ChannelRealization":
        return ChannelRealization(self.frequencies, self.matrices * c, dict(self.metadata))


def frequency_grid(n_bins: int, bandwidth: float) -> np.ndarray:
    """Bin centres of ``n_bins`` equal bins tiling ``[-B/2, B/2]`` (GHz)."""
    return -bandwidth / 2 + (np.arange(n_bins) + 0.5) * bandwidth / n_bins


def _section_rng(seed, section_index: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(section_index,)))


def _zero_mean_normal(rng, std: float, n: int) -> np.ndarray:
    # scale so the post-removal population std is `std` in distribution
    if n == 1 or std == 0:
        return np.zeros(n)
    x = rng.standard_normal(n) * std / np.sqrt(1.0 - 1.0 / n)
    return x - x.mean()


def sample_section(config: LinkConfig, section_index: int, seed=None) -> SectionRealization:
    """Draw one multisection element.

    ``seed`` defaults to ``config.seed``; each ``section_index`` gets an
    independent stream derived from it.
    """
    if not 0 <= section_index < config.spans:
        raise ValueError(f"section_index must lie in [0, {config.spans}), got {section_index}")
    rng = _section_rng(config.seed if seed is None else seed, section_index)
    d = config.dim
    v = haar_unitary(d, rng)
    u = haar_unitary(d, rng)
    tau = _zero_mean_normal(rng, config.section_gd_std, d)
    g = _zero_mean_normal(rng, config.sigma_g, d)
    return SectionRealization(input_coupling=v, output_coupling=u, group_delays=tau, log_gains=g)


def build_channel(config: LinkConfig) -> ChannelRealization:
    """Cascade ``config.spans`` sections into ``H(f)`` on the configured grid.

    ``H(w) = prod_{k=K..1} G_k U_k D_k(w) V_k^H`` with
    ``D_k(w) = diag(exp(-j w tau_k))`` and ``G_k = diag(10^(g_k/20))``.
    """
    freqs = frequency_grid(config.n_bins, config.bandwidth)
    omega = 2 * np.pi * freqs * 1e-3  # rad/ps
    H = np.broadcast_to(np.eye(config.dim, dtype=complex), (config.n_bins, config.dim, config.dim)).copy()
    for k in range(config.spans):
        sec = sample_section(config, k)
        H = sec.transfer(omega) @ H
    meta = {"kind": "multisection", "config": asdict(config), "bandwidth": config.bandwidth}
    return ChannelRealization(freqs, H, meta)


def normalize_channel(ch: ChannelRealization, mode: str = "log") -> ChannelRealization:
    """Rescale ``ch`` by one positive scalar.

    ``mode="log"`` sets the mean of ``10 log10(lambda^2)`` over all bins and
    modes to 0 dB (unit geometric-mean power gain). ``mode="power"`` sets the
    arithmetic mean of ``lambda^2`` to 1 instead.
    """
    lam = ch.spectrum()
    if not np.any(np.abs(ch.matrices) > 0):
        raise ValueError("cannot normalize an all-zero channel")
    if mode == "log":
        if np.any(lam <= 0):
            raise ValueError("channel has zero eigenvalues; log normalization undefined")
        level_db = float(np.mean(10 * np.log10(lam)))
    elif mode == "power":
        level_db = float(10 * np.log10(np.mean(lam)))
    else:
        raise ValueError(f"unknown normalization mode {mode!r}")
    out = ch.scaled(10 ** (-level_db / 20))
    out.metadata["normalization"] = mode
    return out


@dataclass(frozen=True)
class VoaSweepConfig:
    """One attenuation setting of the VOA emulation.

    ``attenuations`` are per spatial mode in dB (LP01, LP11a, LP11b for the
    three-mode case); ``baseline_db`` holds the per-mode launch imbalance in
    dB relative to nominal at 0 dB attenuation.
    """

    case_id: int = 4
    attenuations: Sequence[float] = (5.0, 5.0, 5.0)
    coupling_kappa: float = 0.0
    total_power_constraint: Optional[float] = None  # dB, relative to nominal
    baseline_db: Sequence[float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.case_id not in (1, 2, 3, 4):
            raise ValueError(f"case_id must be 1..4, got {self.case_id!r}")
        att = tuple(float(a) for a in self.attenuations)
        if any(a < 0 for a in att):
            raise ValueError("attenuations must be >= 0 dB")
        base = tuple(float(b) for b in self.baseline_db)
        if len(base) != len(att):
            raise ValueError("baseline_db must have one entry per spatial mode")
        if not self.coupling_kappa >= 0:
            raise ValueError("coupling_kappa must be nonnegative")
        object.__setattr__(self, "attenuations", att)
        object.__setattr__(self, "baseline_db", base)
        if self.total_power_constraint is not None:
            got = _total_power_db(att, base)
            if abs(got - self.total_power_constraint) > 1e-6:
                raise ValueError(
                    f"attenuations give total power {got:.4f} dB, constraint is "
                    f"{self.total_power_constraint:.4f} dB"
                )

    @property
    def spatial_modes(self) -> int:
        return len(self.attenuations)

    @property
    def attenuation_ratio(self) -> float:
        """Difference between largest and smallest attenuation, dB."""
        return max(self.attenuations) - min(self.attenuations)


def _total_power_db(att, base) -> float:
    p = 10 ** ((np.asarray(base) - np.asarray(att)) / 10)
    return float(10 * np.log10(p.sum()))


# attenuation cases: per case, (LP01, LP11a, LP11b) -> ("swept", start) | ("const", value) | "comp"
_TABLE_I = {
    1: (("comp",), ("const", 5.0), ("swept", 5.0)),
    2: (("swept", 5.0), ("const", 5.0), ("comp",)),
    3: (("comp",), ("swept", 5.0), ("swept", 6.0)),
    4: (("comp",), ("swept", 5.0), ("swept", 5.0)),
}
INITIAL_ATTENUATION_DB = 5.0
SWEEP_RANGE_DB = 12.0


def table_i_attenuations(case_id: int, step_db: float, baseline_db=(0.0, 0.0, 0.0)) -> tuple:
    """Attenuations (LP01, LP11a, LP11b) in dB for sweep position ``step_db``.

    Swept modes rise by ``step_db`` from their starting value; the
    compensating mode is de-attenuated so that the total launch power stays
    at its value with every VOA at 5 dB.
    """
    if case_id not in _TABLE_I:
        raise ValueError(f"case_id must be 1..4, got {case_id!r}")
    if not 0 <= step_db <= SWEEP_RANGE_DB:
        raise ValueError(f"step_db must lie in [0, {SWEEP_RANGE_DB}]")
    base = np.asarray(baseline_db, dtype=float)
    target = 10 ** (_total_power_db([INITIAL_ATTENUATION_DB] * 3, base) / 10)
    rule = _TABLE_I[case_id]
    att = [0.0, 0.0, 0.0]
    comp = None
    for m, r in enumerate(rule):
        if r[0] == "swept":
            att[m] = r[1] + step_db
        elif r[0] == "const":
            att[m] = r[1]
        else:
            comp = m
    rest = sum(10 ** ((base[m] - att[m]) / 10) for m in range(3) if m != comp)
    remaining = target - rest
    if remaining <= 0:
        raise ValueError("total power cannot be held constant at this step")
    att[comp] = base[comp] - 10 * np.log10(remaining)
    if att[comp] < -1e-12:
        raise ValueError(
            f"compensating mode {LP_MODES[comp]} would need gain ({att[comp]:.2f} dB)"
        )
    att[comp] = max(att[comp], 0.0)
    return tuple(float(a) for a in att)


def voa_config_for_step(
    case_id: int, step_db: float, coupling_kappa: float = 0.0, baseline_db=(0.0, 0.0, 0.0)
) -> VoaSweepConfig:
    att = table_i_attenuations(case_id, step_db, baseline_db)
    total = _total_power_db(att, baseline_db)
    return VoaSweepConfig(
        case_id=case_id,
        attenuations=att,
        coupling_kappa=coupling_kappa,
        total_power_constraint=total,
        baseline_db=tuple(baseline_db),
    )


def voa_channel(cfg: VoaSweepConfig, seed=None, n_bins: int = 1, bandwidth: float = 240.0) -> ChannelRealization:
    """Frequency-flat ``H = U_out A U_in`` with per-mode VOA amplitudes.

    ``A`` carries ``10^((baseline - a)/20)`` for each spatial mode, repeated
    for both polarizations (mode-major ordering: mode m occupies rows
    ``2m, 2m+1``).
    """
    rng = as_rng(seed)
    amp_db = np.asarray(cfg.baseline_db) - np.asarray(cfg.attenuations)
    amp = np.repeat(10 ** (amp_db / 20), 2)
    d = amp.size
    u_in = weak_coupling_unitary(d, cfg.coupling_kappa, rng)
    u_out = weak_coupling_unitary(d, cfg.coupling_kappa, rng)
    H = u_out @ (amp[:, None] * u_in)
    freqs = frequency_grid(n_bins, bandwidth)
    mats = np.broadcast_to(H, (n_bins, d, d)).copy()
    meta = {"kind": "voa", "config": asdict(cfg), "bandwidth": bandwidth}
    return ChannelRealization(freqs, mats, meta)


# -- serialization -----------------------------------------------------------

FORMAT_NAME = "mdgsim.channel"
FORMAT_VERSION = 1


def channel_to_dict(ch: ChannelRealization) -> dict:
    """JSON container: entries are row-major ``[re, im]`` pairs per bin."""
    m = ch.matrices.reshape(ch.n_bins, -1)
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "dim": ch.dim,
        "n_bins": ch.n_bins,
        "frequencies_ghz": ch.frequencies.tolist(),
        "entries": [np.stack([row.real, row.imag], axis=-1).tolist() for row in m],
        "metadata": _jsonable(ch.metadata),
    }


def channel_from_dict(d: dict) -> ChannelRealization:
    if d.get("format") != FORMAT_NAME:
        raise ValueError("not a channel container")
    dim, n = int(d["dim"]), int(d["n_bins"])
    e = np.asarray(d["entries"], dtype=float)
    mats = (e[..., 0] + 1j * e[..., 1]).reshape(n, dim, dim)
    return ChannelRealization(np.asarray(d["frequencies_ghz"], float), mats, dict(d.get("metadata", {})))


def save_channel(ch: ChannelRealization, path) -> None:
    """Write ``.json`` (text container) or ``.npz`` (binary) by suffix."""
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(channel_to_dict(ch)))
    else:
        with open(path, "wb") as fh:
            np.savez(
                fh,
                format=FORMAT_NAME,
                version=FORMAT_VERSION,
                frequencies_ghz=ch.frequencies,
                matrices=ch.matrices,
                metadata=json.dumps(_jsonable(ch.metadata)),
            )


def load_channel(path) -> ChannelRealization:
    path = Path(path)
    if path.suffix == ".json":
        return channel_from_dict(json.loads(path.read_text()))
    with np.load(path, allow_pickle=False) as z:
        if str(z["format"]) != FORMAT_NAME:
            raise ValueError("not a channel container")
        return ChannelRealization(z["frequencies_ghz"], z["matrices"], json.loads(str(z["metadata"])))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj
