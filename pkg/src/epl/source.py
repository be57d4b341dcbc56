"""Parameterized model of the Sagnac-type nondegenerate pair source."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .polcalc import PolState, bell

# detector and periscope transmission figures quoted for the 810/1550 nm source
SNSPD_EFFICIENCY = 0.90
APD_EFFICIENCY = 0.60
PERISCOPE_TRANSMISSION = {532: 0.946, 810: 0.944, 1550: 0.940}

PRESET_FIDELITY = 0.985


@dataclass(frozen=True)
class SourceConfig:
    """All physical parameters of the source.

    Rates are per mW of pump power; efficiencies are end-to-end detection
    efficiencies (path transmission x fibre coupling x detector).  The noise
    knobs are the amplitude imbalance ``imbalance_alpha`` and relative phase
    ``phase_phi`` (radians), the coherence factor ``dephasing_d`` and the
    white-noise weight ``white_noise_w``.
    """

    pump_power: float = 1.0
    pgr_per_mw: float = 8.2e5
    coincidence_per_mw: float = 3.0e4
    eta_signal: float = 0.191
    eta_idler: float = 0.191
    dark_signal: float = 0.0
    dark_idler: float = 0.0
    coincidence_window: float = 1e-9
    imbalance_alpha: float = 0.0
    phase_phi: float = 0.0
    dephasing_d: float = 1.0
    white_noise_w: float = 0.02

    def __post_init__(self):
        for name in ("pump_power", "pgr_per_mw", "coincidence_per_mw", "dark_signal", "dark_idler"):
            val = getattr(self, name)
            if not np.isfinite(val) or val < 0:
                raise ValueError(f"{name} must be a finite non-negative rate, got {val}")
        for name in ("eta_signal", "eta_idler", "dephasing_d", "white_noise_w"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")
        if not self.coincidence_window > 0:
            raise ValueError(f"coincidence_window must be > 0, got {self.coincidence_window}")
        if not abs(self.imbalance_alpha) <= np.pi / 4:
            raise ValueError(f"imbalance_alpha must lie in [-pi/4, pi/4], got {self.imbalance_alpha}")
        if not np.isfinite(self.phase_phi):
            raise ValueError("phase_phi must be finite")
        if self.coincidence_per_mw > self.pgr_per_mw:
            raise ValueError("coincidence_per_mw cannot exceed pgr_per_mw")

    @property
    def pair_rate(self) -> float:
        """Pairs generated per second at the configured pump power."""
        return self.pgr_per_mw * self.pump_power

    @property
    def noise(self) -> "NoiseModel":
        return NoiseModel(self.imbalance_alpha, self.phase_phi, self.dephasing_d, self.white_noise_w)

    def replace(self, **changes) -> "SourceConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SourceConfig":
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - fields
        if unknown:
            raise ValueError(f"unknown source fields: {sorted(unknown)}")
        return cls(**d)


class NoiseModel(NamedTuple):
    alpha: float
    phi: float
    d: float
    w: float


def paper_preset(**overrides) -> SourceConfig:
    """Preset matching the reported 8.2e5 / 3e4 pairs/s/mW and 98.5 % fidelity.

    All infidelity is attributed to white noise: ``1 - 3w/4 = 0.985``.
    """
    w = white_noise_for_fidelity(PRESET_FIDELITY)
    return SourceConfig(**{"white_noise_w": w, **overrides})


def ideal_config(**overrides) -> SourceConfig:
    return SourceConfig(**{"white_noise_w": 0.0, **overrides})


def white_noise_for_fidelity(f: float) -> float:
    """White-noise weight that gives fidelity ``f`` to Phi+ for an otherwise ideal state."""
    if not 0.25 <= f <= 1.0:
        raise ValueError(f"fidelity {f} unreachable with white noise alone")
    return 4.0 * (1.0 - f) / 3.0


def ideal_state() -> PolState:
    return bell("Phi+")


def noisy_state(cfg: SourceConfig) -> PolState:
    """Two-photon polarization state (signal x idler) produced by ``cfg``."""
    alpha, phi, d, w = cfg.noise
    a = np.cos(np.pi / 4 + alpha)
    b = np.exp(1j * phi) * np.sin(np.pi / 4 + alpha)
    psi = np.array([a, 0, 0, b], dtype=complex)
    rho = np.outer(psi, psi.conj())
    rho[0, 3] *= d
    rho[3, 0] *= d
    rho = (1 - w) * rho + w * np.eye(4) / 4
    return PolState.mixed(rho, (2, 2))


def accidental_rate(n_signal: float, n_idler: float, window: float) -> float:
    """Mean rate of uncorrelated coincidences ``N_s N_i tau``."""
    return n_signal * n_idler * window


def accidental_white_noise(cfg: SourceConfig | None = None, *, n_signal=None, n_idler=None,
                           coincidences=None, window=None) -> float:
    """White-noise weight contributed by accidentals, ``A / (C + A)``.

    With a config the singles and true coincidences follow from its rates;
    explicit keyword values override them.
    """
    if cfg is not None:
        mu = cfg.pair_rate
        n_signal = mu * cfg.eta_signal + cfg.dark_signal if n_signal is None else n_signal
        n_idler = mu * cfg.eta_idler + cfg.dark_idler if n_idler is None else n_idler
        coincidences = mu * cfg.eta_signal * cfg.eta_idler if coincidences is None else coincidences
        window = cfg.coincidence_window if window is None else window
    if None in (n_signal, n_idler, coincidences, window):
        raise ValueError("need either a SourceConfig or all of n_signal, n_idler, coincidences, window")
    acc = accidental_rate(n_signal, n_idler, window)
    if acc == 0.0:
        return 0.0
    return acc / (coincidences + acc)
