"""CHSH correlation functions, S values and optimal-angle search.

All angles are Bloch-plane analyzer angles in degrees.  The correlation
``E`` at ``(theta_s, theta_i)`` combines the four coincidence probabilities
of the analyzer pair and its orthogonal complements (``theta + 180``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .. import _kernels
from ..counts import CountRecord, fringe_probability, setting_rates
from ..polcalc import AnalyzerSetting, PolState, X, Z
from .resample import bootstrap

DEFAULT_ANGLES = (0.0, 90.0, -45.0, 45.0)
TSIRELSON = 2.0 * math.sqrt(2.0)

# (signal offset, idler offset, sign) in the order used by the correlation kernel
_QUADRANTS = (("++", 0.0, 0.0), ("--", 180.0, 180.0), ("+-", 0.0, 180.0), ("-+", 180.0, 0.0))
# (index of theta_s choice, index of theta_i choice, sign) for S
_TERMS = ((0, 0, 1.0), (1, 1, 1.0), (0, 1, 1.0), (1, 0, -1.0))


@dataclass(frozen=True)
class ChshResult:
    angles: tuple[float, float, float, float]
    S: float
    sigma: float | None = None

    @property
    def sigmas_above_2(self) -> float | None:
        if not self.sigma:
            return None
        return (self.S - 2.0) / self.sigma

    def to_dict(self) -> dict:
        return {"angles_bloch_deg": list(self.angles), "S": self.S, "sigma": self.sigma,
                "sigmas_above_2": self.sigmas_above_2}

    @classmethod
    def from_dict(cls, d: dict) -> "ChshResult":
        return cls(tuple(d["angles_bloch_deg"]), d["S"], d["sigma"])


def _rho(rho) -> np.ndarray:
    return rho.dm() if isinstance(rho, PolState) else np.asarray(rho, dtype=complex)


def chsh_E(rho, theta_s: float, theta_i: float) -> float:
    m = _rho(rho)
    p = [fringe_probability(m, theta_s + ds, theta_i + di) for _, ds, di in _QUADRANTS]
    return p[0] + p[1] - p[2] - p[3]


def chsh_S(rho, angles: Sequence[float] = DEFAULT_ANGLES) -> ChshResult:
    """``E(s, i) + E(s', i') + E(s, i') - E(s', i)`` for angles ``(s, s', i, i')``."""
    s, s2, i, i2 = (float(a) for a in angles)
    th_s, th_i = (s, s2), (i, i2)
    m = _rho(rho)
    val = sum(sign * chsh_E(m, th_s[a], th_i[b]) for a, b, sign in _TERMS)
    return ChshResult((s, s2, i, i2), float(val))


def correlation_tensor(rho) -> np.ndarray:
    """2x2 correlation matrix ``Tr(rho sigma_a x sigma_b)`` over (Z, X)."""
    m = _rho(rho)
    ops = (Z, X)
    return np.array([[np.trace(m @ np.kron(a, b)).real for b in ops] for a in ops])


def max_S_bloch_plane(rho) -> float:
    """Largest S reachable with analyzers restricted to the Bloch X-Z plane."""
    sv = np.linalg.svd(correlation_tensor(rho), compute_uv=False)
    return float(2.0 * math.sqrt(sv[0] ** 2 + sv[1] ** 2))


def optimize_angles(rho, grid_step: float = 10.0) -> ChshResult:
    """Grid search over the four analyzer angles, refined with Nelder-Mead."""
    corr = correlation_tensor(rho)
    grid = np.arange(0.0, 360.0, grid_step)
    rad = np.deg2rad(grid)
    n = np.stack([np.cos(rad), np.sin(rad)], axis=1)
    e = n @ corr @ n.T  # E[a, b] for every grid pair
    s = (e[:, None, :, None] + e[None, :, None, :] + e[:, None, None, :] - e[None, :, :, None])
    a, a2, b, b2 = np.unravel_index(np.argmax(s), s.shape)
    x0 = np.array([grid[a], grid[a2], grid[b], grid[b2]])

    def neg_s(x):
        v = np.deg2rad(x)
        ns = np.stack([np.cos(v[:2]), np.sin(v[:2])], axis=1)
        ni = np.stack([np.cos(v[2:]), np.sin(v[2:])], axis=1)
        ee = ns @ corr @ ni.T
        return -(ee[0, 0] + ee[1, 1] + ee[0, 1] - ee[1, 0])

    res = minimize(neg_s, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
    best = res.x if -res.fun >= -neg_s(x0) else x0
    return chsh_S(rho, tuple(float(np.mod(v, 360.0)) for v in best))


# -- count-based estimation --------------------------------------------------

def chsh_settings(angles: Sequence[float] = DEFAULT_ANGLES) -> list[AnalyzerSetting]:
    """The 16 analyzer settings, grouped per correlation term in (++, --, +-, -+) order."""
    s, s2, i, i2 = (float(a) for a in angles)
    th_s, th_i = (s, s2), (i, i2)
    out = []
    for a, b, _ in _TERMS:
        for tag, ds, di in _QUADRANTS:
            out.append(AnalyzerSetting(th_s[a] + ds, th_i[b] + di, f"s{a}i{b}{tag}"))
    return out


class ChshEstimator:
    """S from the coincidences of records laid out as :func:`chsh_settings`."""

    def __init__(self, records: Sequence[CountRecord]):
        labels = [r.label for r in records]
        expected = [s.label for s in chsh_settings()]
        if sorted(labels) != sorted(expected):
            raise ValueError("records do not cover the 16 CHSH settings")
        self._order = np.array([labels.index(lab) for lab in expected])
        self._signs = np.array([sign for *_, sign in _TERMS])

    def batched(self, counts: np.ndarray) -> np.ndarray:
        coinc = counts[..., self._order, 2].reshape(counts.shape[:-2] + (4, 4))
        return _kernels.correlation_batch(coinc) @ self._signs

    def __call__(self, records: Sequence[CountRecord]) -> float:
        counts = np.array([[r.n_signal, r.n_idler, r.n_coinc] for r in records], dtype=float)
        return float(self.batched(counts))


def chsh_from_records(records: Sequence[CountRecord]) -> float:
    return ChshEstimator(records)(records)


def measure_chsh(records: Sequence[CountRecord], angles: Sequence[float] = DEFAULT_ANGLES,
                 n_resamples: int = 1000, seed: int = 0, threads: int | None = None) -> ChshResult:
    """S from counts with a Poisson-bootstrap standard deviation."""
    est = ChshEstimator(records)
    _, sigma = bootstrap(records, est, n_resamples=n_resamples, seed=seed, threads=threads)
    return ChshResult(tuple(float(a) for a in angles), est(records), sigma)


def predicted_sigma(cfg, duration: float, angles: Sequence[float] = DEFAULT_ANGLES, rho=None) -> float:
    """Poisson standard deviation of the count-based S estimate (delta method)."""
    rates = setting_rates(cfg, chsh_settings(angles), rho=rho)[:, 2].reshape(4, 4) * duration
    var = 0.0
    for c in rates:
        n = c.sum()
        e = (c[0] + c[1] - c[2] - c[3]) / n
        var += (1.0 - e * e) / n
    return math.sqrt(var)
