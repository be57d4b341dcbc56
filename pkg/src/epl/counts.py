"""Detection and counting statistics.

Expected rates follow a simple loss model: ``mu = PGR * P`` pairs/s are
generated; the signal (idler) arm detects a member of a pair with
probability ``eta_signal`` (``eta_idler``), independently; detectors add dark
counts; uncorrelated pairs produce accidental coincidences at
``N_s * N_i * tau``.  Behind polarization analyzers the pair terms are
weighted by the projection probabilities of the two-photon state.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

from . import _kernels
from ._parallel import pmap, substream
from .polcalc import BASIS_VECTORS, AnalyzerSetting, PolState, partial_trace
from .source import SourceConfig, noisy_state

COMPUTATIONAL = "computational"
_TAG_LETTERS = "HVDARL"
# Bloch-plane angles of the linear basis letters; R/L lie off the plane
_LETTER_THETA = {"H": 0.0, "V": 180.0, "D": 90.0, "A": 270.0}

Setting = Union[AnalyzerSetting, str]

CSV_COLUMNS = ("setting_label", "theta_s_deg", "theta_i_deg", "duration_s", "n_signal", "n_idler", "n_coinc")


def is_basis_tag(label: str) -> bool:
    return label == COMPUTATIONAL or (len(label) == 2 and all(c in _TAG_LETTERS for c in label))


@dataclass(frozen=True)
class CountRecord:
    """Counts observed at one analyzer setting over ``duration`` seconds.

    Monte Carlo records hold integers.  Expected-value records (see
    :func:`expected_records`) may hold fractional counts.
    """

    setting: Setting
    duration: float
    n_signal: int
    n_idler: int
    n_coinc: int

    def __post_init__(self):
        if isinstance(self.setting, str) and not is_basis_tag(self.setting):
            raise ValueError(f"unknown basis tag {self.setting!r}")
        if not self.duration >= 0:
            raise ValueError(f"duration must be >= 0, got {self.duration}")
        for name in ("n_signal", "n_idler", "n_coinc"):
            val = getattr(self, name)
            if not val >= 0 or not math.isfinite(val):
                raise ValueError(f"{name} must be a finite non-negative count, got {val}")
            if float(val).is_integer():
                object.__setattr__(self, name, int(val))

    @property
    def label(self) -> str:
        return self.setting if isinstance(self.setting, str) else self.setting.label

    def scaled(self, factor: int) -> "CountRecord":
        return CountRecord(self.setting, self.duration, self.n_signal * factor,
                           self.n_idler * factor, self.n_coinc * factor)


class RateTriple(NamedTuple):
    """Singles and coincidence rates in counts/s.

    ``resolved`` holds the computational-basis sub-rates, keyed ``"H_s"``,
    ``"V_s"``, ``"H_i"``, ``"V_i"`` and ``"H_sH_i"`` ... ``"V_sV_i"``.
    """

    n_signal: float
    n_idler: float
    coinc: float
    resolved: dict | None = None


def setting_vectors(setting: Setting) -> tuple[np.ndarray, np.ndarray] | None:
    """Analyzer states ``(psi_s, psi_i)``; ``None`` for the open computational setting."""
    if isinstance(setting, AnalyzerSetting):
        return setting.states()
    if setting == COMPUTATIONAL:
        return None
    if is_basis_tag(setting):
        return BASIS_VECTORS[setting[0]], BASIS_VECTORS[setting[1]]
    raise ValueError(f"unknown setting {setting!r}")


def setting_thetas(setting: Setting) -> tuple[float, float]:
    if isinstance(setting, AnalyzerSetting):
        return setting.theta_s, setting.theta_i
    if setting == COMPUTATIONAL:
        return math.nan, math.nan
    return _LETTER_THETA.get(setting[0], math.nan), _LETTER_THETA.get(setting[1], math.nan)


def _rho_matrix(rho) -> np.ndarray:
    return rho.dm() if isinstance(rho, PolState) else np.asarray(rho, dtype=complex)


def fringe_probability(rho, theta_s: float, theta_i: float) -> float:
    """Joint projection probability onto the two Bloch-plane analyzer states."""
    return float(_pair_probabilities(_rho_matrix(rho), [AnalyzerSetting(theta_s, theta_i)])[0])


def _pair_probabilities(rho: np.ndarray, settings: Sequence[Setting]) -> np.ndarray:
    vecs = np.array([np.kron(*setting_vectors(s)) for s in settings])
    return _kernels.projector_probabilities(rho, vecs)


def expected_rates(cfg: SourceConfig, accidentals: bool = True, rho=None) -> RateTriple:
    """Computational-basis totals ``N_s``, ``N_i``, ``C`` for ``cfg``.

    The basis-resolved split assumes two detectors per arm (behind a PBS)
    sharing the arm's dark rate equally.
    """
    mu = cfg.pair_rate
    tau = cfg.coincidence_window if accidentals else 0.0
    m = _rho_matrix(noisy_state(cfg) if rho is None else rho)
    diag = np.clip(np.diag(m).real, 0.0, None)
    p_s = np.array([diag[0] + diag[1], diag[2] + diag[3]])
    p_i = np.array([diag[0] + diag[2], diag[1] + diag[3]])
    n_s = mu * cfg.eta_signal * p_s + cfg.dark_signal / 2
    n_i = mu * cfg.eta_idler * p_i + cfg.dark_idler / 2
    resolved = {"H_s": n_s[0], "V_s": n_s[1], "H_i": n_i[0], "V_i": n_i[1]}
    for a, la in enumerate("HV"):
        for b, lb in enumerate("HV"):
            pair = mu * cfg.eta_signal * cfg.eta_idler * diag[2 * a + b]
            resolved[f"{la}_s{lb}_i"] = pair + n_s[a] * n_i[b] * tau
    n_signal = mu * cfg.eta_signal + cfg.dark_signal
    n_idler = mu * cfg.eta_idler + cfg.dark_idler
    coinc = mu * cfg.eta_signal * cfg.eta_idler + n_signal * n_idler * tau
    return RateTriple(n_signal, n_idler, coinc, resolved)


def setting_rates(cfg: SourceConfig, settings: Sequence[Setting], rho=None,
                  accidentals: bool = True) -> np.ndarray:
    """Mean rates ``(N_s, N_i, C)`` per setting, shape ``(len(settings), 3)``."""
    m = _rho_matrix(noisy_state(cfg) if rho is None else rho)
    mu = cfg.pair_rate
    tau = cfg.coincidence_window if accidentals else 0.0
    state = PolState.mixed(m, (2, 2))
    rho_s = partial_trace(state, [0]).data
    rho_i = partial_trace(state, [1]).data
    out = np.empty((len(settings), 3))
    analyzed = [k for k, s in enumerate(settings) if setting_vectors(s) is not None]
    if analyzed:
        sub = [settings[k] for k in analyzed]
        joint = _pair_probabilities(m, sub)
        vs = np.array([setting_vectors(s)[0] for s in sub])
        vi = np.array([setting_vectors(s)[1] for s in sub])
        ps = _kernels.projector_probabilities(rho_s, vs)
        pi = _kernels.projector_probabilities(rho_i, vi)
        n_s = mu * cfg.eta_signal * ps + cfg.dark_signal
        n_i = mu * cfg.eta_idler * pi + cfg.dark_idler
        c = mu * cfg.eta_signal * cfg.eta_idler * joint + n_s * n_i * tau
        out[analyzed] = np.column_stack([n_s, n_i, c])
    totals = expected_rates(cfg, accidentals=accidentals, rho=m)
    for k, s in enumerate(settings):
        if setting_vectors(s) is None:
            out[k] = totals[:3]
    return out


# -- estimators --------------------------------------------------------------

def heralding(coinc: float, n_herald: float) -> float:
    """Heralding efficiency ``C / N`` of the arm opposite the herald detector."""
    if n_herald <= 0:
        raise ZeroDivisionError("heralding efficiency undefined for zero singles")
    return coinc / n_herald


def pgr(n_signal: float, n_idler: float, coinc: float) -> float:
    """Pair generation rate ``N_s N_i / C``."""
    if coinc <= 0:
        raise ZeroDivisionError("PGR undefined for zero coincidences")
    return n_signal * n_idler / coinc


def symmetric_heralding(coinc: float, pair_rate: float) -> float:
    """Heralding efficiency assuming equal arms, ``sqrt(C / PGR)``."""
    if pair_rate <= 0:
        raise ZeroDivisionError("symmetric heralding undefined for zero PGR")
    return math.sqrt(coinc / pair_rate)


# -- Monte Carlo -------------------------------------------------------------

def simulate_counts(cfg: SourceConfig, settings: Sequence[Setting], duration: float, seed: int,
                    rho=None, threads: int | None = None) -> list[CountRecord]:
    """Independent Poisson draws of singles and coincidences for each setting.

    Setting ``k`` draws from its own substream of ``seed``, so the output does
    not depend on the thread count.
    """
    settings = list(settings)
    if not settings:
        raise ValueError("no settings to simulate")
    if not duration >= 0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    means = setting_rates(cfg, settings, rho=rho) * duration

    def draw(k):
        n = substream(seed, k).poisson(means[k])
        return CountRecord(settings[k], duration, *(int(v) for v in n))

    return pmap(draw, range(len(settings)), threads)


def expected_records(cfg: SourceConfig, settings: Sequence[Setting], duration: float,
                     rho=None, accidentals: bool = True) -> list[CountRecord]:
    """Noise-free records whose counts equal the Poisson means."""
    means = setting_rates(cfg, settings, rho=rho, accidentals=accidentals) * duration
    return [CountRecord(s, duration, *(float(v) for v in m)) for s, m in zip(settings, means)]


# -- fits --------------------------------------------------------------------

class LinearFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def linear_fit(xs, ys) -> LinearFit:
    """Ordinary least-squares line with coefficient of determination."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size != y.size or x.size < 2:
        raise ValueError("need at least two (x, y) pairs")
    dx = x - x.mean()
    sxx = dx @ dx
    if sxx == 0:
        raise ValueError("all x values identical")
    slope = (dx @ (y - y.mean())) / sxx
    intercept = y.mean() - slope * x.mean()
    ss_res = np.sum((y - slope * x - intercept) ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return LinearFit(float(slope), float(intercept), float(r2))


FRINGE_PERIOD = {"bloch": 360.0, "polarizer": 180.0, "hwp": 90.0}


class SinFit(NamedTuple):
    c_max: float
    c_min: float
    phase: float
    visibility: float
    period: float

    def predict(self, angles) -> np.ndarray:
        a = np.asarray(angles, dtype=float)
        offset = 0.5 * (self.c_max + self.c_min)
        amp = 0.5 * (self.c_max - self.c_min)
        return offset + amp * np.cos(2 * np.pi * (a - self.phase) / self.period)


def sin_fit(angles, counts, convention: str = "bloch") -> SinFit:
    """Fit ``A + B cos(2 pi (theta - theta0) / period)`` to a two-photon fringe.

    The period follows from the angle convention (360 deg Bloch, 180 deg
    polarizer, 90 deg HWP).  Linear least squares on (A, B cos, B sin), then
    one Gauss-Newton step on (A, B, theta0).
    """
    try:
        period = FRINGE_PERIOD[convention]
    except KeyError:
        raise ValueError(f"unknown angle convention {convention!r}") from None
    th = np.asarray(angles, dtype=float)
    y = np.asarray(counts, dtype=float)
    if th.shape != y.shape or th.ndim != 1:
        raise ValueError("angles and counts must be 1-d arrays of equal length")
    if np.unique(th).size < 4:
        raise ValueError("need at least 4 distinct angles")
    w = 2 * np.pi / period
    design = np.column_stack([np.ones_like(th), np.cos(w * th), np.sin(w * th)])
    if np.linalg.matrix_rank(design) < 3:
        raise ValueError("degenerate design matrix: angles do not resolve the fringe")
    (a0, ac, as_), *_ = np.linalg.lstsq(design, y, rcond=None)
    amp = math.hypot(ac, as_)
    theta0 = math.atan2(as_, ac) / w

    phi = w * (th - theta0)
    resid = y - (a0 + amp * np.cos(phi))
    jac = np.column_stack([np.ones_like(th), np.cos(phi), amp * w * np.sin(phi)])
    step, *_ = np.linalg.lstsq(jac, resid, rcond=None)
    a0, amp, theta0 = a0 + step[0], amp + step[1], theta0 + step[2]
    if amp < 0:
        amp, theta0 = -amp, theta0 + period / 2
    theta0 = float(np.mod(theta0, period))
    c_max, c_min = a0 + amp, a0 - amp
    vis = amp / a0 if a0 != 0 else math.nan
    return SinFit(float(c_max), float(c_min), theta0, float(vis), period)


def visibility(c_max: float, c_min: float) -> float:
    return (c_max - c_min) / (c_max + c_min)


# -- CSV ---------------------------------------------------------------------

def _fmt(x: float) -> str:
    return "" if isinstance(x, float) and math.isnan(x) else repr(float(x))


def _count(n) -> str:
    return str(n) if isinstance(n, int) else repr(float(n))


def _parse_count(text: str):
    return float(text) if any(c in text for c in ".eEn") else int(text)


def records_to_csv(records: Iterable[CountRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        ts, ti = setting_thetas(r.setting)
        writer.writerow([r.label, _fmt(ts), _fmt(ti), repr(float(r.duration)),
                         _count(r.n_signal), _count(r.n_idler), _count(r.n_coinc)])
    return buf.getvalue()


def records_from_csv(text: str) -> list[CountRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV columns {reader.fieldnames}")
    out = []
    for row in reader:
        label = row["setting_label"]
        if is_basis_tag(label):
            setting: Setting = label
        else:
            setting = AnalyzerSetting(float(row["theta_s_deg"]), float(row["theta_i_deg"]), label)
        out.append(CountRecord(setting, float(row["duration_s"]), _parse_count(row["n_signal"]),
                               _parse_count(row["n_idler"]), _parse_count(row["n_coinc"])))
    return out


def write_records_csv(path, records: Iterable[CountRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(records_to_csv(records))


def read_records_csv(path) -> list[CountRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        return records_from_csv(fh.read())
