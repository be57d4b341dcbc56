"""Deterministic experiment campaigns and their output files.

Every campaign returns an :class:`Artifacts` bundle (file name -> text plus a
summary dict); :func:`emit_figure_data` writes it.  Randomness comes only
from the config seed, split per sweep point with ``child_seed``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import counts as cn
from .._parallel import child_seed, pmap
from ..analysis import chsh as chsh_mod
from ..analysis.tomography import NonConvergenceError, linear_inversion, mle_reconstruct, tomo_settings
from ..polcalc import AnalyzerSetting, bell, fidelity, from_bloch, to_bloch
from ..source import accidental_rate, noisy_state
from .. import teleport as tp
from .config import PAPER_POWERS_MW, CampaignConfig, ConfigError

BASIS_LABELS = ("HH", "HV", "VH", "VV")


@dataclass
class Artifacts:
    files: dict[str, str] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TableRow:
    pgr_per_mw: float
    coincidence_per_mw: float
    fidelity: float
    symmetric_heralding: float

    def __post_init__(self):
        expected = math.sqrt(self.coincidence_per_mw / self.pgr_per_mw)
        if abs(self.symmetric_heralding - expected) > 1e-12:
            raise ValueError("symmetric_heralding must equal sqrt(coincidence / PGR)")

    @classmethod
    def build(cls, pgr_per_mw, coincidence_per_mw, fid):
        return cls(float(pgr_per_mw), float(coincidence_per_mw), float(fid),
                   math.sqrt(coincidence_per_mw / pgr_per_mw))


# -- text formats ------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def table_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def read_table(text: str) -> tuple[list[str], list[list]]:
    """Parse a table written by :func:`table_csv`; numeric cells become floats."""
    rows = list(csv.reader(io.StringIO(text)))

    def conv(v):
        try:
            return float(v)
        except ValueError:
            return v

    return rows[0], [[conv(v) for v in r] for r in rows[1:]]


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _theta_grid(grid) -> list[float]:
    if isinstance(grid, dict):
        start, stop, step = grid["start"], grid["stop"], grid["step"]
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + k * step for k in range(n)]
    return [float(v) for v in grid]


# -- campaigns ---------------------------------------------------------------

def _sweep(cc: CampaignConfig, powers, duration):
    def point(k):
        cfg = cc.source.replace(pump_power=powers[k])
        return cn.simulate_counts(cfg, [cn.COMPUTATIONAL], duration, child_seed(cc.seed, k), threads=1)[0]

    return pmap(point, range(len(powers)))


def run_rates_sweep(cc: CampaignConfig) -> Artifacts:
    powers = [float(p) for p in cc.params["powers_mw"]]
    duration = float(cc.params["duration_s"])
    records = _sweep(cc, powers, duration)
    ns = np.array([r.n_signal for r in records]) / duration
    ni = np.array([r.n_idler for r in records]) / duration
    c = np.array([r.n_coinc for r in records]) / duration
    eta_s = np.divide(c, ni, out=np.zeros_like(c), where=ni > 0)
    eta_i = np.divide(c, ns, out=np.zeros_like(c), where=ns > 0)
    pgr = np.divide(ns * ni, c, out=np.zeros_like(c), where=c > 0)
    fit_c = cn.linear_fit(powers, c)
    fit_pgr = cn.linear_fit(powers, pgr)
    art = Artifacts()
    art.files["records.csv"] = cn.records_to_csv(records)
    art.files["fig2a.csv"] = table_csv(("power_mw", "n_signal", "n_idler", "coincidence"), zip(powers, ns, ni, c))
    art.files["fig2b.csv"] = table_csv(("power_mw", "eta_signal", "eta_idler"), zip(powers, eta_s, eta_i))
    art.files["fig2c.csv"] = table_csv(("power_mw", "pgr"), zip(powers, pgr))
    art.summary = {
        "experiment": "rates-sweep",
        "powers_mw": powers,
        "duration_s": duration,
        "coincidence_fit": fit_c._asdict(),
        "pgr_fit": fit_pgr._asdict(),
    }
    art.files["summary.json"] = dump_json(art.summary)
    return art


def run_fringe(cc: CampaignConfig) -> Artifacts:
    conv = cc.params["angle_convention"]
    ths = [float(v) for v in cc.params["theta_s"]]
    thi = _theta_grid(cc.params["theta_i"])
    duration = float(cc.params["duration_s"])
    settings = [AnalyzerSetting.from_convention(s, i, conv) for s in ths for i in thi]
    records = cn.simulate_counts(cc.source, settings, duration, child_seed(cc.seed, 0))
    means = cn.setting_rates(cc.source, settings)[:, 2] * duration
    rows, fits = [], []
    for a, s in enumerate(ths):
        block = records[a * len(thi):(a + 1) * len(thi)]
        coinc = [r.n_coinc for r in block]
        fit = cn.sin_fit(thi, coinc, conv)
        exact = cn.sin_fit(thi, means[a * len(thi):(a + 1) * len(thi)], conv)
        fits.append({"theta_s": s, "visibility": fit.visibility, "c_max": fit.c_max, "c_min": fit.c_min,
                     "phase": fit.phase, "analytic_visibility": exact.visibility})
        rows.extend(zip([s] * len(thi), thi, coinc, fit.predict(thi)))
    art = Artifacts()
    art.files["records.csv"] = cn.records_to_csv(records)
    art.files["fig3c.csv"] = table_csv(("theta_s", "theta_i", "coincidence", "fit_value"), rows)
    art.summary = {"experiment": "fringe", "angle_convention": conv, "duration_s": duration, "fringes": fits}
    art.files["fringe.json"] = dump_json(art.summary)
    return art


def _matrix_csv(m) -> str:
    return table_csv(("row", *BASIS_LABELS), ([lab, *row] for lab, row in zip(BASIS_LABELS, m)))


def run_tomo(cc: CampaignConfig) -> Artifacts:
    p = cc.params
    settings = [s.label for s in tomo_settings(p.get("n_settings", 36))]
    duration = float(p["duration_s"])
    records = cn.simulate_counts(cc.source, settings, duration, child_seed(cc.seed, 0))
    result = mle_reconstruct(records, init=p.get("init", "mixed"), target=p.get("target", "Phi+"),
                             max_iter=p.get("max_iter", 5000), n_bootstrap=p.get("n_bootstrap", 0),
                             seed=child_seed(cc.seed, 1))
    if not result.converged:
        raise NonConvergenceError(f"MLE did not converge in {result.iterations} iterations")
    model = noisy_state(cc.source)
    inv = linear_inversion(records)
    art = Artifacts()
    art.files["records.csv"] = cn.records_to_csv(records)
    art.files["fig3a.csv"] = _matrix_csv(result.rho.data.real)
    art.files["fig3b.csv"] = _matrix_csv(result.rho.data.imag)
    doc = result.to_dict()
    doc["model_fidelity"] = fidelity(model, bell(result.target))
    doc["linear_inversion_physical"] = bool(inv.physical)
    art.files["tomo.json"] = dump_json(doc)
    art.summary = {"experiment": "tomo", "fidelity": result.fidelity_to_target,
                   "fidelity_sigma": result.fidelity_sigma, "purity": result.purity,
                   "iterations": result.iterations, "model_fidelity": doc["model_fidelity"]}
    return art


def run_chsh(cc: CampaignConfig) -> Artifacts:
    p = cc.params
    conv = p["angle_convention"]
    rho = noisy_state(cc.source)
    if p["angles"] == "optimize":
        angles = chsh_mod.optimize_angles(rho).angles
    else:
        angles = tuple(float(to_bloch(a, conv)) for a in p["angles"])
    duration = float(p["duration_s"])
    records = cn.simulate_counts(cc.source, chsh_mod.chsh_settings(angles), duration, child_seed(cc.seed, 0))
    res = chsh_mod.measure_chsh(records, angles, n_resamples=p.get("n_bootstrap", 1000), seed=child_seed(cc.seed, 1))
    doc = res.to_dict()
    doc["angle_convention"] = conv
    doc["angles"] = [float(from_bloch(a, conv)) for a in angles]
    doc["analytic_S"] = chsh_mod.chsh_S(rho, angles).S
    doc["predicted_sigma"] = chsh_mod.predicted_sigma(cc.source, duration, angles)
    art = Artifacts()
    art.files["records.csv"] = cn.records_to_csv(records)
    art.files["chsh.json"] = dump_json(doc)
    art.summary = {"experiment": "chsh", **doc}
    return art


def _teleport_inputs(items):
    out = []
    for it in items:
        out.append(it if isinstance(it, str) else (float(it["hwp_deg"]), float(it["qwp_deg"])))
    return tuple(out)


def run_teleport(cc: CampaignConfig) -> Artifacts:
    p = cc.params
    inputs = _teleport_inputs(p["inputs"])
    convention = p.get("convention", "standard")
    if "bsm_visibility" in p and "calibrate_to" in p:
        raise ConfigError("give either bsm_visibility or calibrate_to, not both", "$.teleport")
    if "calibrate_to" in p:
        try:
            v = tp.calibrate_visibility(cc.source, p["calibrate_to"], inputs, convention)
        except ValueError as exc:
            raise ConfigError(str(exc), "$.teleport.calibrate_to") from None
    else:
        v = float(p.get("bsm_visibility", 1.0))
    tcfg = tp.TeleportConfig(cc.source, inputs, v, convention)
    try:
        report = tp.run_teleport(tcfg)
    except tp.TeleportConfigError as exc:
        raise ConfigError(str(exc), "$.teleport") from None
    art = Artifacts()
    art.files["fig4.csv"] = report.to_csv()
    doc = report.to_dict()
    if "monte_carlo" in p:
        mc = p["monte_carlo"]
        counts, means = tp.simulate_teleport_counts(tcfg, mc["event_rate"], mc["duration_s"], child_seed(cc.seed, 0))
        rows = []
        for k, name in enumerate(report.inputs):
            for o, out in enumerate(report.outcomes):
                for b, basis in enumerate(tp.SIGNAL_BASES):
                    rows.append((name, out, basis, int(counts[k, o, b]), means[k, o, b]))
        art.files["teleport_counts.csv"] = table_csv(("input", "outcome", "signal_basis", "count", "mean"), rows)
        doc["monte_carlo_fidelities"] = np.nan_to_num(tp.fidelities_from_counts(counts, tcfg), nan=0.0).tolist()
    art.files["teleport.json"] = dump_json(doc)
    art.summary = {"experiment": "teleport", "bsm_visibility": v, "average_fidelity": report.average_fidelity}
    return art


def run_table_row(cc: CampaignConfig) -> Artifacts:
    p = cc.params
    powers = [float(x) for x in p.get("powers_mw", PAPER_POWERS_MW)]
    art = Artifacts()
    if "duration_s" in p:
        duration = float(p["duration_s"])
        records = _sweep(cc, powers, duration)
        art.files["records.csv"] = cn.records_to_csv(records)
        trip = np.array([[r.n_signal, r.n_idler, r.n_coinc] for r in records], dtype=float) / duration
    else:
        trip = np.array([cn.expected_rates(cc.source.replace(pump_power=x))[:3] for x in powers])
    c = trip[:, 2]
    if p.get("subtract_accidentals", True):
        c = c - accidental_rate(trip[:, 0], trip[:, 1], cc.source.coincidence_window)
    pgr = trip[:, 0] * trip[:, 1] / c
    row = TableRow.build(cn.linear_fit(powers, pgr).slope, cn.linear_fit(powers, c).slope,
                         fidelity(noisy_state(cc.source), bell("Phi+")))
    art.summary = {"experiment": "table-row", **row.__dict__}
    art.files["table_row.json"] = dump_json(row.__dict__)
    return art


RUNNERS = {
    "rates-sweep": run_rates_sweep,
    "fringe": run_fringe,
    "tomo": run_tomo,
    "chsh": run_chsh,
    "teleport": run_teleport,
    "table-row": run_table_row,
}


def run_campaign(cc: CampaignConfig) -> Artifacts:
    return RUNNERS[cc.experiment](cc)


def emit_figure_data(results: Artifacts, out_dir) -> list[Path]:
    """Write every artifact file (UTF-8, LF line endings) into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(results.files):
        path = out / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(results.files[name])
        written.append(path)
    return written
