"""Two-qubit polarization state tomography.

Measurements are product projections ``|m_s> x |m_i>`` onto the six
polarization states H, V, D, A, R, L.  Each analyzer is a QWP, then a HWP,
then a polarizer transmitting H, so the selected state is
``(HWP(h) QWP(q))^dag |H>``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .. import _kernels
from ..counts import CountRecord, setting_vectors
from ..polcalc import X, Y, Z, I2, PolState, bell, fidelity, hwp, purity, qwp
from .resample import bootstrap

MAX_ITER = 5000
TOL = 1e-9

# (QWP, HWP) angles in degrees selecting each polarization
WAVEPLATES = {
    "H": (0.0, 0.0),
    "V": (0.0, 45.0),
    "D": (45.0, 22.5),
    "A": (45.0, 67.5),
    "R": (0.0, 22.5),
    "L": (0.0, 67.5),
}
JAMES_16 = ("HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH",
            "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL")

_PAULI = (I2, X, Y, Z)
_PAULI2 = np.array([np.kron(a, b) for a in _PAULI for b in _PAULI])


class NonConvergenceError(RuntimeError):
    pass


def analyzer_from_waveplates(qwp_deg: float, hwp_deg: float) -> np.ndarray:
    """State transmitted by QWP -> HWP -> H polarizer."""
    return (hwp(hwp_deg) @ qwp(qwp_deg)).conj().T @ np.array([1, 0], dtype=complex)


@dataclass(frozen=True)
class TomoSetting:
    label: str
    qwp_s: float
    hwp_s: float
    qwp_i: float
    hwp_i: float

    @property
    def vector(self) -> np.ndarray:
        return np.kron(analyzer_from_waveplates(self.qwp_s, self.hwp_s),
                       analyzer_from_waveplates(self.qwp_i, self.hwp_i))

    @property
    def projector(self) -> np.ndarray:
        v = self.vector
        return np.outer(v, v.conj())


def tomo_settings(n: int = 36) -> list[TomoSetting]:
    """The 36 product settings (or the 16-setting subset of James et al.)."""
    if n == 36:
        labels = [a + b for a in "HVDARL" for b in "HVDARL"]
    elif n == 16:
        labels = list(JAMES_16)
    else:
        raise ValueError("tomography uses 16 or 36 settings")
    return [TomoSetting(lab, *WAVEPLATES[lab[0]], *WAVEPLATES[lab[1]]) for lab in labels]


def _design(records: Sequence[CountRecord]):
    vecs, durations, counts = [], [], []
    for r in records:
        pair = setting_vectors(r.setting)
        if pair is None:
            raise ValueError("open (computational) records carry no tomographic information")
        vecs.append(np.kron(*pair))
        durations.append(r.duration)
        counts.append(r.n_coinc)
    vecs = np.array(vecs)
    durations = np.array(durations, dtype=float)
    counts = np.array(counts, dtype=float)
    # row k: t_k Tr(M_k sigma_ab) / 4, real because both operators are Hermitian
    a = np.einsum("ka,pab,kb->kp", vecs.conj(), _PAULI2, vecs).real * durations[:, None] / 4
    return vecs, durations, counts, a


def _check_complete(a: np.ndarray) -> None:
    if np.linalg.matrix_rank(a) < 16:
        raise ValueError("measurement settings are not informationally complete")


class Inversion(NamedTuple):
    rho: np.ndarray
    physical: bool
    min_eigenvalue: float


def linear_inversion(records: Sequence[CountRecord]) -> Inversion:
    """Least-squares inversion in the Pauli basis; Hermitian with unit trace, maybe not PSD."""
    _, _, counts, a = _design(records)
    _check_complete(a)
    if counts.sum() <= 0:
        raise ValueError("all coincidence counts are zero")
    x, *_ = np.linalg.lstsq(a, counts, rcond=None)
    if x[0] <= 0:
        raise ValueError("inversion gives non-positive total intensity")
    rho = np.einsum("p,pab->ab", x / x[0], _PAULI2) / 4
    rho = 0.5 * (rho + rho.conj().T)
    lam = float(np.linalg.eigvalsh(rho).min())
    return Inversion(rho, lam >= -1e-10, lam)


def psd_projection(rho: np.ndarray, floor: float = 0.0) -> np.ndarray:
    """Nearest unit-trace PSD matrix by eigenvalue clipping, optionally mixed with ``floor * I``."""
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    w = np.clip(w, 0.0, None)
    out = (v * w) @ v.conj().T
    out /= np.trace(out).real
    if floor:
        out = (1 - floor) * out + floor * np.eye(len(out)) / len(out)
    return out


def _params_from_rho(rho: np.ndarray, scale: float) -> np.ndarray:
    t = np.linalg.cholesky(scale * rho).conj().T  # upper triangular, T^dag T = scale * rho
    p = np.empty(_kernels.N_PARAMS)
    p[:4] = np.diag(t).real
    iu = np.triu_indices(4, 1)
    p[4::2] = t[iu].real
    p[5::2] = t[iu].imag
    return p


def _rho_from_params(params: np.ndarray) -> np.ndarray:
    t = _kernels.params_to_t(params)
    m = t.conj().T @ t
    m = 0.5 * (m + m.conj().T)
    return m / np.trace(m).real


@dataclass(eq=False)
class TomoResult:
    rho: PolState
    fidelity_to_target: float
    purity: float
    log_likelihood: float
    iterations: int
    converged: bool
    target: str = "Phi+"
    fidelity_sigma: float | None = None
    history: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        m = self.rho.data
        return {
            "rho": [[[float(m[r, c].real), float(m[r, c].imag)] for c in range(4)] for r in range(4)],
            "target": self.target,
            "fidelity_to_target": self.fidelity_to_target,
            "fidelity_sigma": self.fidelity_sigma,
            "purity": self.purity,
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "TomoResult":
        m = np.array([[complex(re, im) for re, im in row] for row in d["rho"]])
        return cls(PolState.mixed(m, (2, 2)), d["fidelity_to_target"], d["purity"], d["log_likelihood"],
                   d["iterations"], d["converged"], d["target"], d["fidelity_sigma"])

    @classmethod
    def from_json(cls, text: str) -> "TomoResult":
        return cls.from_dict(json.loads(text))


def _initial_rho(init, records) -> np.ndarray:
    if init is None or (isinstance(init, str) and init == "mixed"):
        return np.eye(4, dtype=complex) / 4
    if isinstance(init, str) and init == "linear":
        return psd_projection(linear_inversion(records).rho, floor=1e-4)
    if isinstance(init, str):
        raise ValueError(f"unknown init {init!r}")
    m = init.dm() if isinstance(init, PolState) else np.asarray(init, dtype=complex)
    return psd_projection(m, floor=1e-4)


def mle_reconstruct(records: Sequence[CountRecord], init=None, target: str = "Phi+",
                    max_iter: int = MAX_ITER, tol: float = TOL, n_bootstrap: int = 0,
                    seed: int = 0, threads: int | None = None) -> TomoResult:
    """Maximum-likelihood density matrix from coincidence counts.

    The state is ``T^dag T / Tr(T^dag T)`` with ``T`` upper triangular (16
    real parameters; the unnormalized trace carries the count intensity).
    The Poisson log-likelihood ``sum(n log lam - lam)`` is maximized by
    Levenberg-Marquardt steps on the observed information (exact, since the
    rates are quadratic in the parameters), damped along the Fisher diagonal;
    only steps that increase the likelihood are accepted.  The run
    stops when an accepted step gains less than ``tol`` or after
    ``max_iter`` iterations.

    ``init`` is ``None``/``"mixed"`` (I/4), ``"linear"`` (linear inversion)
    or a density matrix.  With ``n_bootstrap > 0`` the fidelity gets a
    Poisson-bootstrap standard deviation.
    """
    vecs, durations, counts, a = _design(records)
    _check_complete(a)
    if counts.sum() <= 0:
        raise ValueError("all coincidence counts are zero")
    params, ll, history, it, converged = _maximize(vecs, durations, counts, _initial_rho(init, records),
                                                   max_iter, tol)
    offset = _kernels.saturated_loglik(counts)
    ll, history = ll + offset, [h + offset for h in history]
    rho = PolState.mixed(_rho_from_params(params), (2, 2))
    ref = bell(target)
    result = TomoResult(rho, fidelity(rho, ref), purity(rho), ll, it, converged, target, history=history)
    if n_bootstrap:
        warm = rho.data

        def est(recs):
            v2, t2, n2, _ = _design(recs)
            p2, *_ = _maximize(v2, t2, n2, warm, max_iter, tol)
            return fidelity(PolState.mixed(_rho_from_params(p2), (2, 2)), ref)

        _, result.fidelity_sigma = bootstrap(records, est, n_resamples=n_bootstrap, seed=seed, threads=threads)
    return result


def _damped_step(observed, scale, grad, damping):
    """Solve ``(observed + damping * diag(scale)) step = grad``; ``None`` if not positive definite."""
    try:
        c = np.linalg.cholesky(observed + np.diag(damping * scale))
    except np.linalg.LinAlgError:
        return None
    return np.linalg.solve(c.T, np.linalg.solve(c, grad))


def _maximize(vecs, durations, counts, rho0, max_iter, tol):
    expected = _kernels.projector_probabilities(rho0, vecs) * durations
    params = _params_from_rho(rho0, counts.sum() / expected.sum())
    ll, grad, fisher, observed = _kernels.mle_terms(params, vecs, durations, counts)
    history = [ll]
    damping = 1e-3
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        scale = np.diag(fisher) + 1e-14 * max(np.diag(fisher).max(), 1e-300)
        step = _damped_step(observed, scale, grad, damping)
        while step is None and damping < 1e12:
            damping *= 10.0
            step = _damped_step(observed, scale, grad, damping)
        accepted = False
        if step is not None:
            trial = params + step
            ll_new, g_new, f_new, o_new = _kernels.mle_terms(trial, vecs, durations, counts)
            accepted = ll_new > ll
        if accepted:
            gain = ll_new - ll
            params, ll, grad, fisher, observed = trial, ll_new, g_new, f_new, o_new
            history.append(ll)
            damping = max(damping / 3.0, 1e-12)
            if gain < tol:
                converged = True
                break
        else:
            damping *= 10.0
            if damping > 1e12:
                # no ascent direction left at double precision
                converged = True
                break
    return params, ll, history, it, converged
