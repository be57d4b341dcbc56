"""Loop kernels compiled with numba (``nogil`` so campaign threads overlap)."""
import numpy as np
from numba import njit

from ._layout import OFF_ROW, OFF_COL, N_PARAMS

_ROW = OFF_ROW.copy()
_COL = OFF_COL.copy()


@njit(cache=True, nogil=True)
def params_to_t(params):
    t = np.zeros((4, 4), dtype=np.complex128)
    for j in range(4):
        t[j, j] = params[j]
    for m in range(6):
        t[_ROW[m], _COL[m]] = params[4 + 2 * m] + 1j * params[5 + 2 * m]
    return t


@njit(cache=True, nogil=True)
def projector_probabilities(rho, vecs):
    k_tot, d = vecs.shape
    out = np.empty(k_tot)
    for k in range(k_tot):
        acc = 0.0 + 0.0j
        for a in range(d):
            row = 0.0 + 0.0j
            for b in range(d):
                row += rho[a, b] * vecs[k, b]
            acc += np.conj(vecs[k, a]) * row
        out[k] = acc.real
    return out


@njit(cache=True, nogil=True)
def mle_terms(params, vecs, durations, counts):
    t = params_to_t(params)
    k_tot = vecs.shape[0]
    grad = np.zeros(N_PARAMS)
    fisher = np.zeros((N_PARAMS, N_PARAMS))
    observed = np.zeros((N_PARAMS, N_PARAMS))
    jac = np.empty(N_PARAMS)
    coef = np.zeros((4, N_PARAMS), dtype=np.complex128)
    u = np.empty(4, dtype=np.complex128)
    loglik = 0.0
    for k in range(k_tot):
        lam = 0.0
        for a in range(4):
            acc = 0.0 + 0.0j
            for b in range(a, 4):
                acc += t[a, b] * vecs[k, b]
            u[a] = acc
            lam += acc.real * acc.real + acc.imag * acc.imag
        lam *= durations[k]
        if counts[k] > 0.0:
            if lam <= 0.0:
                return -np.inf, np.zeros(N_PARAMS), np.zeros((N_PARAMS, N_PARAMS)), np.zeros((N_PARAMS, N_PARAMS))
            loglik += counts[k] * np.log(lam / counts[k])
        loglik += counts[k] - lam
        # coef[a, j] = d(T v)_a / d params_j
        for a in range(4):
            coef[a, a] = vecs[k, a]
        for m in range(6):
            coef[_ROW[m], 4 + 2 * m] = vecs[k, _COL[m]]
            coef[_ROW[m], 5 + 2 * m] = 1j * vecs[k, _COL[m]]
        for a in range(4):
            jac[a] = 2.0 * durations[k] * (np.conj(u[a]) * vecs[k, a]).real
        for m in range(6):
            g = np.conj(u[_ROW[m]]) * vecs[k, _COL[m]]
            jac[4 + 2 * m] = 2.0 * durations[k] * g.real
            jac[5 + 2 * m] = -2.0 * durations[k] * g.imag
        safe = max(lam, 1e-300)
        resid = counts[k] / safe - 1.0
        w_obs = counts[k] / (safe * safe)
        w_second = 2.0 * resid * durations[k]
        for p in range(N_PARAMS):
            grad[p] += resid * jac[p]
            jp = jac[p] / safe
            for q in range(N_PARAMS):
                fisher[p, q] += jp * jac[q]
                acc2 = 0.0
                for a in range(4):
                    acc2 += (np.conj(coef[a, p]) * coef[a, q]).real
                observed[p, q] += w_obs * jac[p] * jac[q] - w_second * acc2
        for a in range(4):
            for j in range(N_PARAMS):
                coef[a, j] = 0.0
    return loglik, grad, fisher, observed


@njit(cache=True, nogil=True)
def correlation_batch(coinc):
    flat = coinc.reshape(-1, 4)
    out = np.zeros(flat.shape[0])
    for r in range(flat.shape[0]):
        den = flat[r, 0] + flat[r, 1] + flat[r, 2] + flat[r, 3]
        if den > 0:
            out[r] = (flat[r, 0] + flat[r, 1] - flat[r, 2] - flat[r, 3]) / den
    return out.reshape(coinc.shape[:-1])
