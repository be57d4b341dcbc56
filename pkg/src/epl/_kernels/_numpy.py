"""Vectorized numpy implementations of the hot kernels."""
import numpy as np

from ._layout import DIAG, OFF_ROW, OFF_COL, N_PARAMS


def params_to_t(params):
    t = np.zeros((4, 4), dtype=np.complex128)
    t[DIAG, DIAG] = params[:4]
    t[OFF_ROW, OFF_COL] = params[4::2] + 1j * params[5::2]
    return t


def projector_probabilities(rho, vecs):
    return np.einsum("ka,ab,kb->k", vecs.conj(), rho, vecs).real


def _coefficients(vecs):
    """``C[k, a, j] = d(T v_k)_a / d params_j``; ``T v_k`` is linear in the parameters."""
    c = np.zeros((vecs.shape[0], 4, N_PARAMS), dtype=np.complex128)
    c[:, DIAG, DIAG] = vecs[:, DIAG]
    m = np.arange(OFF_ROW.size)
    c[:, OFF_ROW, 4 + 2 * m] = vecs[:, OFF_COL]
    c[:, OFF_ROW, 5 + 2 * m] = 1j * vecs[:, OFF_COL]
    return c


def mle_terms(params, vecs, durations, counts):
    c = _coefficients(vecs)
    u = c @ params
    lam = durations * np.einsum("ka,ka->k", u.conj(), u).real
    hit = counts > 0
    if np.any(lam[hit] <= 0.0):
        zero = np.zeros((N_PARAMS, N_PARAMS))
        return -np.inf, np.zeros(N_PARAMS), zero, zero
    # relative to the saturated model (lam = n) to keep precision at large counts
    loglik = np.sum(counts[hit] * np.log(lam[hit] / counts[hit])) + np.sum(counts - lam)

    jac = 2.0 * durations[:, None] * np.einsum("ka,kaj->kj", u.conj(), c).real
    safe = np.maximum(lam, 1e-300)
    resid = counts / safe - 1.0
    grad = jac.T @ resid
    fisher = (jac / safe[:, None]).T @ jac
    # observed information: -Hessian of the log-likelihood
    second = 2.0 * np.einsum("k,kai,kaj->ij", resid * durations, c.conj(), c).real
    observed = (jac * (counts / safe**2)[:, None]).T @ jac - second
    return float(loglik), grad, fisher, observed


def correlation_batch(coinc):
    """``coinc[..., 4]`` ordered (++, --, +-, -+) -> correlation values."""
    num = coinc[..., 0] + coinc[..., 1] - coinc[..., 2] - coinc[..., 3]
    den = coinc.sum(axis=-1)
    out = np.zeros(num.shape)
    np.divide(num, den, out=out, where=den > 0)
    return out
