"""Hot numeric kernels.

The numba implementations are used when numba imports and the environment
variable ``EPL_DISABLE_NUMBA`` is unset (or ``0``); otherwise the vectorized
numpy versions are used.  Both backends are importable directly as
``_numpy`` and ``_numba`` for comparison.
"""
import os

import numpy as np

from . import _numpy
from ._layout import N_PARAMS

_disabled = os.environ.get("EPL_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError("disabled by EPL_DISABLE_NUMBA")
    from . import _numba as _backend
    BACKEND = "numba"
except ImportError:
    _backend = _numpy
    BACKEND = "numpy"


def projector_probabilities(rho, vecs):
    """``Re <v_k| rho |v_k>`` for each row of ``vecs``."""
    return _backend.projector_probabilities(
        np.ascontiguousarray(rho, dtype=np.complex128), np.ascontiguousarray(vecs, dtype=np.complex128)
    )


def mle_terms(params, vecs, durations, counts):
    """Poisson log-likelihood, gradient, expected Fisher matrix and observed information in ``T`` parameters.

    The log-likelihood is relative to the saturated model, ``sum(n log(lam/n) - (lam - n))``;
    add :func:`saturated_loglik` for the plain ``sum(n log lam - lam)``.
    """
    loglik, grad, fisher, observed = _backend.mle_terms(
        np.ascontiguousarray(params, dtype=np.float64),
        np.ascontiguousarray(vecs, dtype=np.complex128),
        np.ascontiguousarray(durations, dtype=np.float64),
        np.ascontiguousarray(counts, dtype=np.float64),
    )
    return float(loglik), grad, fisher, observed


def saturated_loglik(counts):
    counts = np.asarray(counts, dtype=np.float64)
    hit = counts > 0
    return float(np.sum(counts[hit] * np.log(counts[hit])) - counts.sum())


def params_to_t(params):
    return _numpy.params_to_t(np.asarray(params, dtype=np.float64))


def correlation_batch(coinc):
    return _backend.correlation_batch(np.ascontiguousarray(coinc, dtype=np.float64))


__all__ = ["BACKEND", "N_PARAMS", "projector_probabilities", "mle_terms", "saturated_loglik", "params_to_t", "correlation_batch"]
