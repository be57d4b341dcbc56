"""Entanglement verification: tomography, CHSH and bootstrap errors."""
from .chsh import (DEFAULT_ANGLES, ChshEstimator, ChshResult, chsh_E, chsh_S, chsh_from_records,
                   chsh_settings, max_S_bloch_plane, measure_chsh, optimize_angles, predicted_sigma)
from .resample import bootstrap
from .tomography import (NonConvergenceError, TomoResult, TomoSetting, linear_inversion, mle_reconstruct,
                         tomo_settings)

__all__ = [
    "DEFAULT_ANGLES", "ChshEstimator", "ChshResult", "chsh_E", "chsh_S", "chsh_from_records", "chsh_settings",
    "max_S_bloch_plane", "measure_chsh", "optimize_angles", "predicted_sigma", "bootstrap",
    "NonConvergenceError", "TomoResult", "TomoSetting", "linear_inversion", "mle_reconstruct", "tomo_settings",
]
