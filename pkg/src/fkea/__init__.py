"""Scalable kernel-entropy diversity scores (VENDI, RKE) via random Fourier features."""

__version__ = "0.1.0"

from .entropy import (
    DiversityReport,
    EigenSpectrum,
    alpha_norm_score,
    eigenvalues_sym,
    fkea_rke,
    fkea_spectrum,
    fkea_vendi,
    renyi_entropy,
    score_bound,
    spectrum_error,
    theorem_bound,
    vendi_from_spectrum,
)
from .estimator import FKEA, ExactKernelEntropy
from .exceptions import (
    BasisMismatchError,
    CapacityError,
    DataError,
    EmptyAccumulatorError,
    FKEAError,
    FormatError,
    GenerationError,
    InputError,
    NumericError,
    NumericWarning,
)
from .kernel import GaussianKernelSpec, exact_gram, exact_rke, exact_spectrum, exact_vendi, gaussian_kernel, median_heuristic
from .modes import ModeBasis, ModeReport, mode_score, mode_scores, rank_modes, top_eigenvectors
from .rff import FourierBasis, ProxyCovariance, feature_map, merge, normalized_covariance, proxy_gram, sample_fourier_basis

__all__ = [
    "FKEA",
    "ExactKernelEntropy",
    "BasisMismatchError",
    "CapacityError",
    "DataError",
    "DiversityReport",
    "EigenSpectrum",
    "EmptyAccumulatorError",
    "FKEAError",
    "FormatError",
    "FourierBasis",
    "GaussianKernelSpec",
    "GenerationError",
    "InputError",
    "ModeBasis",
    "ModeReport",
    "NumericError",
    "NumericWarning",
    "ProxyCovariance",
    "alpha_norm_score",
    "eigenvalues_sym",
    "exact_gram",
    "exact_rke",
    "exact_spectrum",
    "exact_vendi",
    "feature_map",
    "fkea_rke",
    "fkea_spectrum",
    "fkea_vendi",
    "gaussian_kernel",
    "median_heuristic",
    "merge",
    "mode_score",
    "mode_scores",
    "normalized_covariance",
    "proxy_gram",
    "rank_modes",
    "renyi_entropy",
    "sample_fourier_basis",
    "score_bound",
    "spectrum_error",
    "theorem_bound",
    "top_eigenvectors",
    "vendi_from_spectrum",
]
