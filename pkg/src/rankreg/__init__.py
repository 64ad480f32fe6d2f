"""Robust similarity registration from outlier-contaminated correspondences.

Correspondences are ranked by pairwise scale consistency, 3-point samples
are visited in ascending rank-sum order, and each sample is prescreened by
triplet scale consistency before a closed-form fit is attempted.
"""
from .errors import (BadSpec, CoincidentPoints, DegenerateSample, EmptyRow,
                     InsufficientInliers, ParseError, RegistrationError)
from .geometry import (CorrespondenceSet, SimilarityTransform, fit_similarity,
                       residual, residuals, rotation_error_deg)
from .solver import (RegistrationResult, SolverConfig, consensus, register,
                     register_known_scale, register_random_baseline,
                     register_unknown_scale)

__version__ = "0.1.0"

__all__ = [
    "BadSpec", "CoincidentPoints", "DegenerateSample", "EmptyRow",
    "InsufficientInliers", "ParseError", "RegistrationError",
    "CorrespondenceSet", "SimilarityTransform", "fit_similarity", "residual",
    "residuals", "rotation_error_deg", "RegistrationResult", "SolverConfig",
    "consensus", "register", "register_known_scale", "register_random_baseline",
    "register_unknown_scale",
]
