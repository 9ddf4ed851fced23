"""Meta-estimation of Monte Carlo gradients from proportional and finite-difference samples."""

from .adam import Adam
from .meta import EPS_ALPHA, EPS_STEP, GradientSamplePair, Meta, compute_alpha, rescale_diff_variance
from .moments import Moment2
from .problems import (DomainError, ExpRateProblem, MiniRenderProblem, MultNoiseQuadratic, Problem,
                       ScriptedTrajectory)

__version__ = "0.1.0"

__all__ = [
    "Adam", "DomainError", "EPS_ALPHA", "EPS_STEP", "ExpRateProblem", "GradientSamplePair", "Meta",
    "MiniRenderProblem", "Moment2", "MultNoiseQuadratic", "Problem", "ScriptedTrajectory",
    "compute_alpha", "rescale_diff_variance",
]
