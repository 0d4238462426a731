"""Conditional adversarial scanpath generation and scanpath evaluation tools."""

from .core import PLANAR, SPHERICAL, Fixation, Geometry, Scanpath, distance, durations, saccades, validate_scanpath
from .metric import align, component_measures, dissimilarity_matrix, jarodzka_score
from .assignment import EvalReport, evaluate_dataset, hungarian, match_scanpaths

__all__ = [
    "PLANAR",
    "SPHERICAL",
    "Fixation",
    "Geometry",
    "Scanpath",
    "distance",
    "durations",
    "saccades",
    "validate_scanpath",
    "align",
    "component_measures",
    "dissimilarity_matrix",
    "jarodzka_score",
    "EvalReport",
    "evaluate_dataset",
    "hungarian",
    "match_scanpaths",
]
