"""Haptic password authentication toolkit.

Pipeline: stroke traces -> 8-channel state -> MODWT sub-band features ->
distance-based template matching (weighted Euclidean SumMin, or robust
deviation counting) with adaptive template updates, plus DET/EER evaluation,
complexity/entropy analysis, a synthetic cohort generator, and a local
enrollment/verification service.
"""

from .config import PipelineConfig, load_config

__version__ = "0.1.0"

__all__ = ["PipelineConfig", "load_config", "__version__"]
