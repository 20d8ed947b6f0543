"""Counting of overlapping fission tracks in photomicrographs."""
from .binarize import Method, Polarity
from .trackseg import CountReport, PipelineConfig, count_image

__all__ = ["Method", "Polarity", "CountReport", "PipelineConfig", "count_image"]
__version__ = "0.1.0"
