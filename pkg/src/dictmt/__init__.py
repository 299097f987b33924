"""Dictionary-driven corpus splitting, annotation, segmentation and
rare-word evaluation for machine translation."""

__version__ = "0.1.0"
