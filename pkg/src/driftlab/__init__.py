"""Line assignment and vertical drift correction for reading eye-tracking data.

The package covers the full desk workflow: loading per-trial fixation data,
running classical drift-correction algorithms, decoding ordinal-regression
logits produced by an external model, combining assignments by weighted
majority vote, generating synthetic reading trials, scoring against human
labels, and serving a review API for manual overrides.
"""

__version__ = "0.1.0"

from .trial import Assignment, CharBox, Fixation, Stimulus, Trial  # noqa: F401
