"""Signal-noise separation with echo state networks.

A single noisy series is split into a deterministic part, reconstructed by a
one-step reservoir predictor, and a noise part whose kind (additive or
multiplicative) and distribution are estimated from the misfits.
"""
from .core import LabeledSeries, NoiseKind, Split, read_csv, split_series, standardize, write_csv
from .reservoir import EsnParams, build_reservoir, fit_predict
from .separation import SeparationResult, complete_separation, ssrc_separate

__version__ = "0.1.0"

__all__ = [
    "EsnParams", "LabeledSeries", "NoiseKind", "SeparationResult", "Split", "build_reservoir",
    "complete_separation", "fit_predict", "read_csv", "split_series", "ssrc_separate", "standardize",
    "write_csv", "__version__",
]
