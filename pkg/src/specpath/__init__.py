"""Sparse regression on directional harmonics of Chebyshev angular coordinates.

Inputs are mapped to angles ``theta = arccos(tanh((x - c) / s))`` and the
target is modelled as a ridge-fitted sum of ``cos(m . theta)`` terms whose
integer frequency vectors ``m`` are selected greedily on a validation split.
"""

__version__ = "0.1.0"

from .data_io import Dataset, load_csv, load_model, save_model, split
from .errors import (
    ConfigurationError,
    DataError,
    NumericalError,
    SchemaError,
    SpecPathError,
    StateError,
)
from .greedy import FitConfig, fit
from .interpret import importance, render_expression, sensitivity
from .model import SpectralModel
from .paths import FrequencyVector

__all__ = [
    "ConfigurationError",
    "DataError",
    "Dataset",
    "FitConfig",
    "FrequencyVector",
    "NumericalError",
    "SchemaError",
    "SpecPathError",
    "SpectralModel",
    "StateError",
    "fit",
    "importance",
    "load_csv",
    "load_model",
    "render_expression",
    "save_model",
    "sensitivity",
    "split",
]
