"""Entangled oscillator vacuum states and the thermal statistics of measuring them."""

from .epr_state import ParamVector, build_matrix_A
from .measurement import ThermalParams
from .oscillator_model import OscillatorSystem, normal_modes, temperature_from_xi

__all__ = [
    "ParamVector",
    "ThermalParams",
    "OscillatorSystem",
    "build_matrix_A",
    "normal_modes",
    "temperature_from_xi",
]

__version__ = "0.1.0"
