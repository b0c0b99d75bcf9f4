"""Precision bounds for frequency estimation under collective dephasing."""

from . import bounds, control, dicke, errors, montecarlo, noise, phase_space

__all__ = [
    "bounds",
    "control",
    "dicke",
    "errors",
    "montecarlo",
    "noise",
    "phase_space",
]
__version__ = "0.1.0"
