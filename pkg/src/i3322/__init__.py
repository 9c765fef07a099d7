"""Tools for the I3322 Bell functional: evaluation, seesaw search, normal forms and bounds."""
from .bell import Strategy, classical_max, i3322_value
from .structure import NormalFormSpec, build_normal_form, cs_decompose, normalize
from .symmat import ValidationError

__all__ = [
    "NormalFormSpec",
    "Strategy",
    "ValidationError",
    "build_normal_form",
    "classical_max",
    "cs_decompose",
    "i3322_value",
    "normalize",
]
__version__ = "0.1.0"
