"""Learning-based robust optimization toolkit.

Learn an uncertainty-set shape from one part of the data, calibrate its size
on the other part with order statistics, reformulate the robust program to a
conic program, and solve it.
"""

from . import baselines, calibrate, conic, harness, model, reformulate, shapes
from .errors import RosetError

__all__ = [
    "RosetError",
    "baselines",
    "calibrate",
    "conic",
    "harness",
    "model",
    "reformulate",
    "shapes",
]

__version__ = "0.1.0"
