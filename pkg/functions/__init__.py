from .base import OrliczFunction
from .custom import CustomOrlicz
from .gaussian import GaussianOrlicz
from .piecewise import PiecewiseLinear
from .power import PowerFunction
from .truncated import TruncatedExtension

__all__ = [
    "OrliczFunction",
    "CustomOrlicz",
    "GaussianOrlicz",
    "PiecewiseLinear",
    "PowerFunction",
    "TruncatedExtension",
]
