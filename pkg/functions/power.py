import numpy as np

from core.errors import InvalidParameter
from .base import OrliczFunction


class PowerFunction(OrliczFunction):
    """
    Степенева функція Орліча M(t) = t^p, p >= 1.

    Норма Орліча для неї збігається з класичною p-нормою.
    """

    def __init__(self, p: float):
        """
        Ініціалізація степеневої функції.

        Аргументи:
            p (float): Показник степеня, p >= 1.
        """
        if not np.isfinite(p) or p < 1:
            raise InvalidParameter(f"Power exponent must be >= 1, got {p}")
        self.p = float(p)

    @property
    def kind(self) -> str:
        return f"power({self.p:g})"

    def value(self, t):
        return np.power(t, self.p)

    def derivative(self, t):
        return self.p * np.power(t, self.p - 1.0)

    def second_derivative(self, t):
        if self.p == 1.0:
            return np.zeros_like(np.asarray(t, dtype=float)) if np.ndim(t) else 0.0
        with np.errstate(divide="ignore"):
            return self.p * (self.p - 1.0) * np.power(t, self.p - 2.0)

    def moment(self, y):
        return (self.p - 1.0) * np.power(y, self.p)

    def tail_inverse(self, v):
        if self.p == 1.0:
            return None
        with np.errstate(divide="ignore"):
            return np.power((self.p - 1.0) / np.asarray(v, dtype=float), 1.0 / self.p)

    def measure_support_max(self) -> float:
        return np.inf if self.p > 1.0 else 0.0
