import numpy as np
from scipy.special import erfc, erfcinv, erfcx

from core.numerics import DEFAULT_QUADRATURE, integrate
from .base import OrliczFunction

SQRT_2_OVER_PI = float(np.sqrt(2.0 / np.pi))


class GaussianOrlicz(OrliczFunction):
    """
    Функція Орліча, яку породжують стандартні гаусові величини:

        M(s) = sqrt(2/pi) · ∫_0^s exp(-1/(2t²)) dt.

    За замовчуванням використовується замкнена форма
    M(s) = exp(-1/(2s²)) · (sqrt(2/pi)·s − erfcx(1/(s·sqrt(2)))),
    яка випливає із заміни u = 1/t та інтегрування частинами.
    З quadrature=True кожне обчислення інтегрує похідну заново.
    """

    def __init__(self, quadrature: bool = False):
        self.quadrature = quadrature

    @property
    def kind(self) -> str:
        return "gaussian_m"

    def describe(self) -> str:
        return "gaussian_m[quadrature]" if self.quadrature else "gaussian_m"

    def probe_points(self) -> np.ndarray:
        # При s < 0.05 значення M(s) зникає в машинній арифметиці.
        return np.geomspace(0.05, 1e3, 61)

    def value(self, s):
        if self.quadrature:
            return self._value_by_quadrature(s)
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            inv = 1.0 / (s * np.sqrt(2.0))
            result = np.where(
                s > 0,
                np.exp(-inv ** 2) * (SQRT_2_OVER_PI * s - erfcx(inv)),
                0.0
            )
            result = np.where(np.isinf(s), np.inf, result)
        return result if result.ndim else float(result)

    def _value_by_quadrature(self, s):
        def one(point: float) -> float:
            if point <= 0:
                return 0.0
            return integrate(self.derivative, 0.0, point, DEFAULT_QUADRATURE)

        if np.ndim(s) == 0:
            return one(float(s))
        return np.array([one(float(p)) for p in np.ravel(s)]).reshape(np.shape(s))

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            result = np.where(t > 0, SQRT_2_OVER_PI * np.exp(-0.5 / t ** 2), 0.0)
        return result if result.ndim else float(result)

    def second_derivative(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            result = np.where(t > 0, SQRT_2_OVER_PI * np.exp(-0.5 / t ** 2) / t ** 3, 0.0)
        return result if result.ndim else float(result)

    def moment(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            result = erfc(1.0 / (y * np.sqrt(2.0)))
        return result if result.ndim else float(result)

    def tail_inverse(self, v):
        return np.sqrt(2.0) * erfcinv(np.asarray(v, dtype=float))

    def measure_support_max(self) -> float:
        return np.inf
