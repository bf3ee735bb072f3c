from typing import List, Tuple

import numpy as np

from core.errors import InvalidParameter
from .base import OrliczFunction


class TruncatedExtension(OrliczFunction):
    """
    Функція, що збігається з inner на [0, T] і продовжена дотичною після T:
    M̃(t) = M(T) + M'(T)·(t − T). Міра dM̃' зосереджена на [0, T].
    """

    def __init__(self, inner: OrliczFunction, T: float):
        """
        Аргументи:
            inner (OrliczFunction): Вихідна функція.
            T (float): Точка обрізання, T > 0.
        """
        if not (np.isfinite(T) and T > 0):
            raise InvalidParameter(f"Truncation point must be positive and finite, got {T}")
        self.inner = inner
        self.T = float(T)
        self.value_at_T = float(inner.value(self.T))
        self.slope_at_T = float(inner.derivative(self.T))
        self.degenerate_allowed = inner.degenerate_allowed
        self.atomic_only = inner.atomic_only
        if not np.isfinite(self.slope_at_T):
            raise InvalidParameter(f"{inner.describe()} has no finite derivative at T={T}")

    @property
    def kind(self) -> str:
        return f"truncated_extension({self.inner.kind}, T={self.T:.12g})"

    @property
    def has_derivative(self) -> bool:
        return self.inner.has_derivative

    @property
    def has_second_derivative(self) -> bool:
        return self.inner.has_second_derivative

    def probe_points(self) -> np.ndarray:
        return np.union1d(self.inner.probe_points(), [self.T])

    def value(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.minimum(t, self.T)
        result = np.where(
            t <= self.T,
            self.inner.value(inside),
            self.value_at_T + self.slope_at_T * (t - self.T)
        )
        return result if result.ndim else float(result)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        result = np.where(t < self.T, self.inner.derivative(np.minimum(t, self.T)), self.slope_at_T)
        return result if result.ndim else float(result)

    def second_derivative(self, t):
        t = np.asarray(t, dtype=float)
        result = np.where(t < self.T, self.inner.second_derivative(np.minimum(t, self.T)), 0.0)
        return result if result.ndim else float(result)

    def slope_jumps(self) -> List[Tuple[float, float]]:
        # Права похідна: атом inner у самій T зберігається, після T атомів немає.
        return [(k, j) for k, j in self.inner.slope_jumps() if k <= self.T]

    def breakpoints(self) -> List[float]:
        return [k for k in self.inner.breakpoints() if k < self.T] + [self.T]

    def moment(self, y):
        y = np.asarray(y, dtype=float)
        result = self.inner.moment(np.minimum(y, self.T))
        result = np.asarray(result, dtype=float)
        return result if result.ndim else float(result)

    def tail_inverse(self, v):
        v = np.asarray(v, dtype=float)
        inner = self.inner.tail_inverse(np.minimum(v, self.mass))
        if inner is None:
            return None
        return np.maximum(inner, 1.0 / self.T)

    @property
    def mass(self) -> float:
        """Повна маса ∫ y dM̃'(y) = T·M'(T) − M(T)."""
        return self.T * self.slope_at_T - self.value_at_T

    def measure_support_max(self) -> float:
        inner_max = self.inner.measure_support_max()
        if inner_max is None:
            return self.T
        return min(inner_max, self.T)
