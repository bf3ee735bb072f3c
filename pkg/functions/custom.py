from typing import Callable, Optional

import numpy as np

from .base import OrliczFunction


class CustomOrlicz(OrliczFunction):
    """
    Довільна функція Орліча, задана обчислювачами.

    Похідні, яких не передано, оцінюються скінченними різницями.
    """

    def __init__(self,
                 evaluator: Callable,
                 derivative: Optional[Callable] = None,
                 second_derivative: Optional[Callable] = None,
                 degenerate_allowed: bool = False,
                 name: str = "custom"):
        self.evaluator = evaluator
        self.derivative_evaluator = derivative
        self.second_derivative_evaluator = second_derivative
        self.degenerate_allowed = degenerate_allowed
        self.name = name

    @property
    def kind(self) -> str:
        return "custom"

    def describe(self) -> str:
        return self.name

    @property
    def has_derivative(self) -> bool:
        return self.derivative_evaluator is not None

    @property
    def has_second_derivative(self) -> bool:
        return self.second_derivative_evaluator is not None

    def value(self, t):
        if np.ndim(t) == 0:
            return float(self.evaluator(float(t)))
        return np.asarray([self.evaluator(float(s)) for s in np.ravel(t)], dtype=float).reshape(np.shape(t))

    def derivative(self, t):
        if self.derivative_evaluator is None:
            return super().derivative(t)
        if np.ndim(t) == 0:
            return float(self.derivative_evaluator(float(t)))
        return np.asarray([self.derivative_evaluator(float(s)) for s in np.ravel(t)], dtype=float).reshape(np.shape(t))

    def second_derivative(self, t):
        if self.second_derivative_evaluator is None:
            return super().second_derivative(t)
        if np.ndim(t) == 0:
            return float(self.second_derivative_evaluator(float(t)))
        return np.asarray([self.second_derivative_evaluator(float(s)) for s in np.ravel(t)],
                          dtype=float).reshape(np.shape(t))
