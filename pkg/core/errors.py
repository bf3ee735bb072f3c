"""
Ієрархія винятків бібліотеки.

Усі помилки успадковуються від ValueError, тому код, що ловить ValueError,
продовжує працювати.
"""


class OrliczError(ValueError):
    """Базова помилка для всіх операцій над функціями Орліча та розподілами."""


class InvalidParameter(OrliczError):
    pass


class InvalidInterval(OrliczError):
    pass


class NonConvergent(OrliczError):
    pass


class NotBracketed(OrliczError):
    pass


class NonConvex(OrliczError):
    pass


class OutOfRange(OrliczError):
    pass


class MissingSecondDerivative(OrliczError):
    pass


class DivergentMass(OrliczError):
    """Інтеграл ∫ y dM'(y) розбігається, функцію треба спочатку обрізати."""


class NonzeroDerivativeAtZero(OrliczError):
    pass


class DegenerateFunction(OrliczError):
    pass


class InfiniteMean(OrliczError):
    pass


class EmptySample(OrliczError):
    pass


class DimensionMismatch(OrliczError):
    pass


class TooLarge(OrliczError):
    pass


class ConjugateNotInvertible(OrliczError):
    pass


class ConfigError(OrliczError):
    pass
