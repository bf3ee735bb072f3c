"""
Операції над функціями Орліча: конструктори, спряження, обернення,
обрізання з лінійним продовженням, норма Орліча (форма Люксембурга)
та перевірка зображення M(x) = ∫ (x − y)^+ dM'(y).
"""
import logging
import math
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from core.errors import InvalidParameter, MissingSecondDerivative, NotBracketed, OutOfRange
from core.numerics import (
    DEFAULT_BISECTION_TOL,
    DEFAULT_QUADRATURE,
    MAX_BRACKET_DOUBLINGS,
    bisect_monotone,
    integrate,
)
from functions import (
    GaussianOrlicz,
    OrliczFunction,
    PiecewiseLinear,
    PowerFunction,
    TruncatedExtension,
)

logger = logging.getLogger(__name__)

NORM_REL_TOL = 1e-12
# Частка x, на якій інтеграл Шоке береться частинами (для сингулярної M'' у нулі).
SINGULAR_HEAD_FRACTION = 1e-3
# Допуск рівня для лівої границі M у точці, де M стрибає до +inf.
BOUNDARY_LEVEL_TOL = 1e-5


def as_vector(x: Sequence[float]) -> np.ndarray:
    """
    Перетворює послідовність скалярів на вектор x = (x_i), i = 1..n.

    :raises InvalidParameter: якщо n < 1 або є нескінченні елементи.
    """
    vec = np.atleast_1d(np.asarray(x, dtype=float))
    if vec.ndim != 1 or vec.size < 1:
        raise InvalidParameter("Vector must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(vec)):
        raise InvalidParameter("Vector entries must be finite")
    return vec


def make_power(p: float) -> PowerFunction:
    return PowerFunction(p)


def make_gaussian_m(quadrature: bool = True) -> GaussianOrlicz:
    """M(s) = sqrt(2/pi)·∫_0^s exp(-1/(2t²)) dt; quadrature=False вмикає замкнену форму."""
    return GaussianOrlicz(quadrature=quadrature)


def make_piecewise_linear(knots, final_slope: float) -> PiecewiseLinear:
    return PiecewiseLinear(knots, final_slope)


def _objective(M: OrliczFunction, x: float, t: float) -> float:
    value = float(M.value(t))
    return x * t - value if math.isfinite(value) else -math.inf


def _grow_until(g, target: float, start: float = 1.0):
    """Подвоює hi, доки g(hi) >= target; None, якщо межу подвоєнь вичерпано."""
    hi = start
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if g(hi) >= target:
            return hi
        hi *= 2.0
    return None


def conjugate(M: OrliczFunction, x: float) -> float:
    """
    Спряжена функція M*(x) = sup_{t >= 0} (x·t − M(t)).

    Якщо є похідна, максимізатор шукається бісекцією умови M'(t) = x;
    інакше обмеженим пошуком Брента на ввігнутій цільовій функції.
    Для кусково-лінійних функцій спряження точне (по вузлах).

    :return: M*(x) або math.inf, якщо супремум нескінченний.
    """
    if x < 0 or math.isnan(x):
        raise InvalidParameter(f"Conjugate argument must be >= 0, got {x}")
    if x == 0:
        return 0.0
    if isinstance(M, PiecewiseLinear):
        return float(M.conjugate_exact().value(x))
    if M.has_derivative:
        return _conjugate_by_derivative(M, x)
    return _conjugate_by_search(M, x)


def _conjugate_by_derivative(M: OrliczFunction, x: float) -> float:
    g = lambda t: float(M.derivative(t))
    if g(0.0) >= x:
        return 0.0
    hi = _grow_until(g, x)
    if hi is None:
        return math.inf
    t_star = bisect_monotone(g, x, 0.0, hi, DEFAULT_BISECTION_TOL * max(1.0, hi))
    # На межі області визначення M може стрибати до +inf.
    candidates = [t_star, max(t_star - DEFAULT_BISECTION_TOL * max(1.0, t_star), 0.0)]
    value = max(_objective(M, x, t) for t in candidates)
    return max(value, 0.0)


def _conjugate_by_search(M: OrliczFunction, x: float) -> float:
    upper = 1.0
    for _ in range(MAX_BRACKET_DOUBLINGS):
        result = minimize_scalar(
            lambda t: -_objective(M, x, t),
            bounds=(0.0, upper),
            method="bounded",
            options={"xatol": 1e-12 * upper}
        )
        if result.x < 0.9 * upper:
            return max(-float(result.fun), 0.0)
        upper *= 2.0
    return math.inf


def conjugate_argmax(M: OrliczFunction, x: float) -> float:
    """
    Найправіший максимізатор t у sup (x·t − M(t)), тобто права похідна M* у точці x.
    """
    if x < 0:
        raise InvalidParameter(f"Conjugate argument must be >= 0, got {x}")
    g = lambda t: float(M.derivative(t))
    if g(0.0) > x:
        return 0.0
    hi = _grow_until(lambda t: g(t) - x, np.nextafter(0.0, 1.0))
    if hi is None:
        return math.inf
    return bisect_monotone(g, x, 0.0, hi, DEFAULT_BISECTION_TOL * max(1.0, hi), side="right")


class ConjugateFunction(OrliczFunction):
    """
    Спряжена функція M*, що обчислюється чисельно за запитом.
    Значення +inf поза ефективною областю визначення.
    """

    degenerate_allowed = True

    def __init__(self, base: OrliczFunction):
        self.base = base

    @property
    def kind(self) -> str:
        return "custom"

    def describe(self) -> str:
        return f"conjugate({self.base.describe()})"

    @property
    def has_second_derivative(self) -> bool:
        return False

    def value(self, x):
        if np.ndim(x) == 0:
            return conjugate(self.base, float(x))
        return np.array([conjugate(self.base, float(s)) for s in np.ravel(x)]).reshape(np.shape(x))

    def derivative(self, x):
        if np.ndim(x) == 0:
            return conjugate_argmax(self.base, float(x))
        return np.array([conjugate_argmax(self.base, float(s)) for s in np.ravel(x)]).reshape(np.shape(x))


def conjugate_function(M: OrliczFunction) -> OrliczFunction:
    """M* як функція: точна для кусково-лінійних, чисельна для решти."""
    if isinstance(M, PiecewiseLinear):
        return M.conjugate_exact()
    return ConjugateFunction(M)


def inverse(M: OrliczFunction, y: float, hi_hint: float = 1.0) -> float:
    """
    Найлівіше t з M(t) = y; відрізок пошуку подвоюється, починаючи з hi_hint.

    :raises OutOfRange: якщо y перевищує значення, яких досягає M.
    """
    if y < 0 or math.isnan(y):
        raise InvalidParameter(f"Cannot invert at negative level {y}")
    if y == 0:
        return 0.0
    g = lambda t: float(M.value(t))
    hi = _grow_until(g, y, start=max(hi_hint, 1e-12))
    if hi is None:
        raise OutOfRange(f"{M.describe()} never reaches {y}")
    tol = DEFAULT_BISECTION_TOL * max(1.0, hi)
    t = bisect_monotone(g, y, 0.0, hi, tol)
    if math.isfinite(g(t)):
        return t
    # Бісекція зійшлася до межі області визначення: рівень y досягається лише як ліва границя.
    left = max(t - tol, 0.0)
    if g(left) >= y - BOUNDARY_LEVEL_TOL * max(1.0, y):
        return left
    raise OutOfRange(f"{M.describe()} jumps to +inf below level {y}")


def truncate_linear(M: OrliczFunction) -> TruncatedExtension:
    """
    Обрізання в точці T з M(T) = 1 та лінійне продовження дотичною.

    :raises OutOfRange: якщо M ніколи не досягає 1.
    """
    T = inverse(M, 1.0)
    logger.info(f"Truncating {M.describe()} at T={T:.12g}")
    return TruncatedExtension(M, T)


def orlicz_norm(M: OrliczFunction, x: Sequence[float], rel_tol: float = NORM_REL_TOL) -> float:
    """
    Норма Орліча ||x||_M = inf{t > 0 : Σ M(|x_i|/t) <= 1}.

    Бісекція по t на відрізку [max|x_i|/T, n·max|x_i|/T], де M(T) = 1;
    для нульового вектора повертає 0.
    """
    a = np.abs(as_vector(x))
    a_max = float(a.max())
    if a_max == 0.0:
        return 0.0

    T = inverse(M, 1.0)

    def g(t: float) -> float:
        with np.errstate(divide="ignore", over="ignore"):
            return -float(np.sum(M.value(a / t)))

    lo = a_max / T
    hi = a.size * a_max / T
    while g(lo) > -1.0:
        lo *= 0.5
    while g(hi) < -1.0:
        hi *= 2.0
    return float(bisect_monotone(g, -1.0, lo, hi, rel_tol * lo))


def choquet_eval(M: OrliczFunction, x: float) -> float:
    """
    Обчислює ∫_[0,inf) (x − y)^+ dM'(y): x·M'(0) + ∫_0^x (x − y) M''(y) dy
    плюс сума (x − k)^+ · (стрибок M' у k) по атомах міри dM'.

    :raises MissingSecondDerivative: якщо M'' недоступна навіть через скінченні різниці.
    """
    if x < 0 or math.isnan(x):
        raise InvalidParameter(f"Choquet evaluation needs x >= 0, got {x}")
    if x == 0:
        return 0.0

    total = x * float(M.derivative(0.0))
    total += sum((x - k) * jump for k, jump in M.slope_jumps() if k < x)
    if M.atomic_only:
        return total

    def integrand(y: float) -> float:
        return (x - y) * float(M.second_derivative(y))

    head_end = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        at_zero = float(M.second_derivative(0.0))
    if not math.isfinite(at_zero):
        head_end = SINGULAR_HEAD_FRACTION * x
        # ∫_(0,δ] (x − y) dM'(y) = x·(M'(δ) − M'(0)) − ∫_0^δ y dM'(y)
        total += x * (float(M.derivative(head_end)) - float(M.derivative(0.0))) - float(M.moment(head_end))

    midpoint_value = integrand(0.5 * (head_end + x))
    if not math.isfinite(midpoint_value):
        raise MissingSecondDerivative(f"{M.describe()} has no usable second derivative")
    try:
        total += integrate(integrand, head_end, x, DEFAULT_QUADRATURE, M.breakpoints())
    except NotBracketed as e:
        raise MissingSecondDerivative(str(e)) from e
    return total
