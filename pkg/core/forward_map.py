"""
Пряме відображення: від розподілу X до функції Орліча
M(s) = ∫_0^s E[X·1{X >= 1/t}] dt, яку він породжує, та перевірка
повернення M -> X -> M.
"""
from dataclasses import dataclass
from functools import lru_cache
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.errors import EmptySample, InfiniteMean, InvalidParameter, NonConvergent
from core.inversion import TailDistribution, invert
from core.numerics import DEFAULT_QUADRATURE, RELATIVE_QUADRATURE, integrate
from core.orlicz import inverse
from functions import CustomOrlicz, OrliczFunction

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 64
GRID_LOWER_FRACTION = 1e-3
RESIDUAL_FLOOR = 1e-12


@dataclass
class ForwardResult:
    """
    Значення M(s) на сітці та сама функція, що обчислює M за запитом.
    """
    m_values: List[Tuple[float, float]]
    as_function: OrliczFunction

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.m_values, columns=["s", "M"])


def _breakpoints(dist: TailDistribution) -> List[float]:
    points = [a for a, _ in dist.atoms]
    if dist.support_min > 0:
        points.append(dist.support_min)
    return points


@lru_cache(maxsize=64)
def distribution_mean(dist: TailDistribution) -> float:
    """
    E X = ∫_0^inf F̄(u) du (атоми враховуються точно).

    :raises InfiniteMean: якщо інтеграл хвоста розбігається.
    """
    atomic = sum(a * p for a, p in dist.atoms)
    if dist.samples is not None or dist.atomic_only:
        return atomic
    try:
        continuous = integrate(dist.continuous_tail, 0.0, math.inf, DEFAULT_QUADRATURE, _breakpoints(dist))
    except NonConvergent as e:
        raise InfiniteMean(f"{dist.describe()} has infinite mean") from e
    return continuous + atomic


def _atomic_part(dist: TailDistribution, s: float) -> float:
    # Внесок атома a з вагою p: p·a·(s − 1/a)^+ = p·(s·a − 1)^+
    return sum(p * max(s * a - 1.0, 0.0) for a, p in dist.atoms)


def _forward_exchanged(dist: TailDistribution, s: float) -> float:
    # Після зміни порядку інтегрування: s·∫_{1/s}^inf F̄_c(u) du
    lower = 1.0 / s
    points = [p for p in _breakpoints(dist) if p > lower]
    continuous = integrate(dist.continuous_tail, lower, math.inf, RELATIVE_QUADRATURE, points)
    return s * continuous + _atomic_part(dist, s)


def _forward_nested(dist: TailDistribution, s: float) -> float:
    def inner(t: float) -> float:
        if t <= 0.0:
            return 0.0
        c = 1.0 / t
        truncated_mean = integrate(dist.tail, c, math.inf, DEFAULT_QUADRATURE,
                                   [p for p in _breakpoints(dist) if p > c])
        return c * float(dist.tail(c)) + truncated_mean

    points = [1.0 / p for p in _breakpoints(dist) if p > 0]
    return integrate(inner, 0.0, s, DEFAULT_QUADRATURE, points)


def forward_from_tail(dist: TailDistribution, s: float, method: str = "exchanged") -> float:
    """
    Функція Орліча, породжена розподілом: M(s) = ∫_0^s E[X·1{X >= 1/t}] dt.

    method="exchanged" (за замовчуванням) обчислює s·∫_{1/s}^inf F̄(u) du,
    method="nested" обчислює подвійний інтеграл
    ∫_0^s [(1/t)·F̄(1/t) + ∫_{1/t}^inf F̄(u) du] dt безпосередньо.

    :raises InfiniteMean: якщо E X = inf.
    """
    if s < 0 or math.isnan(s):
        raise InvalidParameter(f"Forward map needs s >= 0, got {s}")
    if method not in ("exchanged", "nested"):
        raise InvalidParameter(f"Unknown forward method: {method}")
    distribution_mean(dist)
    if s == 0:
        return 0.0
    if dist.samples is not None:
        return forward_from_sample(dist.samples, s)
    if dist.atomic_only:
        return _atomic_part(dist, s)
    if method == "nested":
        return _forward_nested(dist, s)
    return _forward_exchanged(dist, s)


def forward_from_sample(samples: Sequence[float], s: float) -> float:
    """
    Емпіричне пряме відображення (1/N)·Σ v_j·(s − 1/v_j)^+ у замкненій формі.

    :raises EmptySample: якщо вибірка порожня.
    """
    values = np.asarray(samples, dtype=float).ravel()
    if values.size == 0:
        raise EmptySample("Forward map needs at least one sample")
    if np.any(values < 0):
        raise InvalidParameter("Samples must be nonnegative")
    if s < 0:
        raise InvalidParameter(f"Forward map needs s >= 0, got {s}")
    return float(np.mean(np.maximum(s * values - 1.0, 0.0)))


def forward_sample_stderr(samples: Sequence[float], s: float) -> float:
    """Стандартна похибка емпіричної оцінки forward_from_sample."""
    values = np.asarray(samples, dtype=float).ravel()
    if values.size < 2:
        raise EmptySample("Standard error needs at least two samples")
    contributions = np.maximum(s * values - 1.0, 0.0)
    return float(np.std(contributions, ddof=1) / math.sqrt(values.size))


def default_forward_grid(T: float, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Логарифмічна сітка від 1e-3·T до T."""
    if not (T > 0 and math.isfinite(T)):
        raise InvalidParameter(f"Grid scale must be positive, got {T}")
    if points < 2:
        raise InvalidParameter("Grid needs at least two points")
    return np.geomspace(GRID_LOWER_FRACTION * T, T, points)


def grid_scale(dist: TailDistribution) -> float:
    # M стає лінійною для s >= 1/support_min; для носія, що починається з нуля, масштаб 1/E X
    if dist.support_min > 0:
        return 1.0 / dist.support_min
    return 1.0 / float(distribution_mean(dist))


def forward_grid(dist: TailDistribution, grid: Optional[Sequence[float]] = None,
                 method: str = "exchanged") -> ForwardResult:
    """
    Обчислює M(s) на сітці та повертає ForwardResult.
    """
    s_values = default_forward_grid(grid_scale(dist)) if grid is None else np.asarray(grid, dtype=float)
    m_values = [(float(s), forward_from_tail(dist, float(s), method)) for s in s_values]
    logger.info(f"Forward map of {dist.describe()} evaluated at {len(m_values)} points")

    def derivative(s: float) -> float:
        # M'(s) = E[X·1{X >= 1/s}]
        if s <= 0:
            return 0.0
        c = 1.0 / s
        if dist.samples is not None:
            return float(np.mean(np.where(dist.samples >= c, dist.samples, 0.0)))
        atomic = sum(a * p for a, p in dist.atoms if a >= c)
        if dist.atomic_only:
            return atomic
        points = [p for p in _breakpoints(dist) if p > c]
        continuous = c * float(dist.continuous_tail(c)) + integrate(dist.continuous_tail, c, math.inf,
                                                                    DEFAULT_QUADRATURE, points)
        return continuous + atomic

    function = CustomOrlicz(
        lambda s: forward_from_tail(dist, s, method),
        derivative=derivative,
        degenerate_allowed=True,
        name=f"forward({dist.describe()})",
    )
    return ForwardResult(m_values=m_values, as_function=function)


def forward_table(dist: TailDistribution, points: int = DEFAULT_GRID_POINTS, method: str = "exchanged") -> pd.DataFrame:
    """Таблиця (s, M) на стандартній логарифмічній сітці."""
    return forward_grid(dist, default_forward_grid(grid_scale(dist), points), method).to_frame()


def roundtrip_residual(M: OrliczFunction, grid: Optional[Sequence[float]] = None,
                       auto_truncate: bool = True, points: int = DEFAULT_GRID_POINTS) -> float:
    """
    max_s |forward(invert(M))(s)·Q([0,inf)) − M̃(s)| / max(M̃(s), 1e-12),
    де M̃ позначає (можливо обрізану) функцію, яку фактично обернено.
    """
    dist, diagnostics = invert(M, auto_truncate=auto_truncate)
    inverted = diagnostics.function
    if grid is None:
        T = diagnostics.truncation_point_T or inverse(inverted, 1.0)
        grid = default_forward_grid(T, points)

    worst = 0.0
    for s in np.asarray(grid, dtype=float):
        expected = float(inverted.value(s))
        produced = forward_from_tail(dist, float(s)) * diagnostics.mass_of_Q
        worst = max(worst, abs(produced - expected) / max(expected, RESIDUAL_FLOOR))
    logger.info(f"Round-trip residual for {inverted.describe()}: {worst:.3e}")
    return worst
