"""
Обернення функції Орліча: побудова міри Q(·) = ∫ y δ_{1/y}(·) dM'(y),
її нормування, хвіст F̄(x) = P(X >= x), щільність, атоми, квантилі та
вибірка методом оберненого перетворення.

Також містить аналітичні розподіли (Парето, напівнормальний, атом,
емпіричний), з якими працює пряме відображення.
"""
from dataclasses import dataclass, field
import logging
import math
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import erfc, erfcinv

from core.errors import (
    DegenerateFunction,
    DivergentMass,
    EmptySample,
    InvalidParameter,
    NonzeroDerivativeAtZero,
)
from core.numerics import (
    DEFAULT_QUADRATURE,
    MAX_CUTOFF_DOUBLINGS,
    RandomStream,
    bisect_monotone,
    bisect_monotone_array,
    integrate,
)
from core.orlicz import truncate_linear
from functions import OrliczFunction, PiecewiseLinear, TruncatedExtension

logger = logging.getLogger(__name__)

ZERO_SLOPE_TOL = 1e-8
MASS_REL_TOL = 1e-12
SUPPORT_TOL = 1e-12
ATOM_SNAP_TOL = 1e-9

TailFn = Callable[[Union[float, np.ndarray]], Union[float, np.ndarray]]


def _vectorised(fn: Callable[[np.ndarray], np.ndarray]) -> TailFn:
    """Обгортка: приймає скаляр або масив, повертає float для скаляра."""
    def wrapper(x):
        arr = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            result = np.asarray(fn(arr), dtype=float)
        return result if result.ndim else float(result)
    return wrapper


@dataclass(frozen=True, eq=False)
class TailDistribution:
    """
    Розподіл невід'ємної випадкової величини X, заданий хвостом F̄(x) = P(X >= x).

    tail: нормований хвіст (F̄(support_min) = 1); atoms: пари (точка, ймовірність)
    у порядку зростання; quantile_fn: точна квантильна функція, якщо відома.
    """
    tail: TailFn
    support_min: float
    mass_of_Q: float
    density: Optional[TailFn] = None
    atoms: Tuple[Tuple[float, float], ...] = ()
    source_kind: str = "analytic"
    description: str = ""
    quantile_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    samples: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def atomic_only(self) -> bool:
        return bool(self.atoms) and self.density is None and self.quantile_fn is None and math.isclose(
            sum(p for _, p in self.atoms), 1.0, rel_tol=1e-10
        )

    def continuous_tail(self, x):
        """Хвіст без атомарної частини: F̄(x) − Σ_{a >= x} p_a."""
        x_arr = np.asarray(x, dtype=float)
        result = np.asarray(self.tail(x_arr), dtype=float)
        for location, prob in self.atoms:
            result = result - np.where(location >= x_arr, prob, 0.0)
        result = np.maximum(result, 0.0)
        return result if result.ndim else float(result)

    def describe(self) -> str:
        return self.description or self.source_kind


@dataclass(frozen=True, eq=False)
class InversionDiagnostics:
    truncation_applied: bool
    truncation_point_T: Optional[float]
    mass_of_Q: float
    m_prime_at_zero: float
    function: OrliczFunction = field(repr=False)


def _check_zero_slope(M: OrliczFunction) -> float:
    slope = float(M.derivative(0.0))
    if slope > ZERO_SLOPE_TOL:
        raise NonzeroDerivativeAtZero(f"{M.describe()}: M'(0) = {slope:.6g} > 0")
    return slope


def q_mass(M: OrliczFunction) -> float:
    """
    Повна маса Q([0, inf)) = ∫ y dM'(y) = lim_{B->inf} (B·M'(B) − M(B)).

    :raises NonzeroDerivativeAtZero: якщо M'(0) > 0.
    :raises DivergentMass: якщо границя нескінченна (потрібне обрізання).
    """
    _check_zero_slope(M)
    if isinstance(M, TruncatedExtension):
        return M.mass
    if isinstance(M, PiecewiseLinear):
        mass = float(M.moment(math.inf))
        if not math.isfinite(mass):
            raise DivergentMass(f"{M.describe()} has infinite final slope")
        return mass

    bound = 1.0
    previous = float(M.moment(bound))
    for _ in range(MAX_CUTOFF_DOUBLINGS):
        bound *= 2.0
        current = float(M.moment(bound))
        if not math.isfinite(current):
            break
        if abs(current - previous) <= MASS_REL_TOL * max(1.0, abs(current)):
            return current
        previous = current
    raise DivergentMass(f"∫ y dM'(y) diverges for {M.describe()}; truncate first")


def unnormalized_tail(M: OrliczFunction, x: float) -> float:
    """F̄(x)·Q([0, inf)) = ∫_0^{1/x} y dM'(y) = (1/x)·M'(1/x) − M(1/x)."""
    if not x > 0:
        raise InvalidParameter(f"Tail is defined for x > 0, got {x}")
    _check_zero_slope(M)
    return float(M.moment(1.0 / x))


def _support_min(M: OrliczFunction, tail: TailFn) -> float:
    upper = M.measure_support_max()
    if upper is not None:
        return 0.0 if math.isinf(upper) else 1.0 / upper
    # Найменше x з F̄(x) < 1, шукаємо чисельно
    lo = SUPPORT_TOL
    if tail(lo) < 1.0 - SUPPORT_TOL:
        return 0.0
    hi = 1.0
    while tail(hi) >= 1.0 - SUPPORT_TOL:
        hi *= 2.0
    return bisect_monotone(lambda x: 1.0 - tail(x), SUPPORT_TOL, lo, hi, SUPPORT_TOL * hi, side="right")


def invert(M: OrliczFunction, auto_truncate: bool = True) -> Tuple[TailDistribution, InversionDiagnostics]:
    """
    Будує розподіл X з P(X >= x) = F̄(x) за функцією Орліча M.

    Якщо ∫ y dM'(y) розбігається і auto_truncate=True, M спочатку обрізається
    в точці T з M(T) = 1 та продовжується лінійно.

    :return: Кортеж (TailDistribution, InversionDiagnostics).
    :raises DivergentMass: якщо маса нескінченна, а обрізання вимкнено.
    :raises DegenerateFunction: якщо маса дорівнює нулю або M вироджена без дозволу.
    :raises NonConvex: якщо M не опукла чи не монотонна в пробних точках.
    """
    logger.info(f"Inverting {M.describe()}")
    slope_at_zero = _check_zero_slope(M)
    M.validate()
    truncated = False
    try:
        mass = q_mass(M)
    except DivergentMass:
        if not auto_truncate:
            raise
        M = truncate_linear(M)
        truncated = True
        logger.warning(f"Mass of Q diverges, inverting {M.describe()} instead")
        mass = q_mass(M)

    if not mass > 0:
        raise DegenerateFunction(f"{M.describe()}: Q has zero mass")

    inner = M

    @_vectorised
    def tail(x):
        return np.clip(np.asarray(inner.moment(1.0 / x), dtype=float) / mass, 0.0, 1.0)

    density = None
    if inner.has_second_derivative and not inner.atomic_only:
        @_vectorised
        def density(x):
            values = np.asarray(inner.second_derivative(1.0 / x), dtype=float) * x ** -3.0 / mass
            return np.where(x > 0, np.nan_to_num(values, nan=0.0, posinf=0.0), 0.0)

    atoms = tuple(sorted((1.0 / k, k * jump / mass) for k, jump in inner.slope_jumps()))

    quantile_fn = None
    if inner.tail_inverse(np.array([0.5 * mass])) is not None:
        def quantile_fn(u):
            return np.asarray(inner.tail_inverse(mass * (1.0 - u)), dtype=float)

    support_min = _support_min(inner, tail)
    dist = TailDistribution(
        tail=tail,
        support_min=support_min,
        mass_of_Q=mass,
        density=density,
        atoms=atoms,
        source_kind=f"inverted({inner.kind})",
        description=f"inverted({inner.describe()})",
        quantile_fn=quantile_fn,
    )
    diagnostics = InversionDiagnostics(
        truncation_applied=truncated,
        truncation_point_T=inner.T if isinstance(inner, TruncatedExtension) else None,
        mass_of_Q=mass,
        m_prime_at_zero=slope_at_zero,
        function=inner,
    )
    logger.info(f"Inverted {inner.describe()}: mass={mass:.12g}, support_min={support_min:.12g}, atoms={len(atoms)}")
    return dist, diagnostics


def _atomic_quantile(dist: TailDistribution, u: np.ndarray) -> np.ndarray:
    locations = np.array([a for a, _ in dist.atoms])
    cumulative = np.cumsum([p for _, p in dist.atoms])
    idx = np.searchsorted(cumulative, u, side="left")
    return locations[np.clip(idx, 0, len(locations) - 1)]


def _bisection_quantile(dist: TailDistribution, u: np.ndarray) -> np.ndarray:
    cdf = lambda x: 1.0 - np.asarray(dist.tail(x), dtype=float)
    lo = dist.support_min
    hi = max(2.0 * lo, 1.0)
    target = float(u.max())
    while float(cdf(hi)) < target:
        hi *= 2.0
    result = bisect_monotone_array(cdf, u, lo, hi, 1e-13 * hi)
    for location, _ in dist.atoms:
        near = np.abs(result - location) <= ATOM_SNAP_TOL * max(1.0, location)
        result = np.where(near, location, result)
    return result


def quantile(dist: TailDistribution, u):
    """
    Узагальнена обернена функція x = inf{x : 1 − F̄(x) >= u}, 0 < u < 1.
    На атомарній частині повертає розташування відповідного атома.
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr <= 0) | (u_arr >= 1)):
        raise InvalidParameter("Quantile level must lie in (0, 1)")
    flat = u_arr.ravel()
    if dist.quantile_fn is not None:
        result = np.maximum(dist.quantile_fn(flat), dist.support_min)
    elif dist.atomic_only:
        result = _atomic_quantile(dist, flat)
    elif flat.size:
        result = _bisection_quantile(dist, flat)
    else:
        result = flat
    result = np.asarray(result, dtype=float).reshape(u_arr.shape)
    return result if result.ndim else float(result)


def sample(dist: TailDistribution, stream: RandomStream, count: int) -> np.ndarray:
    """
    count незалежних реалізацій X через квантиль від рівномірних величин потоку.
    """
    if count < 0:
        raise InvalidParameter(f"Sample count must be >= 0, got {count}")
    if count == 0:
        return np.empty(0)
    return np.atleast_1d(quantile(dist, stream.uniform(count)))


def pareto_distribution(p: float) -> TailDistribution:
    """Парето з хвостом x^{-p} на x >= 1."""
    if not p > 0:
        raise InvalidParameter(f"Pareto index must be positive, got {p}")

    @_vectorised
    def tail(x):
        return np.where(x <= 1.0, 1.0, x ** -p)

    @_vectorised
    def density(x):
        return np.where(x >= 1.0, p * x ** (-p - 1.0), 0.0)

    return TailDistribution(
        tail=tail,
        support_min=1.0,
        mass_of_Q=1.0,
        density=density,
        description=f"pareto({p:g})",
        quantile_fn=lambda u: (1.0 - u) ** (-1.0 / p),
    )


def half_normal_distribution() -> TailDistribution:
    """Закон |Z| для стандартної нормальної Z."""

    @_vectorised
    def tail(x):
        return np.where(x <= 0.0, 1.0, erfc(x / math.sqrt(2.0)))

    @_vectorised
    def density(x):
        return np.where(x >= 0.0, math.sqrt(2.0 / math.pi) * np.exp(-0.5 * x ** 2), 0.0)

    return TailDistribution(
        tail=tail,
        support_min=0.0,
        mass_of_Q=1.0,
        density=density,
        description="half_normal",
        quantile_fn=lambda u: math.sqrt(2.0) * erfcinv(1.0 - u),
    )


def atom_distribution(location: float) -> TailDistribution:
    """Вироджений розподіл X = location."""
    if not (location > 0 and math.isfinite(location)):
        raise InvalidParameter(f"Atom location must be positive, got {location}")

    @_vectorised
    def tail(x):
        return np.where(x <= location, 1.0, 0.0)

    return TailDistribution(
        tail=tail,
        support_min=float(location),
        mass_of_Q=1.0,
        atoms=((float(location), 1.0),),
        description=f"atom({location:g})",
    )


def empirical_distribution(samples: Sequence[float]) -> TailDistribution:
    """
    Емпіричний розподіл вибірки: атоми в унікальних значеннях з частотами.

    :raises EmptySample: якщо вибірка порожня.
    """
    values = np.sort(np.asarray(samples, dtype=float).ravel())
    if values.size == 0:
        raise EmptySample("Empirical distribution needs at least one sample")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise InvalidParameter("Samples must be finite and nonnegative")
    count = values.size

    @_vectorised
    def tail(x):
        return (count - np.searchsorted(values, x, side="left")) / count

    unique, counts = np.unique(values, return_counts=True)
    return TailDistribution(
        tail=tail,
        support_min=float(values[0]),
        mass_of_Q=1.0,
        atoms=tuple((float(v), c / count) for v, c in zip(unique, counts)),
        source_kind="empirical",
        description=f"empirical(N={count})",
        samples=values,
    )


def tail_by_density(dist: TailDistribution, x: float) -> float:
    """
    Хвіст як ∫_x^inf density(y) dy плюс атоми праворуч від x (друга форма формули хвоста).

    :raises InvalidParameter: якщо розподіл не має щільності.
    """
    if dist.density is None:
        raise InvalidParameter(f"{dist.describe()} has no density")
    lo = max(float(x), dist.support_min)
    continuous = integrate(dist.density, lo, math.inf, DEFAULT_QUADRATURE, [dist.support_min])
    return continuous + sum(p for a, p in dist.atoms if a >= x)


def default_tail_grid(dist: TailDistribution, points: int = 50) -> np.ndarray:
    """Логарифмічна сітка від support_min до квантиля рівня 1 − 1e-4."""
    if points < 2:
        raise InvalidParameter("Grid needs at least two points")
    lo = dist.support_min if dist.support_min > 0 else quantile(dist, 1e-3)
    hi = quantile(dist, 1.0 - 1e-4)
    if hi <= lo:
        hi = 2.0 * lo
    return np.geomspace(lo, hi, points)


def inversion_table(dist: TailDistribution, grid: Union[int, Sequence[float]] = 50) -> pd.DataFrame:
    """
    Таблиця з колонками x, tail, density, cdf (cdf = P(X <= x)).
    """
    x = default_tail_grid(dist, grid) if isinstance(grid, int) else np.asarray(grid, dtype=float)
    tail = np.asarray(dist.tail(x), dtype=float)
    density = np.asarray(dist.density(x), dtype=float) if dist.density is not None else np.full_like(x, np.nan)
    cdf = 1.0 - np.asarray(dist.tail(np.nextafter(x, np.inf)), dtype=float)
    return pd.DataFrame({"x": x, "tail": tail, "density": density, "cdf": cdf})
