"""
Оцінки E max_i |x_i·X_i| для незалежних X_i з однаковим розподілом:
детермінована квадратура (формула шарів) та Монте-Карло.
"""
import logging
import math
from typing import List, Sequence, Tuple

import numpy as np

from core.errors import InvalidParameter
from core.forward_map import distribution_mean
from core.inversion import TailDistribution, sample
from core.numerics import DEFAULT_QUADRATURE, RandomStream, integrate
from core.orlicz import as_vector

logger = logging.getLogger(__name__)

# Максимальна кількість випадкових величин в одному блоці Монте-Карло.
MC_CHUNK_VARIATES = 2_000_000


def _nonzero_weights(x: Sequence[float]) -> np.ndarray:
    a = np.abs(as_vector(x))
    return a[a > 0]


def _breakpoints(dist: TailDistribution, weights: np.ndarray) -> List[float]:
    locations = [a for a, _ in dist.atoms]
    if dist.support_min > 0:
        locations.append(dist.support_min)
    if not locations:
        return []
    return np.unique(np.outer(weights, locations).ravel()).tolist()


def exact_emax(dist: TailDistribution, x: Sequence[float]) -> float:
    """
    E max_i |x_i X_i| = ∫_0^inf [1 − Π_i (1 − F̄(u/|x_i|))] du.

    Нульові координати не входять у добуток. Добуток рахується через
    суму log1p, щоб не втрачати точність при малих F̄.

    :raises InfiniteMean: якщо E X = inf.
    """
    weights = _nonzero_weights(x)
    if weights.size == 0:
        return 0.0
    distribution_mean(dist)

    def integrand(u: float) -> float:
        tails = np.asarray(dist.tail(u / weights), dtype=float)
        with np.errstate(divide="ignore"):
            log_none = np.sum(np.log1p(-np.minimum(tails, 1.0)))
        return float(-np.expm1(log_none))

    return float(integrate(integrand, 0.0, math.inf, DEFAULT_QUADRATURE, _breakpoints(dist, weights)))


def mc_emax(dist: TailDistribution, x: Sequence[float], trials: int,
            stream: RandomStream) -> Tuple[float, float]:
    """
    Монте-Карло оцінка E max_i |x_i X_i|.

    :param dist: Розподіл X_i.
    :param x: Вектор ваг.
    :param trials: Кількість випробувань (>= 2).
    :param stream: Потік випадкових чисел; результат детермінований для (seed, stream_id).
    :return: Кортеж (середнє, стандартна похибка).
    """
    if trials < 2:
        raise InvalidParameter(f"Monte Carlo needs at least 2 trials, got {trials}")
    weights = _nonzero_weights(x)
    if weights.size == 0:
        return 0.0, 0.0

    rows_per_chunk = max(1, MC_CHUNK_VARIATES // weights.size)
    maxima = []
    remaining = trials
    while remaining > 0:
        rows = min(rows_per_chunk, remaining)
        draws = sample(dist, stream, rows * weights.size).reshape(rows, weights.size)
        maxima.append(np.max(draws * weights, axis=1))
        remaining -= rows

    values = np.concatenate(maxima)
    estimate = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(trials))
    logger.debug(f"MC estimate over {trials} trials: {estimate:.6g} ± {stderr:.2g}")
    return estimate, stderr
