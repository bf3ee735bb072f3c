"""
Дискретний попередник оберненої формули: послідовність
a_i = n·(M*^{-1}(i/n) − M*^{-1}((i−1)/n)), середні за перестановками
(1/n!)·Σ_π max_i |x_i·a_{π(i)}| та відновлення M з послідовності.
"""
from dataclasses import dataclass
from itertools import chain, islice, permutations
import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from core.errors import ConjugateNotInvertible, DimensionMismatch, InvalidParameter, OutOfRange, TooLarge
from core.numerics import RandomStream
from core.orlicz import as_vector, conjugate_function, inverse
from functions import OrliczFunction, PiecewiseLinear

logger = logging.getLogger(__name__)

MAX_EXACT_N = 10
PERMUTATION_CHUNK = 50_000
SAMPLED_CHUNK_VARIATES = 2_000_000


@dataclass(frozen=True)
class KSSequence:
    """
    Незростаюча додатна послідовність a_1 >= ... >= a_n > 0.

    Аргументи:
        a: Значення послідовності.
        source_m (str | None): Опис функції Орліча, з якої її побудовано.
    """
    a: Tuple[float, ...]
    source_m: Optional[str] = None

    def __post_init__(self):
        values = tuple(float(v) for v in self.a)
        object.__setattr__(self, "a", values)
        if not values:
            raise InvalidParameter("Sequence must be non-empty")
        if any(not (math.isfinite(v) and v > 0) for v in values):
            raise InvalidParameter(f"Sequence entries must be positive and finite: {values}")
        for left, right in zip(values[:-1], values[1:]):
            if right > left * (1.0 + 1e-9):
                raise InvalidParameter(f"Sequence must be nonincreasing: {values}")
        # Прибираємо похибку бісекції, щоб послідовність була строго незростаючою
        object.__setattr__(self, "a", tuple(np.minimum.accumulate(values).tolist()))

    @property
    def n(self) -> int:
        return len(self.a)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.a, dtype=float)


def ks_sequence(M: OrliczFunction, n: int) -> KSSequence:
    """
    a_i = n·(M*^{-1}(i/n) − M*^{-1}((i−1)/n)), i = 1..n, з M*^{-1}(0) = 0.

    :raises ConjugateNotInvertible: якщо M* не досягає потрібних рівнів або вироджена.
    """
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    conjugate = conjugate_function(M)
    previous = 0.0
    values = []
    for i in range(1, n + 1):
        try:
            current = inverse(conjugate, i / n, hi_hint=max(previous, 1.0))
        except OutOfRange as e:
            raise ConjugateNotInvertible(f"M* of {M.describe()} is not invertible at {i}/{n}") from e
        values.append(n * (current - previous))
        previous = current

    if any(not v > 0 for v in values):
        raise ConjugateNotInvertible(f"M* of {M.describe()} is flat on the needed range")
    logger.info(f"Built sequence of length {n} for {M.describe()}")
    return KSSequence(a=tuple(values), source_m=M.describe())


def _check_dimension(x: np.ndarray, seq: KSSequence):
    if x.size != seq.n:
        raise DimensionMismatch(f"Vector has {x.size} entries, sequence has {seq.n}")


def permutation_average_exact(x: Sequence[float], seq: KSSequence) -> float:
    """
    Точне середнє (1/n!)·Σ_π max_i |x_i·a_{π(i)}| перебором усіх перестановок.

    Перестановки обробляються блоками; сума точна (math.fsum), тож результат
    не залежить від порядку координат x.

    :raises DimensionMismatch: якщо len(x) != n.
    :raises TooLarge: якщо n > 10.
    """
    weights = np.abs(as_vector(x))
    _check_dimension(weights, seq)
    if seq.n > MAX_EXACT_N:
        raise TooLarge(f"Exact enumeration is limited to n <= {MAX_EXACT_N}, got {seq.n}")
    a = seq.as_array()

    def chunk_maxima():
        iterator = permutations(range(seq.n))
        while True:
            block = list(islice(iterator, PERMUTATION_CHUNK))
            if not block:
                return
            idx = np.array(block)
            yield np.max(weights * a[idx], axis=1).tolist()

    total = math.fsum(chain.from_iterable(chunk_maxima()))
    return total / math.factorial(seq.n)


def permutation_average_sampled(x: Sequence[float], seq: KSSequence, k: int,
                                stream: RandomStream) -> Tuple[float, float]:
    """
    Оцінка середнього за k випадковими перестановками.

    :return: Кортеж (середнє, стандартна похибка).
    """
    weights = np.abs(as_vector(x))
    _check_dimension(weights, seq)
    if k < 2:
        raise InvalidParameter(f"Need at least 2 sampled permutations, got {k}")
    a = seq.as_array()

    rows_per_chunk = max(1, SAMPLED_CHUNK_VARIATES // seq.n)
    maxima = []
    remaining = k
    while remaining > 0:
        rows = min(rows_per_chunk, remaining)
        idx = stream.permutations(seq.n, rows)
        maxima.append(np.max(weights * a[idx], axis=1))
        remaining -= rows

    values = np.concatenate(maxima)
    return float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(k))


def conjugate_from_sequence(seq: KSSequence, normalize: bool = True) -> PiecewiseLinear:
    """
    M* як кусково-лінійна функція з вузлами (S_k, k/n), де S_k позначає часткові суми a.

    normalize=True ділить часткові суми на n, і тоді ks_sequence відтворює a;
    normalize=False ставить вузли буквально в Σ_{i<=k} a_i.
    """
    a = seq.as_array()
    partial = np.cumsum(a) / (seq.n if normalize else 1.0)
    levels = np.arange(1, seq.n + 1) / seq.n
    knots = [(0.0, 0.0)] + list(zip(partial.tolist(), levels.tolist()))
    last_slope = (levels[-1] - (levels[-2] if seq.n > 1 else 0.0)) / (
        partial[-1] - (partial[-2] if seq.n > 1 else 0.0))
    return PiecewiseLinear(knots, float(last_slope))


def m_from_sequence(seq: KSSequence, normalize: bool = True) -> PiecewiseLinear:
    """
    Відновлює M як спряжену до кусково-лінійної M*, побудованої з послідовності.
    """
    return conjugate_from_sequence(seq, normalize).conjugate_exact()
