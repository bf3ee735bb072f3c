"""
Спільні чисельні ядра: адаптивна квадратура (зокрема невласні інтеграли),
бісекція монотонних функцій, скінченні різниці та відтворюваний потік
випадкових чисел.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from core.errors import InvalidInterval, InvalidParameter, NonConvergent, NotBracketed

logger = logging.getLogger(__name__)

MACHINE_EPS = float(np.finfo(float).eps)
DEFAULT_BISECTION_TOL = 1e-12
MAX_CUTOFF_DOUBLINGS = 128
MAX_BRACKET_DOUBLINGS = 200
INITIAL_PANELS = 4


@dataclass(frozen=True)
class QuadratureSpec:
    """
    Параметри квадратури.

    :param abs_tol: Абсолютна похибка.
    :param rel_tol: Відносна похибка.
    :param max_depth: Максимальна глибина рекурсії адаптивного Сімпсона.
    :param infinity_cutoff_tol: Поріг внеску останньої панелі для невласних інтегралів.
    """
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_depth: int = 50
    infinity_cutoff_tol: float = 1e-12

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise InvalidParameter("abs_tol and rel_tol must be positive")
        if self.max_depth < 1:
            raise InvalidParameter("max_depth must be at least 1")
        if not self.infinity_cutoff_tol > 0:
            raise InvalidParameter("infinity_cutoff_tol must be positive")


DEFAULT_QUADRATURE = QuadratureSpec()
# Для інтегралів, значення яких може бути дуже малим (хвости), важить лише відносна похибка.
RELATIVE_QUADRATURE = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-10)


def _simpson_recurse(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = float(f(lm))
    frm = float(f(rm))
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if not math.isfinite(delta):
        raise NonConvergent(f"Non-finite integrand on [{a}, {b}]")
    if abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    if depth <= 0:
        raise NonConvergent(f"Maximum recursion depth exceeded on [{a}, {b}]")
    return (_simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + _simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))


def _adaptive_simpson(f: Callable[[float], float], a: float, b: float, spec: QuadratureSpec,
                      left_of_b: bool = False) -> float:
    """
    Адаптивний Сімпсон на [a, b]. Якщо left_of_b, значення в b береться як ліва
    границя f(b−0): у точці розриву значення f(b) належить наступному відрізку.
    """
    if a == b:
        return 0.0
    edges = [float(e) for e in np.linspace(a, b, INITIAL_PANELS + 1)]
    panels = []
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        hi_at = float(np.nextafter(hi, lo)) if left_of_b and i == INITIAL_PANELS - 1 else hi
        flo, fmid, fhi = float(f(lo)), float(f(0.5 * (lo + hi))), float(f(hi_at))
        panels.append((lo, hi, flo, fmid, fhi, (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)))
    estimate = math.fsum(p[-1] for p in panels)
    if not math.isfinite(estimate):
        raise NonConvergent(f"Non-finite integrand on [{a}, {b}]")
    tol = max(spec.abs_tol, spec.rel_tol * abs(estimate)) / INITIAL_PANELS
    return math.fsum(_simpson_recurse(f, lo, hi, flo, fmid, fhi, whole, tol, spec.max_depth)
                     for lo, hi, flo, fmid, fhi, whole in panels)


def integrate(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    points: Optional[Iterable[float]] = None
) -> float:
    """
    Адаптивна квадратура Сімпсона на [lo, hi], hi може дорівнювати +inf.

    Невласний інтеграл обчислюється подвоєнням верхньої межі, починаючи з
    max(1, lo + 1), доки внесок останньої панелі не стане меншим за
    spec.infinity_cutoff_tol. Точки розриву/зламу з `points` розбивають
    інтервал на частини, які інтегруються окремо.

    :raises InvalidInterval: якщо lo > hi.
    :raises NonConvergent: якщо перевищено глибину рекурсії або межу подвоєнь.
    """
    if math.isnan(lo) or math.isnan(hi) or lo > hi:
        raise InvalidInterval(f"Invalid integration interval [{lo}, {hi}]")
    breaks = sorted(set(float(p) for p in (points or ()) if math.isfinite(p)))
    if math.isinf(hi):
        return _integrate_improper(f, lo, spec, breaks)
    nodes = [float(lo)] + [p for p in breaks if lo < p < hi] + [float(hi)]
    jumps = set(breaks)
    return math.fsum(_adaptive_simpson(f, a, b, spec, left_of_b=b in jumps)
                     for a, b in zip(nodes[:-1], nodes[1:]))


def _integrate_improper(f, lo: float, spec: QuadratureSpec, breaks: Sequence[float]) -> float:
    cutoff = max(1.0, lo + 1.0)
    total = integrate(f, lo, cutoff, spec, breaks)
    for _ in range(MAX_CUTOFF_DOUBLINGS):
        upper = 2.0 * cutoff
        panel = integrate(f, cutoff, upper, spec, breaks)
        total += panel
        cutoff = upper
        if abs(panel) < spec.infinity_cutoff_tol:
            return total
    raise NonConvergent(f"Improper integral from {lo} did not settle up to cutoff {cutoff:.3g}")


def bisect_monotone(
    g: Callable[[float], float],
    target: float,
    lo: float,
    hi: float,
    tol: float = DEFAULT_BISECTION_TOL,
    side: str = "left"
) -> float:
    """
    Бісекція для неспадної функції g.

    side="left" повертає найлівішу точку t з g(t) >= target,
    side="right" повертає найправішу точку t з g(t) <= target
    (з точністю до ширини відрізка tol). Результат завжди лежить у [lo, hi].

    :raises NotBracketed: якщо target поза [g(lo), g(hi)].
    """
    if not tol > 0:
        raise InvalidParameter("Bisection tolerance must be positive")
    if side not in ("left", "right"):
        raise InvalidParameter(f"Unknown bisection side: {side}")
    g_lo, g_hi = g(lo), g(hi)
    if not (g_lo <= target <= g_hi):
        raise NotBracketed(f"Target {target} outside [{g_lo}, {g_hi}] on [{lo}, {hi}]")
    if side == "left" and g_lo >= target:
        return lo
    if side == "right" and g_hi <= target:
        return hi

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        value = g(mid)
        below = value < target if side == "left" else value <= target
        if below:
            lo = mid
        else:
            hi = mid
    return hi if side == "left" else lo


def bisect_monotone_array(
    g: Callable[[np.ndarray], np.ndarray],
    targets: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    tol: float = DEFAULT_BISECTION_TOL
) -> np.ndarray:
    """Векторизована ліва бісекція: для кожного targets[i] найлівіше t з g(t) >= targets[i]."""
    targets = np.asarray(targets, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), targets.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), targets.shape).copy()
    width = float(np.max(hi - lo)) if targets.size else 0.0
    steps = 0 if width <= tol else min(int(math.ceil(math.log2(width / tol))), MAX_BRACKET_DOUBLINGS)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        below = g(mid) < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return hi


def central_difference(f: Callable[[float], float], t: float, order: int = 1) -> float:
    """
    Оцінка першої або другої похідної скінченними різницями.

    Крок h = eps^(1/3)·max(1,|t|) для першої похідної та eps^(1/4)·max(1,|t|)
    для другої; якщо t - h < 0, використовується односторонній шаблон.
    """
    if order not in (1, 2):
        raise InvalidParameter(f"Unsupported derivative order: {order}")
    scale = max(1.0, abs(t))
    if order == 1:
        h = MACHINE_EPS ** (1.0 / 3.0) * scale
        if t - h < 0:
            return (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h)) / (2.0 * h)
        return (f(t + h) - f(t - h)) / (2.0 * h)

    h = MACHINE_EPS ** 0.25 * scale
    if t - h < 0:
        return (2.0 * f(t) - 5.0 * f(t + h) + 4.0 * f(t + 2.0 * h) - f(t + 3.0 * h)) / h ** 2
    return (f(t + h) - 2.0 * f(t) + f(t - h)) / h ** 2


@dataclass
class RandomStream:
    """
    Відтворюваний потік випадкових чисел.

    Однакова пара (seed, stream_id) дає ту саму послідовність; різні stream_id дають
    незалежні потоки (SeedSequence з spawn_key). Екземпляр має одного власника:
    для паралельних обчислень кожен виконавець отримує власний stream_id.
    """
    seed: int
    stream_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not (0 <= int(value) < 2 ** 64):
                raise InvalidParameter(f"{name} must be a 64-bit unsigned integer, got {value}")
        sequence = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def uniform(self, size) -> np.ndarray:
        """Рівномірні величини на відкритому інтервалі (0, 1)."""
        u = self.generator.random(size)
        return np.maximum(u, np.finfo(float).tiny)

    def permutations(self, n: int, count: int) -> np.ndarray:
        """count незалежних випадкових перестановок range(n) (Фішер–Єйтс по рядках)."""
        base = np.tile(np.arange(n), (count, 1))
        return self.generator.permuted(base, axis=1)

    def choice(self, n: int, k: int) -> np.ndarray:
        return self.generator.choice(n, size=k, replace=False)
