from abc import ABC, abstractmethod
import logging
from typing import List, Optional, Tuple

import numpy as np

from core.errors import DegenerateFunction, NonConvex
from core.numerics import central_difference

logger = logging.getLogger(__name__)

ArrayLike = np.ndarray


class OrliczFunction(ABC):
    """
    Абстрактний базовий клас для функцій Орліча M: [0, inf) -> [0, inf].

    Містить загальну логіку: обчислення значень, права похідна M', друга
    похідна M'' (абсолютно неперервна частина міри dM'), стрибки M'
    (атомарна частина dM') та момент ∫_0^y z dM'(z).
    """

    degenerate_allowed: bool = False
    # True, якщо міра dM' не має абсолютно неперервної частини.
    atomic_only: bool = False

    @property
    @abstractmethod
    def kind(self) -> str:
        """
        Тег виду функції.

        Повертає:
            str: power(p), gaussian_m, piecewise_linear, truncated_extension(...) або custom.
        """
        pass

    @abstractmethod
    def value(self, t):
        """
        Значення M(t).

        Аргументи:
            t (float | np.ndarray): Точки t >= 0.

        Повертає:
            float | np.ndarray: M(t); +inf поза ефективною областю визначення.
        """
        pass

    def __call__(self, t):
        return self.value(t)

    @property
    def has_derivative(self) -> bool:
        return True

    @property
    def has_second_derivative(self) -> bool:
        return True

    def derivative(self, t):
        """
        Права похідна M'(t). За замовчуванням центральна різниця.
        """
        if np.ndim(t) == 0:
            return central_difference(self.value, float(t), order=1)
        return np.array([central_difference(self.value, float(s), order=1) for s in np.ravel(t)]).reshape(np.shape(t))

    def second_derivative(self, t):
        """
        Щільність абсолютно неперервної частини dM'. За замовчуванням скінченні різниці.
        """
        if np.ndim(t) == 0:
            return central_difference(self.value, float(t), order=2)
        return np.array([central_difference(self.value, float(s), order=2) for s in np.ravel(t)]).reshape(np.shape(t))

    def slope_jumps(self) -> List[Tuple[float, float]]:
        """
        Атоми міри dM' у (0, inf): пари (точка, величина стрибка M').

        Повертає:
            List[Tuple[float, float]]: Порожній список для гладких функцій.
        """
        return []

    def breakpoints(self) -> List[float]:
        """Точки, де M'' має розрив (для розбиття квадратури)."""
        return [k for k, _ in self.slope_jumps()]

    def moment(self, y):
        """
        Момент ∫_0^y z dM'(z) = y·M'(y) − M(y) (інтегрування частинами).

        Саме ця величина дорівнює ненормованому хвосту F̄(1/y).
        """
        y = np.asarray(y, dtype=float)
        with np.errstate(invalid="ignore"):
            result = y * self.derivative(y) - self.value(y)
        return result if result.ndim else float(result)

    def tail_inverse(self, v) -> Optional[np.ndarray]:
        """
        Розв'язок x рівняння moment(1/x) = v, якщо він відомий у замкненій формі.

        Повертає:
            np.ndarray | None: None, якщо аналітичного розв'язку немає.
        """
        return None

    def measure_support_max(self) -> Optional[float]:
        """
        Верхня межа носія міри dM' (inf для необмеженого носія, None якщо невідомо).
        """
        return None

    def probe_points(self) -> np.ndarray:
        """Пробні точки для перевірки інваріантів."""
        return np.geomspace(1e-3, 1e3, 61)

    def describe(self) -> str:
        return self.kind

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.describe()})"

    def validate(self, probes: Optional[np.ndarray] = None, slack: float = 1e-12) -> None:
        """
        Перевіряє M(0) = 0, монотонність, опуклість та невиродженість у пробних точках.

        :raises NonConvex: якщо порушено опуклість або монотонність.
        :raises DegenerateFunction: якщо M(t) = 0 при t > 0, а це не дозволено.
        """
        if probes is None:
            probes = self.probe_points()
        probes = np.sort(np.asarray(probes, dtype=float))
        if abs(float(self.value(0.0))) > slack:
            raise NonConvex(f"{self.describe()}: M(0) must be 0")

        values = np.asarray(self.value(probes), dtype=float)
        finite = np.isfinite(values)
        values, probes = values[finite], probes[finite]
        if np.any(np.diff(values) < -slack):
            raise NonConvex(f"{self.describe()}: M is not nondecreasing")

        left, right = probes[:-1], probes[1:]
        mids = np.asarray(self.value(0.5 * (left + right)), dtype=float)
        chords = 0.5 * (values[:-1] + values[1:])
        if np.any(mids > chords + slack * np.maximum(1.0, np.abs(chords))):
            raise NonConvex(f"{self.describe()}: midpoint convexity violated")

        if not self.degenerate_allowed and np.any(values <= 0):
            raise DegenerateFunction(f"{self.describe()}: M vanishes at t={probes[values <= 0][-1]:.6g}")
