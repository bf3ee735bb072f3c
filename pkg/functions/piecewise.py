import json
import logging
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from core.errors import InvalidParameter, NonConvex
from .base import OrliczFunction

logger = logging.getLogger(__name__)


class PiecewiseLinear(OrliczFunction):
    """
    Опукла кусково-лінійна функція, задана вузлами (t, M(t)), що починаються з (0, 0),
    та нахилом після останнього вузла (може бути +inf, тоді M = +inf праворуч від нього).

    Міра dM' є чисто атомарною: атоми розташовані у вузлах, де змінюється нахил.
    """

    degenerate_allowed = True
    atomic_only = True

    def __init__(self, knots: Sequence[Sequence[float]], final_slope: float):
        """
        Ініціалізація кусково-лінійної функції.

        Аргументи:
            knots: Зростаюча послідовність пар (t, value), перша пара дорівнює (0, 0).
            final_slope (float): Нахил після останнього вузла, float('inf') дозволено.
        """
        pts = np.asarray(knots, dtype=float).reshape(-1, 2)
        if pts.shape[0] == 0 or pts[0, 0] != 0.0 or pts[0, 1] != 0.0:
            raise InvalidParameter("Knots must start at (0, 0)")
        if not np.all(np.isfinite(pts)):
            raise InvalidParameter("Knots must be finite")
        if np.any(np.diff(pts[:, 0]) <= 0):
            raise InvalidParameter("Knot abscissae must be strictly increasing")
        if np.isnan(final_slope):
            raise InvalidParameter("final_slope must be a number or inf")

        self.ts = pts[:, 0]
        self.vs = pts[:, 1]
        self.final_slope = float(final_slope)
        segment_slopes = np.diff(self.vs) / np.diff(self.ts)
        self.slopes = np.append(segment_slopes, self.final_slope)

        tol = 1e-12 * np.maximum(1.0, np.abs(self.slopes[:-1]))
        if self.slopes[0] < -1e-12:
            raise NonConvex("Piecewise-linear Orlicz function must be nondecreasing")
        if np.any(np.diff(self.slopes) < -tol):
            raise NonConvex(f"Slopes decrease: {self.slopes.tolist()}")

    @property
    def kind(self) -> str:
        return "piecewise_linear"

    def describe(self) -> str:
        return f"piecewise_linear({len(self.ts)} knots, final_slope={self.final_slope:g})"

    @property
    def has_second_derivative(self) -> bool:
        return False

    @property
    def knots(self) -> List[Tuple[float, float]]:
        return list(zip(self.ts.tolist(), self.vs.tolist()))

    def probe_points(self) -> np.ndarray:
        upper = max(4.0 * self.ts[-1], 1.0)
        return np.union1d(self.ts[1:], np.geomspace(1e-3, upper, 41))

    def value(self, t):
        t = np.asarray(t, dtype=float)
        last_t, last_v = self.ts[-1], self.vs[-1]
        with np.errstate(invalid="ignore"):
            beyond = last_v + self.final_slope * (t - last_t)
        result = np.where(t <= last_t, np.interp(t, self.ts, self.vs), beyond)
        return result if result.ndim else float(result)

    def derivative(self, t):
        """Права похідна: нахил відрізка [t_j, t_{j+1}), що містить t."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.ts, t, side="right") - 1
        result = self.slopes[np.clip(idx, 0, len(self.slopes) - 1)]
        return result if np.ndim(result) else float(result)

    def second_derivative(self, t):
        # Абсолютно неперервна частина dM' дорівнює нулю.
        t = np.asarray(t, dtype=float)
        result = np.zeros_like(t)
        return result if result.ndim else 0.0

    def slope_jumps(self) -> List[Tuple[float, float]]:
        jumps = np.diff(self.slopes)
        return [(float(k), float(j)) for k, j in zip(self.ts[1:], jumps) if j > 0]

    def moment(self, y):
        y = np.asarray(y, dtype=float)
        result = np.zeros_like(y)
        for k, jump in self.slope_jumps():
            result = result + np.where(k <= y, k * jump, 0.0)
        return result if result.ndim else float(result)

    def measure_support_max(self) -> float:
        jumps = self.slope_jumps()
        return max(k for k, _ in jumps) if jumps else 0.0

    def conjugate_exact(self) -> "PiecewiseLinear":
        """
        Перетворення Лежандра у замкненій формі: нахили стають абсцисами вузлів.

        На відрізку [σ_j, σ_{j+1}] спряжена функція дорівнює x·t_j − v_j,
        тобто має нахил t_j. Якщо нахил після останнього вузла скінченний,
        спряжена функція дорівнює +inf праворуч від нього.
        """
        knots = [(0.0, 0.0)]
        finite = np.isfinite(self.slopes)
        for j, sigma in enumerate(self.slopes):
            if not finite[j]:
                break
            if sigma <= knots[-1][0]:
                continue
            knots.append((float(sigma), float(sigma * self.ts[j] - self.vs[j])))

        if np.isfinite(self.final_slope):
            final = np.inf
        else:
            final = float(self.ts[-1])
        return PiecewiseLinear(knots, final)

    def to_dict(self) -> Dict[str, Union[list, float, str]]:
        return {
            "knots": [[t, v] for t, v in self.knots],
            "final_slope": "inf" if np.isinf(self.final_slope) else self.final_slope
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Dict) -> "PiecewiseLinear":
        try:
            slope = data["final_slope"]
            slope = float("inf") if slope == "inf" else float(slope)
            return cls(data["knots"], slope)
        except (KeyError, TypeError) as e:
            raise InvalidParameter(f"Malformed piecewise-linear description: {e}") from e

    @classmethod
    def from_json(cls, text: str) -> "PiecewiseLinear":
        return cls.from_dict(json.loads(text))
