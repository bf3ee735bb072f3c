"""
Конфігурація експериментів: завантаження JSON, розбір текстових описів
функцій Орліча (m_spec) і хвостів, побудова векторів x за сімействами.
"""
from dataclasses import asdict, dataclass, field
import json
import logging
import math
import os
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import ConfigError
from core.inversion import (
    TailDistribution,
    atom_distribution,
    half_normal_distribution,
    invert,
    pareto_distribution,
)
from core.numerics import RandomStream
from core.orlicz import make_gaussian_m, make_power, truncate_linear
from functions import OrliczFunction, PiecewiseLinear

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20240101
DEFAULT_MC_TRIALS = 100_000
DEFAULT_GEOMETRIC_RATIO = 0.9
DEFAULT_FAMILIES = ("canonical", "constant", "geometric:0.9", "random_uniform", "random_sparse")
SEED_ENV = "ORLICZ_SEED"


def env_seed(default: int = DEFAULT_SEED) -> int:
    """Зерно за замовчуванням зі змінної середовища ORLICZ_SEED."""
    raw = os.getenv(SEED_ENV)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from e


def parse_m_spec(spec: str, base_dir: Optional[Union[str, Path]] = None) -> OrliczFunction:
    """
    Розбирає опис функції Орліча.

    Підтримуються: power:<p>, gaussian, gaussian:quadrature, pwl:@<file.json>,
    pwl:<json> та обгортка truncated:<опис>.

    :raises ConfigError: якщо опис не розпізнано.
    """
    spec = spec.strip()
    kind, _, argument = spec.partition(":")
    try:
        if kind == "power":
            return make_power(float(argument))
        if kind == "gaussian":
            if argument not in ("", "quadrature", "closed"):
                raise ConfigError(f"Unknown gaussian variant: {argument!r}")
            return make_gaussian_m(quadrature=argument == "quadrature")
        if kind == "pwl":
            if argument.startswith("@"):
                path = Path(argument[1:])
                if base_dir is not None and not path.is_absolute():
                    path = Path(base_dir) / path
                return PiecewiseLinear.from_json(path.read_text(encoding="utf-8"))
            return PiecewiseLinear.from_json(argument)
        if kind == "truncated":
            return truncate_linear(parse_m_spec(argument, base_dir))
    except ConfigError:
        raise
    except (ValueError, OSError) as e:
        raise ConfigError(f"Cannot build Orlicz function from {spec!r}: {e}") from e
    raise ConfigError(f"Unknown Orlicz function spec: {spec!r}")


def parse_tail_spec(spec: str, base_dir: Optional[Union[str, Path]] = None) -> TailDistribution:
    """
    Розбирає опис розподілу: pareto:<p>, halfnormal, atom:<y>, inverted:<m_spec>.
    """
    spec = spec.strip()
    kind, _, argument = spec.partition(":")
    try:
        if kind == "pareto":
            return pareto_distribution(float(argument))
        if kind == "halfnormal" and not argument:
            return half_normal_distribution()
        if kind == "atom":
            return atom_distribution(float(argument))
        if kind == "inverted":
            dist, _ = invert(parse_m_spec(argument, base_dir))
            return dist
    except ConfigError:
        raise
    except ValueError as e:
        if kind == "inverted":
            raise
        raise ConfigError(f"Cannot build distribution from {spec!r}: {e}") from e
    raise ConfigError(f"Unknown tail spec: {spec!r}")


def _parse_family(family: str) -> Tuple[str, Optional[float]]:
    name, _, argument = family.strip().partition(":")
    if name not in ("canonical", "constant", "geometric", "random_uniform", "random_sparse"):
        raise ConfigError(f"Unknown vector family: {family!r}")
    if not argument:
        return name, None
    if name not in ("geometric", "random_sparse"):
        raise ConfigError(f"Vector family {name!r} takes no parameter")
    try:
        value = float(argument)
    except ValueError as e:
        raise ConfigError(f"Bad parameter in vector family {family!r}") from e
    if name == "geometric" and not 0 < value <= 1:
        raise ConfigError(f"Geometric ratio must lie in (0, 1], got {value}")
    if name == "random_sparse" and (value < 1 or value != int(value)):
        raise ConfigError(f"Sparsity must be a positive integer, got {argument}")
    return name, value


def build_vector(family: str, n: int, stream: RandomStream) -> np.ndarray:
    """
    Вектор x довжини n з сімейства:
    canonical (e_1), constant (1,...,1), geometric[:ρ] (ρ^i),
    random_uniform (незалежні U(0,1)), random_sparse[:k] (k випадкових ненульових, k = ⌈n/10⌉).
    """
    if n < 1:
        raise ConfigError(f"Vector length must be >= 1, got {n}")
    name, argument = _parse_family(family)
    if name == "canonical":
        x = np.zeros(n)
        x[0] = 1.0
        return x
    if name == "constant":
        return np.ones(n)
    if name == "geometric":
        ratio = DEFAULT_GEOMETRIC_RATIO if argument is None else argument
        return ratio ** np.arange(n, dtype=float)
    if name == "random_uniform":
        return stream.uniform(n)
    k = math.ceil(n / 10) if argument is None else min(int(argument), n)
    x = np.zeros(n)
    x[stream.choice(n, k)] = stream.uniform(k)
    return x


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Параметри одного прогону перевірки еквівалентності.

    Аргументи:
        m_spec (str): Опис функції Орліча (див. parse_m_spec).
        n_values: Розмірності n >= 1.
        vector_families: Сімейства векторів x.
        mc_trials (int): Кількість випробувань Монте-Карло (>= 2).
        seed (int): Зерно 0 <= seed < 2^64.
        auto_truncate (bool): Обрізати M, якщо маса Q нескінченна.
    """
    m_spec: str
    n_values: Tuple[int, ...] = (10, 100, 1000)
    vector_families: Tuple[str, ...] = DEFAULT_FAMILIES
    mc_trials: int = DEFAULT_MC_TRIALS
    seed: int = DEFAULT_SEED
    auto_truncate: bool = True
    base_dir: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "vector_families", tuple(self.vector_families))
        if not isinstance(self.m_spec, str) or not self.m_spec:
            raise ConfigError("m_spec must be a non-empty string")
        if any(n < 1 for n in self.n_values):
            raise ConfigError(f"All n must be >= 1, got {list(self.n_values)}")
        if int(self.mc_trials) < 2:
            raise ConfigError(f"mc_trials must be >= 2, got {self.mc_trials}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        for family in self.vector_families:
            _parse_family(family)

    def build_function(self) -> OrliczFunction:
        return parse_m_spec(self.m_spec, self.base_dir)

    def to_dict(self) -> Dict:
        data = asdict(self)
        data.pop("base_dir")
        data["n_values"] = list(self.n_values)
        data["vector_families"] = list(self.vector_families)
        return data

    @classmethod
    def from_dict(cls, data: Dict, base_dir: Optional[str] = None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"Experiment config must be an object, got {type(data).__name__}")
        known = {"m_spec", "n_values", "vector_families", "mc_trials", "seed", "auto_truncate"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown config keys: {sorted(unknown)}")
        if "m_spec" not in data:
            raise ConfigError("Config is missing m_spec")
        kwargs = dict(data)
        kwargs.setdefault("seed", env_seed())
        try:
            return cls(base_dir=base_dir, **kwargs)
        except TypeError as e:
            raise ConfigError(f"Malformed config: {e}") from e


def load_config(path: Union[str, Path]) -> List[ExperimentConfig]:
    """
    Завантажує один або кілька конфігів з JSON-файлу.

    Файл може містити об'єкт, список об'єктів або {"experiments": [...]}.

    :raises ConfigError: якщо файл не читається або не відповідає схемі.
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e

    if isinstance(payload, dict) and "experiments" in payload:
        payload = payload["experiments"]
    items = payload if isinstance(payload, list) else [payload]
    configs = [ExperimentConfig.from_dict(item, base_dir=str(path.parent)) for item in items]
    logger.info(f"Loaded {len(configs)} experiment config(s) from {path}")
    return configs


def default_sweep(mc_trials: int = DEFAULT_MC_TRIALS, seed: int = DEFAULT_SEED,
                  n_values: Sequence[int] = (10, 100, 1000)) -> List[ExperimentConfig]:
    """Стандартний набір: power:1.5, power:2, power:3 та gaussian на п'яти сімействах."""
    return [
        ExperimentConfig(m_spec=m_spec, n_values=tuple(n_values), mc_trials=mc_trials, seed=seed)
        for m_spec in ("power:1.5", "power:2", "power:3", "gaussian")
    ]
