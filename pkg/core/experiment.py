"""
Перевірка двосторонньої оцінки c1·||x||_M <= E max|x_i X_i| <= c2·||x||_M
на наборі векторів та збереження звітів.
"""
from dataclasses import asdict, dataclass, field
import json
import logging
import math
import os
from itertools import product
from typing import Dict, List, Optional, Sequence

import pandas as pd
from tqdm import tqdm

from core.config_loader import ExperimentConfig, build_vector
from core.expectation import exact_emax, mc_emax
from core.inversion import invert
from core.numerics import RandomStream
from core.orlicz import orlicz_norm

logger = logging.getLogger(__name__)

# Потоки для генерації векторів відокремлені від потоків Монте-Карло.
VECTOR_STREAM_OFFSET = 2 ** 32
CONSISTENCY_SIGMAS = 4.0
CSV_FLOAT_FORMAT = "%.17g"


@dataclass
class EquivalenceRow:
    vector_label: str
    n: int
    norm_value: float
    emax_quadrature: float
    emax_mc: float
    mc_stderr: float
    ratio: float
    consistent: bool = True


@dataclass
class EquivalenceReport:
    """
    Звіт перевірки еквівалентності: по рядку на пару (вектор, n).

    c1_empirical / c2_empirical: мінімальне та максимальне відношення
    E max / ||x||_M; None, якщо рядків немає.
    """
    m_description: str
    dist_description: str
    seed: int
    rows: List[EquivalenceRow] = field(default_factory=list)
    config: Optional[Dict] = None

    @property
    def c1_empirical(self) -> Optional[float]:
        return min(r.ratio for r in self.rows) if self.rows else None

    @property
    def c2_empirical(self) -> Optional[float]:
        return max(r.ratio for r in self.rows) if self.rows else None

    @property
    def spread(self) -> Optional[float]:
        """Ширина вікна еквівалентності c2/c1."""
        if not self.rows:
            return None
        return self.c2_empirical / self.c1_empirical

    @property
    def all_consistent(self) -> bool:
        return all(r.consistent for r in self.rows)

    def merge(self, other: "EquivalenceReport") -> "EquivalenceReport":
        """Об'єднання часткових звітів (рядки конкатенуються, c1/c2 перераховуються)."""
        return EquivalenceReport(
            m_description=self.m_description,
            dist_description=self.dist_description,
            seed=self.seed,
            rows=self.rows + other.rows,
            config=self.config,
        )

    def to_frame(self) -> pd.DataFrame:
        columns = [f for f in EquivalenceRow.__dataclass_fields__]
        return pd.DataFrame([asdict(r) for r in self.rows], columns=columns)

    def to_dict(self) -> Dict:
        return {
            "m_description": self.m_description,
            "dist_description": self.dist_description,
            "seed": self.seed,
            "c1_empirical": self.c1_empirical,
            "c2_empirical": self.c2_empirical,
            "config": self.config,
            "rows": [asdict(r) for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EquivalenceReport":
        data = json.loads(text)
        return cls(
            m_description=data["m_description"],
            dist_description=data["dist_description"],
            seed=int(data["seed"]),
            rows=[EquivalenceRow(**row) for row in data["rows"]],
            config=data.get("config"),
        )


def _is_consistent(exact: float, estimate: float, stderr: float) -> bool:
    slack = 1e-9 * max(1.0, abs(exact))
    return bool(abs(estimate - exact) <= CONSISTENCY_SIGMAS * stderr + slack)


def run_equivalence(config: ExperimentConfig, progress: bool = False) -> EquivalenceReport:
    """
    Обертає M з конфігу, для кожного n та сімейства будує x і порівнює
    E max|x_i X_i| (квадратура та Монте-Карло) з ||x||_M̃, де M̃ позначає функцію,
    яку фактично обернено.

    Кожен рядок має власний потік RandomStream(seed, номер рядка).
    """
    M = config.build_function()
    dist, diagnostics = invert(M, auto_truncate=config.auto_truncate)
    inverted = diagnostics.function
    report = EquivalenceReport(
        m_description=inverted.describe(),
        dist_description=dist.describe(),
        seed=int(config.seed),
        config=config.to_dict(),
    )

    cells = list(product(config.n_values, config.vector_families))
    if not cells:
        logger.warning(f"Empty sweep for {config.m_spec}: no vector families or sizes")
        return report

    logger.info(f"Running equivalence check for {inverted.describe()} over {len(cells)} rows")
    for row_index, (n, family) in enumerate(tqdm(cells, desc=config.m_spec, disable=not progress)):
        x = build_vector(family, n, RandomStream(config.seed, VECTOR_STREAM_OFFSET + row_index))
        norm = float(orlicz_norm(inverted, x))
        exact = float(exact_emax(dist, x))
        estimate, stderr = mc_emax(dist, x, config.mc_trials, RandomStream(config.seed, row_index))
        row = EquivalenceRow(
            vector_label=family,
            n=n,
            norm_value=norm,
            emax_quadrature=exact,
            emax_mc=estimate,
            mc_stderr=stderr,
            ratio=exact / norm,
            consistent=_is_consistent(exact, estimate, stderr),
        )
        if not row.consistent:
            logger.warning(
                f"MC/quadrature mismatch for {family}, n={n}: "
                f"{estimate:.6g} vs {exact:.6g} (stderr {stderr:.2g})"
            )
        report.rows.append(row)

    logger.info(f"Finished {config.m_spec}: c1={report.c1_empirical:.6g}, c2={report.c2_empirical:.6g}")
    return report


class ExperimentRunner:
    """
    Запуск серії перевірок еквівалентності та збереження звітів у каталог результатів.
    """

    def __init__(self, results_dir: str = "results", progress: bool = True):
        """
        :param results_dir: Каталог для збереження звітів.
        :param progress: Показувати індикатор прогресу tqdm.
        """
        self.results_dir = results_dir
        self.progress = progress
        os.makedirs(results_dir, exist_ok=True)

    def run(self, config: ExperimentConfig) -> EquivalenceReport:
        return run_equivalence(config, progress=self.progress)

    def run_all(self, configs: Sequence[ExperimentConfig]) -> List[EquivalenceReport]:
        reports = []
        for config in configs:
            report = self.run(config)
            self.save_results(report, report_name(config))
            reports.append(report)
        if reports:
            self.compare_reports(reports)
        return reports

    def save_results(self, report: EquivalenceReport, name: str):
        """
        Зберігає звіт як <name>.csv (17 значущих цифр) та <name>.json.

        :raises OSError: якщо запис не вдався (помилку також записано в журнал).
        """
        try:
            csv_path = os.path.join(self.results_dir, f"{name}.csv")
            report.to_frame().to_csv(csv_path, index=False, float_format=CSV_FLOAT_FORMAT)
            json_path = os.path.join(self.results_dir, f"{name}.json")
            with open(json_path, "w", encoding="utf-8") as fh:
                fh.write(report.to_json())
            logger.info(f"Saved report: {csv_path}, {json_path}")
        except OSError as e:
            logger.error(f"Error saving results: {str(e)}")
            raise

    def compare_reports(self, reports: Sequence[EquivalenceReport]) -> pd.DataFrame:
        """
        Зведена таблиця c1, c2, c2/c1 по всіх звітах; записується у summary.csv.
        """
        if not reports:
            logger.warning("No reports to compare")
            return pd.DataFrame()
        summary = pd.DataFrame([
            {
                "m_description": r.m_description,
                "rows": len(r.rows),
                "c1_empirical": r.c1_empirical if r.rows else math.nan,
                "c2_empirical": r.c2_empirical if r.rows else math.nan,
                "spread": r.spread if r.rows else math.nan,
                "all_consistent": r.all_consistent,
            }
            for r in reports
        ])
        path = os.path.join(self.results_dir, "summary.csv")
        summary.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
        logger.info(f"Saved summary: {path}")
        return summary


def report_name(config: ExperimentConfig) -> str:
    """Ім'я файлу звіту з m_spec (без символів, недопустимих у шляхах)."""
    safe = "".join(c if c.isalnum() or c in "._-" else "_" for c in config.m_spec)
    return f"equivalence_{safe}"
