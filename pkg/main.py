"""
Командний рядок бібліотеки: норма, обернення, вибірка, пряме відображення,
перевірка повернення, перевірка еквівалентності та дискретна конструкція.

Приклади:
    python main.py norm --m power:2 --x 3,4
    python main.py sample --m gaussian --count 1000 --seed 7
    python main.py verify --config sweep.json --out report.json --format json
"""
import argparse
from dataclasses import replace
import json
import logging
import os
import sys
from typing import Dict, List, Optional, Sequence, Union

import pandas as pd
from dotenv import load_dotenv

from core.config_loader import default_sweep, env_seed, load_config, parse_m_spec, parse_tail_spec
from core.discrete_ks import ks_sequence, permutation_average_exact, permutation_average_sampled
from core.errors import OrliczError
from core.experiment import EquivalenceReport, ExperimentRunner, run_equivalence
from core.forward_map import forward_table, roundtrip_residual
from core.inversion import invert, inversion_table, sample
from core.numerics import RandomStream
from core.orlicz import NORM_REL_TOL, orlicz_norm

load_dotenv()

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
FLOAT_FORMAT = "%.17g"
ROUNDTRIP_THRESHOLD = 1e-4

Output = Union[pd.DataFrame, Dict, List, float]


def _parse_vector(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"Bad vector {text!r}: {e}") from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="Output file (stdout if omitted)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=None, help="Random seed (default: ORLICZ_SEED)")
    common.add_argument("--tol", type=float, default=NORM_REL_TOL, help="Relative tolerance of norm bisection")
    common.add_argument("--log-level", default=os.getenv("ORLICZ_LOG_LEVEL", "WARNING"))
    common.add_argument("--quiet", action="store_true", help="Disable progress bars")

    parser = argparse.ArgumentParser(prog="orlicz", description="Orlicz function inversion toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", parents=[common], help="Orlicz norm of a vector")
    p.add_argument("--m", required=True, dest="m_spec")
    p.add_argument("--x", required=True, type=_parse_vector)

    p = sub.add_parser("invert", parents=[common], help="Tail/density/cdf table of the inverted law")
    p.add_argument("--m", required=True, dest="m_spec")
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--no-truncate", action="store_true")

    p = sub.add_parser("sample", parents=[common], help="Draw samples of the inverted law")
    p.add_argument("--m", required=True, dest="m_spec")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)

    p = sub.add_parser("forward", parents=[common], help="Orlicz function generated by a law")
    p.add_argument("--tail", required=True)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--method", choices=("exchanged", "nested"), default="exchanged")

    p = sub.add_parser("roundtrip", parents=[common], help="Max relative residual of M -> X -> M")
    p.add_argument("--m", required=True, dest="m_spec")
    p.add_argument("--grid", type=int, default=64)

    p = sub.add_parser("verify", parents=[common], help="Equivalence sweep E max vs norm")
    p.add_argument("--config", help="JSON config (default sweep if omitted)")
    p.add_argument("--trials", type=int, default=None, help="Override mc_trials")
    p.add_argument("--results-dir", default=os.getenv("ORLICZ_RESULTS_DIR"))

    p = sub.add_parser("discrete", parents=[common], help="Discrete sequence and permutation average")
    p.add_argument("--m", required=True, dest="m_spec")
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--x", required=True, type=_parse_vector)
    p.add_argument("--samples", type=int, default=0, help="Use k sampled permutations instead of all n!")
    return parser


def configure_logging(level: str):
    logging.basicConfig(level=logging.WARNING, format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger().setLevel(level.upper())


def _render(result: Output, fmt: str) -> str:
    if fmt == "json":
        if isinstance(result, pd.DataFrame):
            result = result.astype(object).where(result.notna(), None).to_dict(orient="records")
        return json.dumps(result, indent=2, sort_keys=True) + "\n"
    if isinstance(result, pd.DataFrame):
        return "" if result.empty else result.to_csv(index=False, float_format=FLOAT_FORMAT)
    if isinstance(result, dict):
        frame = pd.DataFrame({"key": list(result), "value": list(result.values())})
        return frame.to_csv(index=False, float_format=FLOAT_FORMAT)
    return FLOAT_FORMAT % result + "\n"


def emit(result: Output, args: argparse.Namespace):
    """Записує результат у --out або stdout у форматі --format."""
    text = _render(result, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        logger.info(f"Wrote {args.out}")
    else:
        sys.stdout.write(text)


def cmd_norm(args) -> Output:
    value = orlicz_norm(parse_m_spec(args.m_spec), args.x, rel_tol=args.tol)
    return {"norm": value} if args.format == "json" else value


def cmd_invert(args) -> Output:
    dist, _ = invert(parse_m_spec(args.m_spec), auto_truncate=not args.no_truncate)
    return inversion_table(dist, args.grid)


def cmd_sample(args) -> Output:
    dist, _ = invert(parse_m_spec(args.m_spec))
    values = sample(dist, RandomStream(args.seed, args.stream), args.count)
    return pd.DataFrame({"x": values})


def cmd_forward(args) -> Output:
    return forward_table(parse_tail_spec(args.tail), args.grid, method=args.method)


def cmd_roundtrip(args) -> Output:
    residual = roundtrip_residual(parse_m_spec(args.m_spec), points=args.grid)
    if residual > ROUNDTRIP_THRESHOLD:
        logger.warning(f"Round-trip residual {residual:.3e} exceeds {ROUNDTRIP_THRESHOLD:g}")
    return {"residual": residual} if args.format == "json" else residual


def cmd_verify(args) -> Output:
    configs = load_config(args.config) if args.config else default_sweep(seed=args.seed)
    if args.trials is not None:
        configs = [replace(c, mc_trials=args.trials) for c in configs]
    if args.results_dir:
        reports = ExperimentRunner(args.results_dir, progress=not args.quiet).run_all(configs)
    else:
        reports = [run_equivalence(c, progress=not args.quiet) for c in configs]

    if args.format == "json":
        payload = [r.to_dict() for r in reports]
        return payload[0] if len(payload) == 1 else payload
    frames = [_report_frame(r) for r in reports]
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()


def _report_frame(report: EquivalenceReport) -> pd.DataFrame:
    frame = report.to_frame()
    frame.insert(0, "m_description", report.m_description)
    return frame


def cmd_discrete(args) -> Output:
    M = parse_m_spec(args.m_spec)
    seq = ks_sequence(M, args.n)
    if args.samples:
        average, stderr = permutation_average_sampled(args.x, seq, args.samples, RandomStream(args.seed, 0))
    else:
        average, stderr = permutation_average_exact(args.x, seq), 0.0
    norm = orlicz_norm(M, args.x, rel_tol=args.tol)
    result = {
        "a": list(seq.a),
        "permutation_average": average,
        "stderr": stderr,
        "norm": norm,
        "ratio": average / norm if norm > 0 else None,
    }
    if args.format == "json":
        return result
    flat = {f"a_{i + 1}": v for i, v in enumerate(seq.a)}
    flat.update({k: v for k, v in result.items() if k != "a"})
    return flat


COMMANDS = {
    "norm": cmd_norm,
    "invert": cmd_invert,
    "sample": cmd_sample,
    "forward": cmd_forward,
    "roundtrip": cmd_roundtrip,
    "verify": cmd_verify,
    "discrete": cmd_discrete,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Точка входу командного рядка.

    :param argv: Аргументи без імені програми.
    :return: 0 при успіху, 1 при помилці обчислення або вводу-виводу, 2 при помилці використання.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        configure_logging(args.log_level)
    except ValueError:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"orlicz: error: unknown log level {args.log_level!r}\n")
        return 2

    try:
        if args.seed is None:
            args.seed = env_seed()
        result = COMMANDS[args.command](args)
        emit(result, args)
    except (OrliczError, OSError) as e:
        logger.error(f"{args.command} failed: {str(e)}")
        sys.stderr.write(f"error: {e}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
