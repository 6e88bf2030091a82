"""Comando `simplex-check`: barrido del entrelazado sobre vectores Dirichlet(1)."""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
import structlog

from config.settings import settings
from src.checks.base import SimplexInstance
from src.errors import EXIT_VALIDATION
from src.linalg.spectral import make_rng
from src.models.enums import CheckName
from src.models.report import SimplexTrialRow
from src.persistence.files import write_simplex_csv
from src.pipeline.engine import SweepEngine
from src.pipeline.registry import build_simplex_checks
from src.services.softmax_analysis import sample_simplex

logger = structlog.get_logger()


def _at_least(minimum: int):
    def parse(value: str) -> int:
        number = int(value)
        if number < minimum:
            raise argparse.ArgumentTypeError(f"debe ser >= {minimum}, recibido {number}")
        return number

    return parse


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("simplex-check", help="Barrido del sándwich de entrelazado")
    parser.add_argument("--n", type=_at_least(2), required=True, help="n máximo (n ∈ [2, n])")
    parser.add_argument("--trials", type=_at_least(1), required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, required=True, help="CSV por ensayo")
    parser.set_defaults(handler=run)


def generate_instances(max_n: int, trials: int, seed: int) -> list[SimplexInstance]:
    """Todas las muestras salen en serie de un único generador Philox."""
    rng = make_rng(seed)
    instances = []
    for i in range(trials):
        n = int(rng.integers(2, max_n + 1))
        instances.append(SimplexInstance(instance_id=i, probs=sample_simplex(rng, n, 1)[0]))
    return instances


def run(args: argparse.Namespace) -> int:
    instances = generate_instances(args.n, args.trials, args.seed)
    outcome = SweepEngine(settings.threads).run(instances, build_simplex_checks(), "simplex")

    rows = []
    for result in outcome.instances:
        sandwich = result.data.get("sandwich")
        if sandwich is None:
            continue
        rows.append(
            SimplexTrialRow(
                n=len(sandwich.levels),
                x1=sandwich.ordinal_stats[0],
                g1=sandwich.g_values[0],
                sigma1=sandwich.exact_singular_values[0],
                sandwich_ok=result.results[CheckName.INTERLACING.value].success,
                ratio=result.data.get("ratio"),
            )
        )
    write_simplex_csv(args.out, rows)

    ratios = np.array([r.ratio for r in rows if r.ratio is not None])
    if ratios.size:
        logger.info(
            "ratio_distribution",
            min=float(ratios.min()),
            median=float(np.median(ratios)),
            max=float(ratios.max()),
        )
    logger.info("simplex_check_written", path=str(args.out), rows=len(rows))
    return 0 if outcome.passed else EXIT_VALIDATION
