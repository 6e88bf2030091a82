"""Comando `certify`: todas las cotas de un fichero de pesos sobre una entrada."""

from __future__ import annotations

import argparse
from pathlib import Path

import structlog

from config.settings import settings
from src.errors import EXIT_CAPACITY, DimensionError
from src.models.report import ReportFile, RunMetadata
from src.persistence.files import read_input, read_weights, write_report
from src.services.bounds import CertifyOptions, certify

logger = structlog.get_logger()


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("certify", help="Certificar las cabezas de un fichero de pesos")
    parser.add_argument("--weights", type=Path, required=True, help="JSON de pesos")
    parser.add_argument("--input", type=Path, required=True, help="JSON con la entrada X")
    parser.add_argument("--radius", type=float, default=None, help="Radio R de las filas de X")
    parser.add_argument(
        "--ball-radius",
        type=float,
        default=0.0,
        help="Radio de la bola de la cota Specformer (0 = puntual)",
    )
    parser.add_argument("--exact", choices=("on", "off"), default="on")
    parser.add_argument("--out", type=Path, required=True, help="JSON del informe")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    weights = read_weights(args.weights)
    x = read_input(args.input).to_sequence(args.radius)
    if x.model_dim != weights.model_dim:
        raise DimensionError(
            f"La entrada tiene D={x.model_dim}, los pesos declaran D={weights.model_dim}"
        )

    opts = CertifyOptions(
        exact=args.exact == "on",
        ball_radius=args.ball_radius,
        tol=settings.power_tol,
        max_iter=settings.power_max_iter,
        seed=settings.power_seed,
        entry_budget=settings.dense_entry_budget,
    )
    report = certify(x, weights.to_weights(), opts)
    metadata = RunMetadata(
        seed=opts.seed,
        power_tol=opts.tol,
        power_max_iter=opts.max_iter,
        dense_entry_budget=opts.entry_budget,
        ball_radius=opts.ball_radius,
        exact=opts.exact,
    )
    write_report(args.out, ReportFile(metadata=metadata, certification=report))
    logger.info("report_written", path=str(args.out), heads=len(report.heads))

    if report.capacity_exceeded:
        logger.warning("exact_norm_over_budget", budget=opts.entry_budget)
        return EXIT_CAPACITY
    return 0
