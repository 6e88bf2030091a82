"""Comando `train-demo`: entrena el modelo de juguete y vuelca la traza a CSV."""

from __future__ import annotations

import argparse
from pathlib import Path

import structlog

from config.settings import settings
from src.models.enums import Aggregation
from src.models.jasmin import JasminConfig
from src.models.training import ToyModel
from src.persistence.files import write_trace_csv
from src.services.trainer import generate_synthetic_dataset, train

logger = structlog.get_logger()


def parse_coefficients(value: str) -> tuple[float, float, float]:
    """'c_q,c_k,c_v'."""
    try:
        coefs = tuple(float(p) for p in value.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"coeficientes inválidos: {value!r}") from exc
    if len(coefs) != 3 or any(c < 0 for c in coefs):
        raise argparse.ArgumentTypeError(f"se esperaban tres coeficientes >= 0: {value!r}")
    return coefs  # type: ignore[return-value]


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("train-demo", help="Demo de entrenamiento con JaSMin")
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--lambda", dest="lambda_", type=float, default=0.0)
    parser.add_argument("--k", type=int, default=0, help="0: log g₁; k >= 2: log g₁/g_k")
    parser.add_argument("--agg", choices=[a.value for a in Aggregation], default="max")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, required=True, help="CSV de la traza")
    parser.add_argument("--samples", type=int, default=128)
    parser.add_argument("--tokens", type=int, default=12)
    parser.add_argument("--model-dim", type=int, default=8)
    parser.add_argument("--heads", type=int, default=2)
    parser.add_argument("--layers", type=int, default=1)
    parser.add_argument("--classes", type=int, default=2)
    parser.add_argument("--lr", type=float, default=0.1)
    parser.add_argument("--measure-every", type=int, default=settings.measure_every)
    parser.add_argument("--probes", type=int, default=settings.probe_count)
    parser.add_argument(
        "--specformer",
        type=parse_coefficients,
        default=None,
        help="Penalización Specformer c_q,c_k,c_v (desactivada por defecto)",
    )
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    cfg = JasminConfig(
        k=args.k,
        lambda_=args.lambda_,
        aggregation=Aggregation(args.agg),
        epsilon=settings.jasmin_epsilon,
    )
    # Semillas derivadas de --seed: dataset, pesos iniciales y sondas
    dataset = generate_synthetic_dataset(
        args.seed, args.samples, args.tokens, args.model_dim, args.classes
    )
    model = ToyModel.initialize(
        args.seed + 1,
        n_tokens=args.tokens,
        model_dim=args.model_dim,
        heads=args.heads,
        layers=args.layers,
        classes=args.classes,
    )
    _, trace = train(
        model,
        dataset,
        cfg,
        steps=args.steps,
        lr=args.lr,
        seed=args.seed + 2,
        measure_every=args.measure_every,
        probe_count=args.probes,
        specformer=args.specformer,
        tol=settings.power_tol,
        max_iter=settings.power_max_iter,
        entry_budget=settings.dense_entry_budget,
        fd_step=settings.fd_step,
    )
    write_trace_csv(args.out, trace)
    logger.info("trace_written", path=str(args.out), rows=len(trace.records))
    print(
        f"final_accuracy={trace.final.train_accuracy:.6f} "
        f"final_median_jacobian_norm={trace.final_jacobian_norm:.6f}"
    )
    return 0
