"""Comando `bounds-sweep`: solidez y nitidez de las cotas sobre instancias aleatorias."""

from __future__ import annotations

import argparse
from pathlib import Path

import structlog

from config.settings import settings
from src.checks.base import BoundInstance
from src.errors import EXIT_VALIDATION
from src.linalg.spectral import make_rng
from src.models.attention import AttentionHeadWeights, InputSequence
from src.models.report import SweepRow
from src.persistence.files import write_sweep_csv
from src.pipeline.engine import SweepEngine
from src.pipeline.registry import build_bound_checks
from src.services.bounds import CertifyOptions

logger = structlog.get_logger()

# Rangos de dimensiones cuando no se fija --dims
RANDOM_TOKENS = (3, 8)
RANDOM_MODEL_DIM = (2, 8)
RANDOM_HEAD_DIM = (1, 4)


def parse_dims(value: str) -> tuple[int, int, int]:
    """'N,D,d' con tres enteros positivos."""
    parts = value.split(",")
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"dims inválidas: {value!r}") from exc
    if len(dims) != 3 or any(v < 1 for v in dims):
        raise argparse.ArgumentTypeError(f"se esperaban tres enteros positivos N,D,d: {value!r}")
    return dims  # type: ignore[return-value]


def _non_negative(value: str) -> int:
    number = int(value)
    if number < 0:
        raise argparse.ArgumentTypeError(f"debe ser >= 0, recibido {number}")
    return number


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("bounds-sweep", help="Barrido de cotas vs norma exacta")
    parser.add_argument("--instances", type=_non_negative, required=True)
    parser.add_argument(
        "--dims",
        type=parse_dims,
        default=None,
        help="N,D,d fijos; sin él se sortean por instancia",
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, required=True, help="CSV del barrido")
    parser.set_defaults(handler=run)


def generate_instances(
    count: int, dims: tuple[int, int, int] | None, seed: int
) -> list[BoundInstance]:
    """X y W_Q, W_K, W_V con entradas N(0, 1), generadas en serie."""
    rng = make_rng(seed)
    instances = []
    for i in range(count):
        if dims is None:
            n = int(rng.integers(RANDOM_TOKENS[0], RANDOM_TOKENS[1] + 1))
            d_model = int(rng.integers(RANDOM_MODEL_DIM[0], RANDOM_MODEL_DIM[1] + 1))
            d = int(rng.integers(RANDOM_HEAD_DIM[0], RANDOM_HEAD_DIM[1] + 1))
        else:
            n, d_model, d = dims
        x = InputSequence(rng.standard_normal((n, d_model)))
        w = AttentionHeadWeights(
            w_q=rng.standard_normal((d_model, d)),
            w_k=rng.standard_normal((d_model, d)),
            w_v=rng.standard_normal((d_model, d)),
        )
        instances.append(BoundInstance(instance_id=i, x=x, weights=w))
    return instances


def run(args: argparse.Namespace) -> int:
    opts = CertifyOptions(
        exact=True,
        tol=settings.power_tol,
        max_iter=settings.power_max_iter,
        seed=settings.power_seed,
        entry_budget=settings.dense_entry_budget,
    )
    instances = generate_instances(args.instances, args.dims, args.seed)
    outcome = SweepEngine(settings.threads).run(instances, build_bound_checks(opts), "bounds")

    rows = []
    for instance, result in zip(instances, outcome.instances, strict=True):
        report = result.data.get("report")
        if report is None:
            continue
        rows.append(
            SweepRow(
                instance_id=instance.instance_id,
                n_tokens=instance.x.n_tokens,
                model_dim=instance.x.model_dim,
                head_dim=instance.weights.head_dim,
                exact=report.exact,
                refined=report.refined,
                refined_sqrt_n=report.refined_sqrt_n,
                specformer=report.specformer,
                castin=report.castin,
                max_g1=report.ingredients.max_g1,
                max_sigma1=report.ingredients.max_softmax_sigma,
            )
        )
    write_sweep_csv(args.out, rows)
    logger.info("bounds_sweep_written", path=str(args.out), rows=len(rows))
    return 0 if outcome.passed else EXIT_VALIDATION
