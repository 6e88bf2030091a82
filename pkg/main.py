"""Entry point del CLI de certificación Lipschitz de la atención.

Uso:
    uv run python main.py certify --weights w.json --input x.json --out report.json
    uv run python main.py simplex-check --n 32 --trials 10000 --out simplex.csv
    uv run python main.py bounds-sweep --instances 100 --dims 8,4,2 --out sweep.csv
    uv run python main.py train-demo --steps 200 --lambda 0.1 --k 0 --out trace.csv

Códigos de salida: 0 ok, 1 I/O, 2 validación, 3 capacidad, 4 divergencia.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence

import structlog
from pydantic import ValidationError

from config.logging import setup_logging
from config.settings import settings
from src import __version__
from src.commands import bounds_sweep, certify, simplex_check, train_demo
from src.errors import EXIT_IO, EXIT_VALIDATION, CertificationError

logger = structlog.get_logger()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attn-lipcert",
        description="Certificación de la constante de Lipschitz de la auto-atención",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (certify, simplex_check, bounds_sweep, train_demo):
        command.add_parser(subparsers)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Ejecuta un subcomando y traduce las excepciones a códigos de salida."""
    args = build_parser().parse_args(argv)
    setup_logging(settings.log_level)

    log = logger.bind(command=args.command)
    log.info("cli_started")
    try:
        code = args.handler(args)
    except FileNotFoundError as exc:
        log.error("file_not_found", path=exc.filename)
        print(f"error: no existe el fichero {exc.filename}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        log.error("io_error", path=exc.filename, error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        log.error("invalid_input", errors=exc.error_count())
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CertificationError as exc:
        log.error("command_failed", error_type=type(exc).__name__, error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code

    log.info("cli_finished", exit_code=code)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
