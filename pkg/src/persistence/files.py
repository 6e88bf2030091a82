"""Lectura y escritura de los ficheros del CLI (JSON de pesos/entradas/informes y CSV)."""

from __future__ import annotations

import csv
from collections.abc import Iterable, Sequence
from pathlib import Path

from src.models.attention import AttentionHeadWeights
from src.models.files import HeadEntry, InputFile, WeightsFile
from src.models.report import (
    SIMPLEX_CSV_HEADER,
    SWEEP_CSV_HEADER,
    TRACE_CSV_HEADER,
    ReportFile,
    SimplexTrialRow,
    SweepRow,
)
from src.models.training import TrainRecord, TrainTrace


def _fmt(value: float | int | bool | None) -> str:
    """17 cifras significativas: ida y vuelta sin pérdida para float64."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return f"{value:.17g}"


def _parse(value: str) -> str | None:
    return value if value != "" else None


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _read_csv(path: Path, header: Sequence[str]) -> list[dict[str, str | None]]:
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != tuple(header):
            raise ValueError(f"Cabecera inesperada en {path}: {reader.fieldnames}")
        return [{k: _parse(v) for k, v in row.items()} for row in reader]


# ── JSON ─────────────────────────────────────────────────────────


def read_weights(path: Path) -> WeightsFile:
    return WeightsFile.model_validate_json(path.read_text(encoding="utf-8"))


def write_weights(path: Path, heads: Sequence[AttentionHeadWeights]) -> None:
    if not heads:
        raise ValueError("No hay cabezas que escribir")
    doc = WeightsFile(
        model_dim=heads[0].model_dim,
        head_dim=heads[0].head_dim,
        heads=[HeadEntry.from_weights(w) for w in heads],
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(doc.model_dump_json(indent=2, exclude_none=True), encoding="utf-8")


def read_input(path: Path) -> InputFile:
    return InputFile.model_validate_json(path.read_text(encoding="utf-8"))


def write_input(path: Path, doc: InputFile) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(doc.model_dump_json(indent=2, exclude_none=True), encoding="utf-8")


def write_report(path: Path, report: ReportFile) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.model_dump_json(indent=2), encoding="utf-8")


def read_report(path: Path) -> ReportFile:
    return ReportFile.model_validate_json(path.read_text(encoding="utf-8"))


# ── CSV ──────────────────────────────────────────────────────────


def write_sweep_csv(path: Path, rows: Sequence[SweepRow]) -> None:
    _write_csv(
        path,
        SWEEP_CSV_HEADER,
        (
            (
                r.instance_id,
                r.n_tokens,
                r.model_dim,
                r.head_dim,
                r.exact,
                r.refined,
                r.refined_sqrt_n,
                r.specformer,
                r.castin,
                r.max_g1,
                r.max_sigma1,
            )
            for r in rows
        ),
    )


def read_sweep_csv(path: Path) -> list[SweepRow]:
    return [SweepRow.model_validate(row) for row in _read_csv(path, SWEEP_CSV_HEADER)]


def write_simplex_csv(path: Path, rows: Sequence[SimplexTrialRow]) -> None:
    _write_csv(
        path,
        SIMPLEX_CSV_HEADER,
        ((r.n, r.x1, r.g1, r.sigma1, r.sandwich_ok, r.ratio) for r in rows),
    )


def read_simplex_csv(path: Path) -> list[SimplexTrialRow]:
    return [SimplexTrialRow.model_validate(row) for row in _read_csv(path, SIMPLEX_CSV_HEADER)]


def write_trace_csv(path: Path, trace: TrainTrace) -> None:
    _write_csv(
        path,
        TRACE_CSV_HEADER,
        (
            (
                r.step,
                r.task_loss,
                r.jasmin_loss,
                r.train_accuracy,
                r.jacobian_norm,
                r.max_g1,
                r.mean_g1,
            )
            for r in trace.records
        ),
    )


def read_trace_csv(path: Path) -> TrainTrace:
    rows = _read_csv(path, TRACE_CSV_HEADER)
    return TrainTrace(records=[TrainRecord.model_validate(row) for row in rows])
