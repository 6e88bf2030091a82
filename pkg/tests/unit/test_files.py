"""Tests para la lectura/escritura de JSON y CSV."""

import json
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from src.linalg.spectral import make_rng
from src.models.attention import AttentionHeadWeights
from src.models.files import InputFile, WeightsFile
from src.models.report import SimplexTrialRow, SweepRow
from src.models.training import TrainRecord, TrainTrace
from src.persistence.files import (
    read_input,
    read_simplex_csv,
    read_sweep_csv,
    read_trace_csv,
    read_weights,
    write_input,
    write_simplex_csv,
    write_sweep_csv,
    write_trace_csv,
    write_weights,
)


# ── Helpers ──────────────────────────────────────────────────────


def _make_head(seed: int = 0, *, layer: int = 0, head: int = 0, bias: bool = False):
    rng = make_rng(seed)
    extra = {"bias_v": rng.standard_normal(2)} if bias else {}
    return AttentionHeadWeights(
        w_q=rng.standard_normal((3, 2)),
        w_k=rng.standard_normal((3, 2)),
        w_v=rng.standard_normal((3, 2)),
        layer=layer,
        head=head,
        **extra,
    )


def _make_weights_doc(**head_overrides) -> dict:
    head = {
        "layer": 0,
        "head": 1,
        "w_q": [[1.0, 0.0], [0.0, 1.0]],
        "w_k": [[1.0, 0.0], [0.0, 1.0]],
        "w_v": [[1.0, 0.0], [0.0, 1.0]],
    }
    head.update(head_overrides)
    return {"model_dim": 2, "head_dim": 2, "heads": [head]}


def _make_sweep_row(instance_id: int = 0, exact: float | None = 1.25) -> SweepRow:
    return SweepRow(
        instance_id=instance_id,
        n_tokens=4,
        model_dim=3,
        head_dim=2,
        exact=exact,
        refined=0.1,
        refined_sqrt_n=2.0 / 3.0,
        specformer=1e300,
        castin=3.5,
        max_g1=0.25,
        max_sigma1=0.2,
    )


# ── JSON ─────────────────────────────────────────────────────────


class TestWeightsFile:
    def test_ida_y_vuelta_exacta(self, tmp_path: Path) -> None:
        heads = [_make_head(1), _make_head(2, head=1, bias=True)]
        path = tmp_path / "weights.json"
        write_weights(path, heads)
        loaded = read_weights(path).to_weights()
        assert [(w.layer, w.head) for w in loaded] == [(0, 0), (0, 1)]
        for original, back in zip(heads, loaded, strict=True):
            np.testing.assert_array_equal(back.w_q, original.w_q)
            np.testing.assert_array_equal(back.w_v, original.w_v)
        np.testing.assert_array_equal(loaded[1].bias_v, heads[1].bias_v)
        assert loaded[0].bias_v is None

    def test_sesgos_ausentes_no_se_escriben(self, tmp_path: Path) -> None:
        path = tmp_path / "weights.json"
        write_weights(path, [_make_head()])
        assert "bias_q" not in json.loads(path.read_text())["heads"][0]

    def test_matriz_irregular_cita_la_cabeza(self) -> None:
        doc = _make_weights_doc(w_k=[[1.0, 0.0], [0.0]])
        with pytest.raises(ValidationError, match=r"\(layer=0, head=1\)"):
            WeightsFile.model_validate(doc)

    def test_forma_incorrecta(self) -> None:
        with pytest.raises(ValidationError, match="w_v"):
            WeightsFile.model_validate(_make_weights_doc(w_v=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))

    def test_sesgo_de_longitud_incorrecta(self) -> None:
        with pytest.raises(ValidationError, match="bias_q"):
            WeightsFile.model_validate(_make_weights_doc(bias_q=[1.0]))

    def test_cabeza_duplicada(self) -> None:
        doc = _make_weights_doc()
        doc["heads"].append(dict(doc["heads"][0]))
        with pytest.raises(ValidationError, match="duplicada"):
            WeightsFile.model_validate(doc)

    def test_sin_cabezas(self) -> None:
        with pytest.raises(ValidationError):
            WeightsFile.model_validate({"model_dim": 2, "head_dim": 2, "heads": []})


class TestInputFile:
    def test_radio_del_flag_tiene_prioridad(self, tmp_path: Path) -> None:
        path = tmp_path / "input.json"
        write_input(path, InputFile(x=[[3.0, 4.0], [0.0, 1.0]], radius=6.0))
        doc = read_input(path)
        assert doc.to_sequence().effective_radius == 6.0
        assert doc.to_sequence(radius=10.0).effective_radius == 10.0

    def test_irregular(self) -> None:
        with pytest.raises(ValidationError):
            InputFile(x=[[1.0, 2.0], [3.0]])

    def test_radio_negativo(self) -> None:
        with pytest.raises(ValidationError):
            InputFile(x=[[1.0]], radius=-1.0)


# ── CSV ──────────────────────────────────────────────────────────


class TestCsv:
    def test_barrido_ida_y_vuelta(self, tmp_path: Path) -> None:
        rows = [_make_sweep_row(0), _make_sweep_row(1, exact=None)]
        path = tmp_path / "sweep.csv"
        write_sweep_csv(path, rows)
        assert path.read_text().splitlines()[0] == (
            "instance_id,N,D,d,exact,ours_eq4,ours_appc,specformer,castin,max_g1,max_sigma1"
        )
        assert read_sweep_csv(path) == rows

    def test_barrido_lee_columnas_documentadas(self, tmp_path: Path) -> None:
        """Un CSV externo con las columnas ours_eq4/ours_appc se lee sin adaptar."""
        path = tmp_path / "external.csv"
        path.write_text(
            "instance_id,N,D,d,exact,ours_eq4,ours_appc,specformer,castin,max_g1,max_sigma1\n"
            "3,4,3,2,,1.5,2.5,9.0,4.0,0.25,0.2\n"
        )
        (row,) = read_sweep_csv(path)
        assert (row.refined, row.refined_sqrt_n, row.exact) == (1.5, 2.5, None)

    def test_barrido_vacio(self, tmp_path: Path) -> None:
        path = tmp_path / "sweep.csv"
        write_sweep_csv(path, [])
        assert len(path.read_text().splitlines()) == 1
        assert read_sweep_csv(path) == []

    def test_simplex_ida_y_vuelta(self, tmp_path: Path) -> None:
        rows = [
            SimplexTrialRow(n=3, x1=0.5, g1=0.4, sigma1=0.35, sandwich_ok=True, ratio=0.4 / 0.35),
            SimplexTrialRow(n=2, x1=1.0, g1=0.0, sigma1=0.0, sandwich_ok=False),
        ]
        path = tmp_path / "simplex.csv"
        write_simplex_csv(path, rows)
        assert "true" in path.read_text()
        assert read_simplex_csv(path) == rows

    def test_traza_ida_y_vuelta(self, tmp_path: Path) -> None:
        trace = TrainTrace(
            records=[
                TrainRecord(
                    step=s,
                    task_loss=0.1 * s,
                    jasmin_loss=-1.5,
                    train_accuracy=0.5,
                    jacobian_norm=None if s == 1 else 2.0 / 7.0,
                    max_g1=0.3,
                    mean_g1=0.2,
                )
                for s in (1, 2)
            ]
        )
        path = tmp_path / "trace.csv"
        write_trace_csv(path, trace)
        assert read_trace_csv(path) == trace

    def test_cabecera_inesperada(self, tmp_path: Path) -> None:
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="Cabecera"):
            read_sweep_csv(path)
