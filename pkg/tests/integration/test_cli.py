"""Tests de extremo a extremo de los subcomandos del CLI."""

import json
from pathlib import Path

import pytest

import main
from config.settings import settings
from src.persistence.files import read_report, read_simplex_csv, read_sweep_csv, read_trace_csv


# ── Helpers ──────────────────────────────────────────────────────


def _make_files(tmp_path: Path, *, ragged: bool = False) -> tuple[Path, Path]:
    w_k = [[0.5, 0.0], [0.0]] if ragged else [[0.5, 0.0], [0.1, 0.5]]
    weights = {
        "model_dim": 2,
        "head_dim": 2,
        "heads": [
            {
                "layer": 0,
                "head": 0,
                "w_q": [[0.5, -0.2], [0.3, 0.4]],
                "w_k": w_k,
                "w_v": [[1.0, 0.0], [0.2, 0.7]],
            }
        ],
    }
    weights_path = tmp_path / "weights.json"
    weights_path.write_text(json.dumps(weights))
    input_path = tmp_path / "input.json"
    input_path.write_text(json.dumps({"x": [[1.0, 0.5], [-0.3, 0.8], [0.2, -1.1]]}))
    return weights_path, input_path


def _certify_args(weights: Path, inp: Path, out: Path) -> list[str]:
    return ["certify", "--weights", str(weights), "--input", str(inp), "--out", str(out)]


# ── certify ──────────────────────────────────────────────────────


class TestCertify:
    def test_entrada_valida(self, tmp_path: Path) -> None:
        weights, inp = _make_files(tmp_path)
        out = tmp_path / "report.json"
        assert main.run(_certify_args(weights, inp, out)) == 0
        report = read_report(out)
        head = report.certification.heads[0]
        assert head.exact is not None
        assert head.refined >= head.exact * (1 - 1e-6)
        assert report.metadata.exact is True

    def test_fichero_inexistente(self, tmp_path: Path, capsys) -> None:
        _, inp = _make_files(tmp_path)
        missing = tmp_path / "nope.json"
        assert main.run(_certify_args(missing, inp, tmp_path / "r.json")) == 1
        assert str(missing) in capsys.readouterr().err

    def test_pesos_irregulares(self, tmp_path: Path) -> None:
        weights, inp = _make_files(tmp_path, ragged=True)
        assert main.run(_certify_args(weights, inp, tmp_path / "r.json")) == 2

    def test_radio_menor_que_las_filas(self, tmp_path: Path) -> None:
        weights, inp = _make_files(tmp_path)
        args = _certify_args(weights, inp, tmp_path / "r.json") + ["--radius", "0.1"]
        assert main.run(args) == 2

    def test_capacidad_excedida(self, tmp_path: Path, monkeypatch) -> None:
        monkeypatch.setattr(settings, "dense_entry_budget", 10)
        weights, inp = _make_files(tmp_path)
        out = tmp_path / "report.json"
        assert main.run(_certify_args(weights, inp, out)) == 3
        report = read_report(out)
        assert report.certification.capacity_exceeded
        assert report.certification.heads[0].exact is None

    def test_exact_off(self, tmp_path: Path) -> None:
        weights, inp = _make_files(tmp_path)
        out = tmp_path / "report.json"
        assert main.run(_certify_args(weights, inp, out) + ["--exact", "off"]) == 0
        assert read_report(out).certification.heads[0].exact is None


# ── Barridos ─────────────────────────────────────────────────────


class TestSimplexCheck:
    def test_barrido_pequeno(self, tmp_path: Path) -> None:
        out = tmp_path / "simplex.csv"
        assert main.run(["simplex-check", "--n", "6", "--trials", "40", "--out", str(out)]) == 0
        rows = read_simplex_csv(out)
        assert len(rows) == 40
        assert all(2 <= r.n <= 6 for r in rows)

    def test_n_invalido(self, tmp_path: Path) -> None:
        with pytest.raises(SystemExit) as exc_info:
            main.run(["simplex-check", "--n", "1", "--trials", "5", "--out", str(tmp_path / "s.csv")])
        assert exc_info.value.code == 2


class TestBoundsSweep:
    def test_cero_instancias(self, tmp_path: Path) -> None:
        out = tmp_path / "sweep.csv"
        assert main.run(["bounds-sweep", "--instances", "0", "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 1

    def test_dimensiones_fijas(self, tmp_path: Path) -> None:
        out = tmp_path / "sweep.csv"
        args = ["bounds-sweep", "--instances", "5", "--dims", "4,3,2", "--out", str(out)]
        assert main.run(args) == 0
        rows = read_sweep_csv(out)
        assert [r.instance_id for r in rows] == list(range(5))
        assert all((r.n_tokens, r.model_dim, r.head_dim) == (4, 3, 2) for r in rows)
        assert all(r.refined >= r.exact * (1 - 1e-6) for r in rows)

    def test_misma_semilla_mismo_fichero(self, tmp_path: Path) -> None:
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            main.run(["bounds-sweep", "--instances", "3", "--seed", "7", "--out", str(out)])
        assert a.read_text() == b.read_text()

    def test_dims_invalidas(self, tmp_path: Path) -> None:
        with pytest.raises(SystemExit) as exc_info:
            main.run(["bounds-sweep", "--instances", "1", "--dims", "4,x", "--out", str(tmp_path / "s.csv")])
        assert exc_info.value.code == 2


# ── train-demo ───────────────────────────────────────────────────


class TestTrainDemo:
    _SMALL = [
        "--samples", "8",
        "--tokens", "4",
        "--model-dim", "4",
        "--heads", "2",
        "--steps", "4",
        "--measure-every", "2",
        "--probes", "2",
    ]

    def test_k_igual_a_uno(self, tmp_path: Path) -> None:
        args = ["train-demo", "--k", "1", "--out", str(tmp_path / "t.csv"), *self._SMALL]
        assert main.run(args) == 2

    def test_ejecucion_pequena(self, tmp_path: Path, capsys) -> None:
        out = tmp_path / "trace.csv"
        args = ["train-demo", "--lambda", "0.1", "--k", "2", "--out", str(out), *self._SMALL]
        assert main.run(args) == 0
        trace = read_trace_csv(out)
        assert [r.step for r in trace.records] == [1, 2, 3, 4]
        assert [r.jacobian_norm is not None for r in trace.records] == [False, True, False, True]
        stdout = capsys.readouterr().out
        assert stdout.startswith("final_accuracy=")
        assert "final_median_jacobian_norm=" in stdout
