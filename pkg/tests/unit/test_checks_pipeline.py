"""Tests para los checks de propiedades y el SweepEngine."""

import numpy as np

from src.checks.base import BaseCheck, BoundInstance, CheckContext, CheckResult, SimplexInstance
from src.checks.bounds import SoundnessCheck, StochasticNormCheck
from src.checks.simplex import InterlacingCheck, RatioAtLeastOneCheck, UpperHalfCheck
from src.linalg.spectral import make_rng
from src.models.attention import AttentionHeadWeights, InputSequence
from src.models.enums import CheckName
from src.pipeline.engine import SweepEngine
from src.pipeline.registry import build_bound_checks, build_simplex_checks
from src.services.bounds import CertifyOptions
from src.services.softmax_analysis import sample_simplex


# ── Helpers ──────────────────────────────────────────────────────


def _make_simplex_instances(count: int = 8, seed: int = 0) -> list[SimplexInstance]:
    rng = make_rng(seed)
    return [
        SimplexInstance(instance_id=i, probs=sample_simplex(rng, 2 + i % 5, 1)[0])
        for i in range(count)
    ]


def _make_bound_instance(instance_id: int = 0, seed: int = 0) -> BoundInstance:
    rng = make_rng(seed)
    return BoundInstance(
        instance_id=instance_id,
        x=InputSequence(rng.standard_normal((4, 3))),
        weights=AttentionHeadWeights(
            w_q=rng.standard_normal((3, 2)),
            w_k=rng.standard_normal((3, 2)),
            w_v=rng.standard_normal((3, 2)),
        ),
    )


class _FailingCheck(BaseCheck):
    @property
    def name(self) -> CheckName:
        return CheckName.UPPER_HALF

    def execute(self, ctx: CheckContext) -> CheckResult:
        return CheckResult(success=False, error="Error simulado")


class _ExplodingCheck(BaseCheck):
    @property
    def name(self) -> CheckName:
        return CheckName.RATIO_AT_LEAST_ONE

    def execute(self, ctx: CheckContext) -> CheckResult:
        raise RuntimeError("boom")


# ── Checks de símplex ────────────────────────────────────────────


class TestSimplexChecks:
    def test_todos_pasan(self) -> None:
        ctx = CheckContext(instance=_make_simplex_instances(1)[0])
        for check in build_simplex_checks():
            assert check.run(ctx).success
        assert "sandwich" in ctx.data
        assert ctx.data["ratio"] >= 1.0 - 1e-10

    def test_cociente_no_aplica_en_one_hot(self) -> None:
        ctx = CheckContext(instance=SimplexInstance(0, np.array([0.0, 1.0])))
        result = RatioAtLeastOneCheck().run(ctx)
        assert result.success
        assert result.data == {"skipped": True}
        assert "ratio" not in ctx.data

    def test_upper_half(self) -> None:
        ctx = CheckContext(instance=SimplexInstance(0, np.array([0.5, 0.5])))
        result = UpperHalfCheck().run(ctx)
        assert result.success
        assert result.data["g1"] == 0.5

    def test_holgura_negativa_detecta_la_igualdad(self) -> None:
        """Con holgura negativa la igualdad x_(1) = g₁ del caso (1/2, 1/2) cuenta como fallo."""
        ctx = CheckContext(instance=SimplexInstance(0, np.array([0.5, 0.5])))
        result = InterlacingCheck(slack=-1e-3).run(ctx)
        assert not result.success
        assert result.error


# ── Checks de cotas ──────────────────────────────────────────────


class TestBoundChecks:
    def test_todos_pasan_y_comparten_informe(self) -> None:
        ctx = CheckContext(instance=_make_bound_instance())
        for check in build_bound_checks(CertifyOptions()):
            assert check.run(ctx).success, check.name
        assert ctx.data["report"].exact is not None
        assert ctx.data["capacity_exceeded"] is False

    def test_solidez_no_aplica_sin_norma_exacta(self) -> None:
        ctx = CheckContext(instance=_make_bound_instance())
        result = SoundnessCheck(CertifyOptions(exact=False)).run(ctx)
        assert result.data == {"skipped": True}

    def test_norma_estocastica(self) -> None:
        ctx = CheckContext(instance=_make_bound_instance(seed=3))
        assert StochasticNormCheck().run(ctx).success


# ── Engine ───────────────────────────────────────────────────────


class TestSweepEngine:
    def test_todas_las_instancias_pasan(self) -> None:
        outcome = SweepEngine().run(_make_simplex_instances(), build_simplex_checks(), "simplex")
        assert outcome.passed
        assert [o.instance_id for o in outcome.instances] == list(range(8))
        assert all("sandwich" in o.data for o in outcome.instances)

    def test_fallo_se_registra_y_continua(self) -> None:
        instances = _make_simplex_instances(3)
        checks = [InterlacingCheck(), _FailingCheck()]
        outcome = SweepEngine().run(instances, checks, "simplex")
        assert not outcome.passed
        assert outcome.failures == [
            (i, CheckName.UPPER_HALF.value, "Error simulado") for i in range(3)
        ]
        assert all(o.results[CheckName.INTERLACING.value].success for o in outcome.instances)

    def test_excepcion_cuenta_como_fallo(self) -> None:
        outcome = SweepEngine().run(_make_simplex_instances(2), [_ExplodingCheck()], "simplex")
        assert len(outcome.failures) == 2
        assert "boom" in outcome.failures[0][2]

    def test_hilos_no_cambian_el_resultado(self) -> None:
        instances = [_make_bound_instance(i, seed=i) for i in range(6)]
        opts = CertifyOptions()
        serial = SweepEngine(1).run(instances, build_bound_checks(opts), "bounds")
        parallel = SweepEngine(4).run(instances, build_bound_checks(opts), "bounds")
        assert [o.instance_id for o in parallel.instances] == list(range(6))
        assert [o.data["report"] for o in serial.instances] == [
            o.data["report"] for o in parallel.instances
        ]

    def test_sin_instancias(self) -> None:
        outcome = SweepEngine(2).run([], build_simplex_checks(), "simplex")
        assert outcome.passed
        assert outcome.instances == []
