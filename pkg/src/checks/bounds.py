"""Checks de solidez y nitidez de las cotas sobre instancias aleatorias."""

from __future__ import annotations

import numpy as np

from src.checks.base import BaseCheck, BoundInstance, CheckContext, CheckResult
from src.models.enums import CheckName
from src.models.report import SOUNDNESS_REL_SLACK, BoundReport
from src.services.bounds import CertifyOptions, head_report

STOCHASTIC_NORM_SLACK = 1e-8


def report_for(ctx: CheckContext, opts: CertifyOptions) -> BoundReport:
    """Informe de cotas de la instancia, calculado una sola vez por contexto."""
    if "report" not in ctx.data:
        instance = ctx.instance
        assert isinstance(instance, BoundInstance)
        report, over_budget = head_report(instance.x, instance.weights, opts)
        ctx.data["report"] = report
        ctx.data["capacity_exceeded"] = over_budget
    return ctx.data["report"]


class _ReportCheck(BaseCheck):
    def __init__(self, opts: CertifyOptions | None = None) -> None:
        self._opts = opts or CertifyOptions()


class SoundnessCheck(_ReportCheck):
    """Cada cota ≥ norma exacta (holgura relativa 1e-6)."""

    @property
    def name(self) -> CheckName:
        return CheckName.SOUNDNESS

    def applies(self, ctx: CheckContext) -> bool:
        return report_for(ctx, self._opts).exact is not None

    def execute(self, ctx: CheckContext) -> CheckResult:
        report = report_for(ctx, self._opts)
        floor = report.exact * (1.0 - SOUNDNESS_REL_SLACK)
        below = [f"{k}={v!r}" for k, v in report.bounds.items() if v < floor]
        if below:
            return CheckResult(
                success=False, error=f"exact={report.exact!r} supera {', '.join(below)}"
            )
        return CheckResult(success=True)


class SharpnessSpecformerCheck(_ReportCheck):
    """Cota refinada (con g₁) ≤ cota Specformer en r = 0."""

    @property
    def name(self) -> CheckName:
        return CheckName.SHARPNESS_SPECFORMER

    def execute(self, ctx: CheckContext) -> CheckResult:
        report = report_for(ctx, self._opts)
        if report.refined > report.specformer:
            return CheckResult(
                success=False,
                error=f"refined={report.refined!r} > specformer={report.specformer!r}",
            )
        return CheckResult(success=True)


class SharpnessCastinCheck(_ReportCheck):
    """Cota √N ≤ cota Castin."""

    @property
    def name(self) -> CheckName:
        return CheckName.SHARPNESS_CASTIN

    def execute(self, ctx: CheckContext) -> CheckResult:
        report = report_for(ctx, self._opts)
        if report.refined_sqrt_n > report.castin:
            return CheckResult(
                success=False,
                error=f"refined_sqrt_n={report.refined_sqrt_n!r} > castin={report.castin!r}",
            )
        return CheckResult(success=True)


class StochasticNormCheck(_ReportCheck):
    """‖P‖₂ ≤ √N."""

    @property
    def name(self) -> CheckName:
        return CheckName.STOCHASTIC_NORM

    def execute(self, ctx: CheckContext) -> CheckResult:
        ing = report_for(ctx, self._opts).ingredients
        limit = np.sqrt(ing.n_tokens) + STOCHASTIC_NORM_SLACK
        if ing.map_norm > limit:
            return CheckResult(success=False, error=f"‖P‖={ing.map_norm!r} > √N")
        return CheckResult(success=True)
