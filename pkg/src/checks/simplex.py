"""Checks de entrelazado sobre vectores del símplex."""

from __future__ import annotations

from src.checks.base import BaseCheck, CheckContext, CheckResult, SimplexInstance
from src.models.enums import CheckName
from src.models.simplex import SANDWICH_SLACK, InterlacingSandwich, SimplexVector
from src.services.softmax_analysis import interlacing_sandwich

UPPER_HALF_SLACK = 1e-12


def sandwich_for(ctx: CheckContext) -> InterlacingSandwich:
    """Sándwich de la instancia, calculado una sola vez por contexto."""
    if "sandwich" not in ctx.data:
        instance = ctx.instance
        assert isinstance(instance, SimplexInstance)
        ctx.data["sandwich"] = interlacing_sandwich(SimplexVector(instance.probs))
    return ctx.data["sandwich"]


class InterlacingCheck(BaseCheck):
    """x_(1) ≥ g₁ ≥ σ₁ ≥ x_(2) ≥ … ≥ σ_n = 0 con holgura 1e-10."""

    def __init__(self, slack: float = SANDWICH_SLACK) -> None:
        self._slack = slack

    @property
    def name(self) -> CheckName:
        return CheckName.INTERLACING

    def execute(self, ctx: CheckContext) -> CheckResult:
        violations = sandwich_for(ctx).violations(self._slack)
        if violations:
            return CheckResult(success=False, error="; ".join(violations))
        return CheckResult(success=True)


class UpperHalfCheck(BaseCheck):
    """g₁ ≤ 1/2."""

    @property
    def name(self) -> CheckName:
        return CheckName.UPPER_HALF

    def execute(self, ctx: CheckContext) -> CheckResult:
        g1 = sandwich_for(ctx).g_values[0]
        if g1 > 0.5 + UPPER_HALF_SLACK:
            return CheckResult(success=False, error=f"g1={g1!r} > 1/2")
        return CheckResult(success=True, data={"g1": g1})


class RatioAtLeastOneCheck(BaseCheck):
    """g₁/σ₁ ≥ 1; no aplica cuando σ₁ = 0 (vector categórico)."""

    def __init__(self, slack: float = SANDWICH_SLACK) -> None:
        self._slack = slack

    @property
    def name(self) -> CheckName:
        return CheckName.RATIO_AT_LEAST_ONE

    def applies(self, ctx: CheckContext) -> bool:
        return sandwich_for(ctx).exact_singular_values[0] > 0

    def execute(self, ctx: CheckContext) -> CheckResult:
        sandwich = sandwich_for(ctx)
        ratio = sandwich.g_values[0] / sandwich.exact_singular_values[0]
        ctx.data["ratio"] = ratio
        if ratio < 1.0 - self._slack:
            return CheckResult(success=False, error=f"g1/sigma1={ratio!r} < 1")
        return CheckResult(success=True, data={"ratio": ratio})
