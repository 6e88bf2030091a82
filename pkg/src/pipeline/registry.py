"""Registry de checks: construye la lista ordenada de cada barrido."""

from __future__ import annotations

from src.checks.base import BaseCheck
from src.checks.bounds import (
    SharpnessCastinCheck,
    SharpnessSpecformerCheck,
    SoundnessCheck,
    StochasticNormCheck,
)
from src.checks.simplex import InterlacingCheck, RatioAtLeastOneCheck, UpperHalfCheck
from src.services.bounds import CertifyOptions


def build_simplex_checks() -> list[BaseCheck]:
    """El entrelazado primero: calcula el sándwich que reutilizan los demás."""
    return [InterlacingCheck(), UpperHalfCheck(), RatioAtLeastOneCheck()]


def build_bound_checks(opts: CertifyOptions) -> list[BaseCheck]:
    return [
        SoundnessCheck(opts),
        SharpnessSpecformerCheck(opts),
        SharpnessCastinCheck(opts),
        StochasticNormCheck(opts),
    ]
