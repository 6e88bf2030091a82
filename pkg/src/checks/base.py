"""Clase base abstracta para los checks de los barridos y contexto compartido."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import numpy.typing as npt

from src.models.attention import AttentionHeadWeights, InputSequence
from src.models.enums import CheckName


@dataclass(frozen=True, eq=False)
class SimplexInstance:
    """Un vector del símplex muestreado."""

    instance_id: int
    probs: npt.NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class BoundInstance:
    """Un par (entrada, cabeza) aleatorio del barrido de cotas."""

    instance_id: int
    x: InputSequence
    weights: AttentionHeadWeights


@dataclass
class CheckContext:
    """Datos compartidos entre los checks de una instancia.

    Los checks guardan en `data` lo que calculan (sándwich, informe de cotas...)
    para que los siguientes lo reutilicen y el comando pueda volcarlo a CSV.
    """

    instance: SimplexInstance | BoundInstance
    data: dict[str, Any] = field(default_factory=dict)

    @property
    def instance_id(self) -> int:
        return self.instance.instance_id


@dataclass
class CheckResult:
    """Resultado de un check sobre una instancia."""

    success: bool
    data: dict[str, Any] = field(default_factory=dict)
    error: str | None = None


class BaseCheck(ABC):
    """Clase base abstracta para los checks de propiedades.

    Cada check:
    1. applies → si devuelve False, se salta (p. ej. un cociente con σ₁ = 0)
    2. execute → comprueba la propiedad
    """

    @property
    @abstractmethod
    def name(self) -> CheckName:
        """Nombre del check (para logging y resúmenes)."""

    def run(self, ctx: CheckContext) -> CheckResult:
        if not self.applies(ctx):
            return CheckResult(success=True, data={"skipped": True})
        return self.execute(ctx)

    def applies(self, ctx: CheckContext) -> bool:
        return True

    @abstractmethod
    def execute(self, ctx: CheckContext) -> CheckResult:
        """Lógica principal del check."""
