"""Configuración y resultado del regularizador JaSMin."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.models.enums import Aggregation

DEFAULT_EPSILON = 1e-6


class JasminConfig(BaseModel):
    """k = 0 minimiza log g₁; k ≥ 2 minimiza el cociente log(g₁ / (g_k + ε))."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    k: int = 0
    lambda_: float = Field(default=0.0, ge=0.0, alias="lambda")
    aggregation: Aggregation = Aggregation.MAX
    epsilon: float = Field(default=DEFAULT_EPSILON, gt=0.0)

    @field_validator("k")
    @classmethod
    def validate_k(cls, v: int) -> int:
        # k = 1 da g₁/g₁ ≡ 1
        if v != 0 and v < 2:
            raise ValueError(f"k debe ser 0 o >= 2, recibido {v}")
        return v

    @property
    def is_ratio(self) -> bool:
        return self.k >= 2


class JasminValue(BaseModel):
    """Pérdida JaSMin sin ponderar por λ y su desglose por (capa, cabeza)."""

    model_config = ConfigDict(frozen=True)

    loss: float
    per_layer_head: list[list[float]]
    argmax_rows: list[list[int]] | None = None
