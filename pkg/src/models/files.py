"""Esquemas de los ficheros JSON de entrada (pesos y secuencia)."""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.models.attention import AttentionHeadWeights, InputSequence


def _matrix_shape(rows: list[list[float]]) -> tuple[int, int] | None:
    """(filas, columnas) o None si la matriz es irregular."""
    if not rows:
        return (0, 0)
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        return None
    return (len(rows), width)


class HeadEntry(BaseModel):
    layer: int = Field(ge=0)
    head: int = Field(ge=0)
    w_q: list[list[float]]
    w_k: list[list[float]]
    w_v: list[list[float]]
    bias_q: list[float] | None = None
    bias_k: list[float] | None = None
    bias_v: list[float] | None = None

    def to_weights(self) -> AttentionHeadWeights:
        return AttentionHeadWeights(
            w_q=self.w_q,
            w_k=self.w_k,
            w_v=self.w_v,
            bias_q=self.bias_q,
            bias_k=self.bias_k,
            bias_v=self.bias_v,
            layer=self.layer,
            head=self.head,
        )

    @classmethod
    def from_weights(cls, w: AttentionHeadWeights) -> HeadEntry:
        def vec(b: np.ndarray | None) -> list[float] | None:
            return None if b is None else b.tolist()

        return cls(
            layer=w.layer,
            head=w.head,
            w_q=w.w_q.tolist(),
            w_k=w.w_k.tolist(),
            w_v=w.w_v.tolist(),
            bias_q=vec(w.bias_q),
            bias_k=vec(w.bias_k),
            bias_v=vec(w.bias_v),
        )


class WeightsFile(BaseModel):
    """{model_dim, head_dim, heads: [...]} con matrices row-major como listas anidadas."""

    model_dim: int = Field(ge=1)
    head_dim: int = Field(ge=1)
    heads: list[HeadEntry] = Field(min_length=1)

    @model_validator(mode="after")
    def validate_dims(self) -> WeightsFile:
        expected = (self.model_dim, self.head_dim)
        seen: set[tuple[int, int]] = set()
        for entry in self.heads:
            where = f"(layer={entry.layer}, head={entry.head})"
            if (entry.layer, entry.head) in seen:
                raise ValueError(f"Cabeza duplicada {where}")
            seen.add((entry.layer, entry.head))
            for name in ("w_q", "w_k", "w_v"):
                shape = _matrix_shape(getattr(entry, name))
                if shape is None:
                    raise ValueError(f"{name} irregular en {where}")
                if shape != expected:
                    raise ValueError(f"{name} con forma {shape} en {where}, se esperaba {expected}")
            for name in ("bias_q", "bias_k", "bias_v"):
                bias = getattr(entry, name)
                if bias is not None and len(bias) != self.head_dim:
                    raise ValueError(
                        f"{name} con longitud {len(bias)} en {where}, se esperaba {self.head_dim}"
                    )
        return self

    def to_weights(self) -> list[AttentionHeadWeights]:
        return [entry.to_weights() for entry in self.heads]


class InputFile(BaseModel):
    """{x: N×D, radius?: R}."""

    x: list[list[float]] = Field(min_length=1)
    radius: float | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def validate_shape(self) -> InputFile:
        shape = _matrix_shape(self.x)
        if shape is None:
            raise ValueError("x es irregular")
        if shape[1] == 0:
            raise ValueError("x no tiene columnas")
        return self

    def to_sequence(self, radius: float | None = None) -> InputSequence:
        """`radius` (p. ej. el flag --radius) tiene prioridad sobre el del fichero."""
        return InputSequence(x=self.x, radius=radius if radius is not None else self.radius)
