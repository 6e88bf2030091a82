"""Pesos de una cabeza de atención, secuencias de entrada y mapas de atención."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from src.errors import DimensionError, DomainError
from src.linalg.spectral import Matrix, as_matrix
from src.models.simplex import SimplexVector

RADIUS_TOL = 1e-9
MAP_ROW_SUM_TOL = 1e-10

Vector = npt.NDArray[np.float64]


def _readonly(a: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def _as_bias(values: npt.ArrayLike | None, head_dim: int, name: str) -> Vector | None:
    if values is None:
        return None
    b = np.asarray(values, dtype=np.float64)
    if b.shape != (head_dim,):
        raise DimensionError(f"{name} debe tener longitud {head_dim}, recibido {b.shape}")
    if not np.all(np.isfinite(b)):
        raise DomainError(f"{name} contiene entradas no finitas")
    return _readonly(b)


@dataclass(frozen=True, eq=False)
class AttentionHeadWeights:
    """W_Q, W_K, W_V ∈ ℝ^{D×d} (y sesgos opcionales de longitud d) de una cabeza."""

    w_q: Matrix
    w_k: Matrix
    w_v: Matrix
    bias_q: Vector | None = None
    bias_k: Vector | None = None
    bias_v: Vector | None = None
    layer: int = 0
    head: int = 0

    def __post_init__(self) -> None:
        w_q = as_matrix(self.w_q, "w_q")
        w_k = as_matrix(self.w_k, "w_k")
        w_v = as_matrix(self.w_v, "w_v")
        if not (w_q.shape == w_k.shape == w_v.shape):
            raise DimensionError(
                f"W_Q {w_q.shape}, W_K {w_k.shape} y W_V {w_v.shape} deben compartir forma D×d"
            )
        if w_q.shape[1] == 0 or w_q.shape[0] == 0:
            raise DimensionError("D y d deben ser positivos")
        d = w_q.shape[1]
        object.__setattr__(self, "w_q", _readonly(w_q))
        object.__setattr__(self, "w_k", _readonly(w_k))
        object.__setattr__(self, "w_v", _readonly(w_v))
        object.__setattr__(self, "bias_q", _as_bias(self.bias_q, d, "bias_q"))
        object.__setattr__(self, "bias_k", _as_bias(self.bias_k, d, "bias_k"))
        object.__setattr__(self, "bias_v", _as_bias(self.bias_v, d, "bias_v"))

    @property
    def model_dim(self) -> int:
        return int(self.w_q.shape[0])

    @property
    def head_dim(self) -> int:
        return int(self.w_q.shape[1])

    @property
    def has_bias(self) -> bool:
        return any(b is not None for b in (self.bias_q, self.bias_k, self.bias_v))

    @property
    def attention_matrix(self) -> Matrix:
        """A_h = W_Q W_Kᵀ / √d (D×D)."""
        return self.w_q @ self.w_k.T / np.sqrt(self.head_dim)

    def with_value_scale(self, factor: float) -> AttentionHeadWeights:
        """Copia con W_V (y su sesgo) multiplicados por `factor`."""
        return AttentionHeadWeights(
            w_q=self.w_q,
            w_k=self.w_k,
            w_v=self.w_v * factor,
            bias_q=self.bias_q,
            bias_k=self.bias_k,
            bias_v=None if self.bias_v is None else self.bias_v * factor,
            layer=self.layer,
            head=self.head,
        )


@dataclass(frozen=True, eq=False)
class InputSequence:
    """Matriz de entrada X (N×D) con radio R opcional (cota de la norma de cada fila)."""

    x: Matrix
    radius: float | None = None

    def __post_init__(self) -> None:
        x = as_matrix(self.x, "x")
        if x.shape[0] == 0 or x.shape[1] == 0:
            raise DimensionError(f"X no puede estar vacía, recibido {x.shape}")
        if self.radius is not None:
            if self.radius < 0:
                raise DomainError(f"El radio debe ser >= 0, recibido {self.radius}")
            worst = float(np.max(np.linalg.norm(x, axis=1)))
            if worst > self.radius + RADIUS_TOL:
                raise DomainError(
                    f"Una fila de X tiene norma {worst} > radio {self.radius}"
                )
        object.__setattr__(self, "x", _readonly(x))

    @property
    def n_tokens(self) -> int:
        return int(self.x.shape[0])

    @property
    def model_dim(self) -> int:
        return int(self.x.shape[1])

    @property
    def effective_radius(self) -> float:
        """R declarado o, si falta, el máximo de las normas de fila (el R válido más ajustado)."""
        if self.radius is not None:
            return float(self.radius)
        return float(np.max(np.linalg.norm(self.x, axis=1)))


@dataclass(frozen=True, eq=False)
class AttentionMap:
    """Mapa de atención P (N×N), estocástico por filas."""

    p: Matrix

    def __post_init__(self) -> None:
        p = as_matrix(self.p, "p")
        if p.shape[0] != p.shape[1] or p.shape[0] == 0:
            raise DimensionError(f"El mapa de atención debe ser N×N, recibido {p.shape}")
        if np.any(p < 0):
            raise DomainError("El mapa de atención tiene entradas negativas")
        if np.max(np.abs(p.sum(axis=1) - 1.0)) > MAP_ROW_SUM_TOL:
            raise DomainError("Alguna fila del mapa de atención no suma 1")
        object.__setattr__(self, "p", _readonly(p))

    @property
    def n_tokens(self) -> int:
        return int(self.p.shape[0])

    def row(self, i: int) -> SimplexVector:
        return SimplexVector(self.p[i])


@dataclass
class HeadGradient:
    """Gradiente de una pérdida escalar respecto a los parámetros de una cabeza."""

    w_q: Matrix
    w_k: Matrix
    w_v: Matrix
    bias_q: Vector | None = None
    bias_k: Vector | None = None
    bias_v: Vector | None = None

    @classmethod
    def zeros_like(cls, w: AttentionHeadWeights) -> HeadGradient:
        def z(b: Vector | None) -> Vector | None:
            return None if b is None else np.zeros_like(b)

        return cls(
            w_q=np.zeros_like(w.w_q),
            w_k=np.zeros_like(w.w_k),
            w_v=np.zeros_like(w.w_v),
            bias_q=z(w.bias_q),
            bias_k=z(w.bias_k),
            bias_v=z(w.bias_v),
        )

    def __add__(self, other: HeadGradient) -> HeadGradient:
        def add(a: Vector | None, b: Vector | None) -> Vector | None:
            if a is None:
                return b
            if b is None:
                return a
            return a + b

        return HeadGradient(
            w_q=self.w_q + other.w_q,
            w_k=self.w_k + other.w_k,
            w_v=self.w_v + other.w_v,
            bias_q=add(self.bias_q, other.bias_q),
            bias_k=add(self.bias_k, other.bias_k),
            bias_v=add(self.bias_v, other.bias_v),
        )

    def scaled(self, factor: float) -> HeadGradient:
        def mul(b: Vector | None) -> Vector | None:
            return None if b is None else b * factor

        return HeadGradient(
            w_q=self.w_q * factor,
            w_k=self.w_k * factor,
            w_v=self.w_v * factor,
            bias_q=mul(self.bias_q),
            bias_k=mul(self.bias_k),
            bias_v=mul(self.bias_v),
        )

    def flat(self) -> Vector:
        """Todos los componentes concatenados (orden: Q, K, V, sesgos presentes)."""
        parts = [self.w_q.ravel(), self.w_k.ravel(), self.w_v.ravel()]
        parts += [b.ravel() for b in (self.bias_q, self.bias_k, self.bias_v) if b is not None]
        return np.concatenate(parts)
