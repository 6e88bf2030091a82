"""Diferenciación numérica por diferencias centrales (oráculo de los Jacobianos analíticos)."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import numpy.typing as npt

from src.errors import DimensionError, DomainError, EvaluationError
from src.linalg.spectral import Matrix

DEFAULT_STEP = 1e-5

VectorMap = Callable[[npt.NDArray[np.float64]], npt.ArrayLike]


def _evaluate(f: VectorMap, x: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    y = np.asarray(f(x), dtype=np.float64).ravel()
    if not np.all(np.isfinite(y)):
        raise EvaluationError("f devolvió valores no finitos")
    return y


def finite_difference_jacobian(
    f: VectorMap,
    x0: npt.ArrayLike,
    h: float = DEFAULT_STEP,
) -> Matrix:
    """Jacobiano por diferencias centrales: J[i, j] = (f(x0+h·e_j)_i − f(x0−h·e_j)_i) / 2h.

    `f` recibe y devuelve vectores planos; salidas multidimensionales se
    aplanan en orden row-major.
    """
    if h <= 0:
        raise DomainError(f"h debe ser > 0, recibido {h}")
    x = np.asarray(x0, dtype=np.float64).ravel()
    if x.size == 0:
        raise DimensionError("x0 está vacío")

    columns = []
    for j in range(x.size):
        step = np.zeros_like(x)
        step[j] = h
        columns.append((_evaluate(f, x + step) - _evaluate(f, x - step)) / (2.0 * h))
    return np.stack(columns, axis=1)


def directional_derivative(
    f: VectorMap,
    x0: npt.ArrayLike,
    direction: npt.ArrayLike,
    h: float = DEFAULT_STEP,
) -> npt.NDArray[np.float64]:
    """Producto Jacobiano-vector J·d por diferencia central (sin ensamblar J)."""
    if h <= 0:
        raise DomainError(f"h debe ser > 0, recibido {h}")
    x = np.asarray(x0, dtype=np.float64).ravel()
    d = np.asarray(direction, dtype=np.float64).ravel()
    if d.shape != x.shape:
        raise DimensionError(f"Dirección {d.shape} incompatible con x0 {x.shape}")
    return (_evaluate(f, x + h * d) - _evaluate(f, x - h * d)) / (2.0 * h)
