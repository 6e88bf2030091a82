"""Jerarquía de excepciones compartida por todos los módulos.

Cada excepción lleva el código de salida que el CLI devuelve cuando la
recibe sin capturar (contrato estable: 0 ok, 1 I/O, 2 validación,
3 capacidad, 4 divergencia numérica).
"""

from __future__ import annotations

EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_CAPACITY = 3
EXIT_DIVERGENCE = 4


class CertificationError(Exception):
    """Error base de la librería."""

    exit_code: int = EXIT_VALIDATION

    def __init__(self, message: str) -> None:
        super().__init__(message)


class DimensionError(CertificationError, ValueError):
    """Dimensiones incompatibles, entradas vacías o arrays irregulares."""


class SymmetryError(CertificationError, ValueError):
    """La matriz no es simétrica dentro de la tolerancia."""


class DomainError(CertificationError, ValueError):
    """Parámetro fuera de su dominio (γ, normas negativas, símplex inválido...)."""


class OrdinalIndexError(CertificationError, IndexError):
    """Índice k fuera de rango para g_k."""

    def __init__(self, k: int, n: int) -> None:
        self.k = k
        self.n = n
        super().__init__(f"k={k} fuera de rango para un vector de longitud {n}")


class EvaluationError(CertificationError):
    """Se obtuvo un valor no finito durante una evaluación."""

    exit_code = EXIT_DIVERGENCE


class CapacityError(CertificationError):
    """El Jacobiano denso excede el presupuesto de entradas."""

    exit_code = EXIT_CAPACITY

    def __init__(self, entries: int, budget: int) -> None:
        self.entries = entries
        self.budget = budget
        super().__init__(
            f"Ensamblado denso de {entries} entradas excede el presupuesto de {budget}"
        )


class TrainingDivergenceError(CertificationError):
    """La pérdida de entrenamiento dejó de ser finita."""

    exit_code = EXIT_DIVERGENCE

    def __init__(self, step: int, loss: float) -> None:
        self.step = step
        self.loss = loss
        super().__init__(f"Pérdida no finita ({loss}) en el paso {step}")
