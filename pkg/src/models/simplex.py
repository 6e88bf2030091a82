"""Vectores del símplex y los resultados del análisis espectral de softmax."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from src.errors import DimensionError, DomainError

SIMPLEX_SUM_TOL = 1e-12
SANDWICH_SLACK = 1e-10


@dataclass(frozen=True, eq=False)
class SimplexVector:
    """Vector no negativo que suma 1 (una fila de un mapa de atención).

    Entradas que no cumplen la tolerancia se rechazan, nunca se renormalizan.
    """

    probs: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        p = np.array(self.probs, dtype=np.float64).ravel()
        if p.size == 0:
            raise DimensionError("El vector del símplex está vacío")
        if not np.all(np.isfinite(p)):
            raise DomainError("El vector del símplex contiene entradas no finitas")
        if np.any(p < 0):
            raise DomainError(f"Entradas negativas en el símplex: min={p.min()}")
        total = float(p.sum())
        if abs(total - 1.0) > SIMPLEX_SUM_TOL:
            raise DomainError(f"Las entradas suman {total!r}, se esperaba 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def n(self) -> int:
        return int(self.probs.size)

    @property
    def order(self) -> npt.NDArray[np.intp]:
        """Permutación descendente estable (empates: índice original)."""
        return np.argsort(-self.probs, kind="stable")

    @property
    def sorted_desc(self) -> npt.NDArray[np.float64]:
        """Estadísticos de orden x_(1) ≥ ... ≥ x_(n)."""
        return self.probs[self.order]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimplexVector):
            return NotImplemented
        return bool(np.array_equal(self.probs, other.probs))

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())


@dataclass(frozen=True)
class SandwichLevel:
    """Un peldaño k de la cadena: (x_(k), g_k, σ_k)."""

    ordinal_stat: float
    g_value: float
    singular_value: float


@dataclass(frozen=True)
class InterlacingSandwich:
    """Cadena x_(1) ≥ g₁ ≥ σ₁ ≥ x_(2) ≥ g₂ ≥ σ₂ ≥ … ≥ x_(n) ≥ g_n ≥ σ_n = 0."""

    levels: tuple[SandwichLevel, ...]

    @property
    def ordinal_stats(self) -> list[float]:
        return [lv.ordinal_stat for lv in self.levels]

    @property
    def g_values(self) -> list[float]:
        return [lv.g_value for lv in self.levels]

    @property
    def exact_singular_values(self) -> list[float]:
        return [lv.singular_value for lv in self.levels]

    def chain(self) -> list[float]:
        """La cadena completa aplanada, en el orden en que debe ser no creciente."""
        out: list[float] = []
        for lv in self.levels:
            out.extend((lv.ordinal_stat, lv.g_value, lv.singular_value))
        return out

    def violations(self, slack: float = SANDWICH_SLACK) -> list[str]:
        """Comparaciones de la cadena que fallan por más de `slack`."""
        names = []
        for k in range(1, len(self.levels) + 1):
            names.extend((f"x_({k})", f"g_{k}", f"σ_{k}"))
        values = self.chain()
        found = [
            f"{names[i]}={values[i]!r} < {names[i + 1]}={values[i + 1]!r}"
            for i in range(len(values) - 1)
            if values[i] + slack < values[i + 1]
        ]
        last = self.levels[-1].singular_value
        if abs(last) > slack:
            found.append(f"σ_n={last!r} != 0")
        return found

    def holds(self, slack: float = SANDWICH_SLACK) -> bool:
        return not self.violations(slack)


@dataclass(frozen=True)
class BifurcationThresholds:
    """Raíces (1 ± √(1−4γ))/2 que separan filas "más uniformes" de "más categóricas"."""

    gamma: float
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not 0 < self.lower <= 0.5 <= self.upper <= 1:
            raise DomainError(
                f"Umbrales inválidos: lower={self.lower}, upper={self.upper}"
            )
        if abs(self.lower + self.upper - 1.0) > 1e-12:
            raise DomainError("lower + upper debe ser 1")

    def excludes(self, top_prob: float, margin: float = 0.0) -> bool:
        """True si x_(1) queda fuera de la banda prohibida (lower+margin, upper−margin)."""
        return not (self.lower + margin < top_prob < self.upper - margin)
