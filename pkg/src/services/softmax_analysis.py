"""Softmax, su Jacobiano y la estructura espectral que lo acota.

g_k(x) = x_(k)·(1 − x_(k) + x_(k+1)), con x_(n+1) = 0, entrelaza los valores
singulares de diag(x) − xxᵀ con los estadísticos de orden de x:

    x_(1) ≥ g₁ ≥ σ₁ ≥ x_(2) ≥ g₂ ≥ σ₂ ≥ … ≥ x_(n) ≥ g_n ≥ σ_n = 0
"""

from __future__ import annotations

import numpy as np
import numpy.typing as npt

from src.errors import DimensionError, DomainError, OrdinalIndexError
from src.linalg.spectral import Matrix, symmetric_eigenvalues
from src.models.simplex import (
    BifurcationThresholds,
    InterlacingSandwich,
    SandwichLevel,
    SimplexVector,
)

Array = npt.NDArray[np.float64]


# ── Softmax ──────────────────────────────────────────────────────


def softmax_rows(z: npt.ArrayLike) -> Array:
    """Softmax sobre el último eje con resta del máximo por fila."""
    logits = np.asarray(z, dtype=np.float64)
    if logits.shape[-1:] == (0,) or logits.ndim == 0:
        raise DimensionError("softmax de un vector vacío")
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def softmax(z: npt.ArrayLike) -> SimplexVector:
    logits = np.asarray(z, dtype=np.float64)
    if logits.ndim != 1:
        raise DimensionError(f"Se esperaba un vector, recibido ndim={logits.ndim}")
    if not np.all(np.isfinite(logits)):
        raise DomainError("z contiene entradas no finitas")
    return SimplexVector(softmax_rows(logits))


def softmax_jacobian_matrix(p: SimplexVector) -> Matrix:
    """diag(p) − ppᵀ: simétrica, semidefinida positiva, filas que suman 0."""
    return np.diag(p.probs) - np.outer(p.probs, p.probs)


def softmax_jacobian_batch(probs: npt.ArrayLike) -> Array:
    """diag(p) − ppᵀ para cada fila del último eje: (..., n) → (..., n, n)."""
    p = np.asarray(probs, dtype=np.float64)
    eye = np.eye(p.shape[-1])
    return p[..., :, None] * eye - p[..., :, None] * p[..., None, :]


# ── Estadísticos de orden y g_k ──────────────────────────────────


def ordinal_statistics(probs: npt.ArrayLike) -> tuple[Array, npt.NDArray[np.intp]]:
    """(x_(1) ≥ … ≥ x_(n), permutación) sobre el último eje; orden estable."""
    p = np.asarray(probs, dtype=np.float64)
    order = np.argsort(-p, axis=-1, kind="stable")
    return np.take_along_axis(p, order, axis=-1), order


def g_values(probs: npt.ArrayLike) -> Array:
    """Todos los g_k, k = 1..n, sobre el último eje."""
    s, _ = ordinal_statistics(probs)
    nxt = np.concatenate([s[..., 1:], np.zeros_like(s[..., :1])], axis=-1)
    return s * (1.0 - s + nxt)


def g_k(p: SimplexVector, k: int) -> float:
    """g_k para 1 ≤ k ≤ n; g_n = x_(n)(1 − x_(n))."""
    if not 1 <= k <= p.n:
        raise OrdinalIndexError(k, p.n)
    return float(g_values(p.probs)[k - 1])


def exact_singular_values(p: SimplexVector) -> list[float]:
    """Valores singulares de diag(p) − ppᵀ vía el autosolver de Jacobi."""
    eig = symmetric_eigenvalues(softmax_jacobian_matrix(p))
    return sorted((abs(v) for v in eig), reverse=True)


def interlacing_sandwich(p: SimplexVector) -> InterlacingSandwich:
    if p.n < 2:
        raise DimensionError(f"Se necesita n >= 2, recibido {p.n}")
    ordinals = p.sorted_desc
    gs = g_values(p.probs)
    sigmas = exact_singular_values(p)
    return InterlacingSandwich(
        levels=tuple(
            SandwichLevel(float(x), float(g), float(s))
            for x, g, s in zip(ordinals, gs, sigmas, strict=True)
        )
    )


def spectral_norm_upper_bound(p: SimplexVector) -> float:
    """‖diag(p) − ppᵀ‖₂ ≤ g₁(p) ≤ 1/2."""
    return g_k(p, 1)


def classical_interlacing_bound(p: SimplexVector) -> float:
    """La cota clásica de actualización de rango uno: σ₁ ≤ x_(1)."""
    return float(p.sorted_desc[0])


# ── Umbrales ─────────────────────────────────────────────────────


def bifurcation_thresholds(gamma: float) -> BifurcationThresholds:
    """Raíces de x(1 − x) = γ: una fila con g₁ ≤ γ tiene x_(1) ≤ lower o x_(1) ≥ upper."""
    if not 0 < gamma <= 0.25:
        raise DomainError(f"gamma debe estar en (0, 1/4], recibido {gamma}")
    root = np.sqrt(max(1.0 - 4.0 * gamma, 0.0))
    # Forma racionalizada de (1 − √(1−4γ))/2: sin cancelación para γ pequeño
    lower = float(2.0 * gamma / (1.0 + root))
    return BifurcationThresholds(gamma=gamma, lower=lower, upper=1.0 - lower)


def ratio_norm_bound(gamma: float, k: int) -> float:
    """Cota de ‖diag(p) − ppᵀ‖₂ cuando g₁/g_k ≤ γ, con 1 ≤ γ ≤ k/4."""
    if k < 4:
        raise DomainError(f"k debe ser >= 4 para que [1, k/4] no sea vacío, recibido {k}")
    if not 1.0 <= gamma <= k / 4.0:
        raise DomainError(f"gamma debe estar en [1, {k / 4}], recibido {gamma}")
    return float((1.0 - np.sqrt(max(1.0 - 4.0 * gamma / k, 0.0))) / 2.0)


# ── Muestreo ─────────────────────────────────────────────────────


def sample_simplex(
    rng: np.random.Generator,
    n: int,
    size: int,
    concentration: float = 1.0,
) -> Array:
    """`size` vectores Dirichlet(concentration); 1 es uniforme sobre el símplex."""
    if n < 1:
        raise DimensionError(f"n debe ser >= 1, recibido {n}")
    if concentration <= 0:
        raise DomainError(f"concentration debe ser > 0, recibido {concentration}")
    draws = rng.dirichlet(np.full(n, concentration), size=size)
    # Dirichlet puede dejar la suma a unos ulp de 1
    return draws / draws.sum(axis=-1, keepdims=True)
