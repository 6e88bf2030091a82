"""Auto-atención de producto escalar: forward, backward y Jacobiano exacto.

Convención de vec(): row-major sobre tokens. La salida del token i ocupa las
filas i·d … (i+1)·d − 1 del Jacobiano y la entrada del token j las columnas
j·D … (j+1)·D − 1. El bloque (i, j) es

    J_ij = W_Vᵀ [ Xᵀ J_sm(P_i)(E_ji X A + δ_ij X Aᵀ) + P_ij I ],   A = W_Q W_Kᵀ / √d

con E_ji la matriz N×N con un 1 en (j, i).
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import structlog

from src.errors import CapacityError, DimensionError, DomainError
from src.linalg.spectral import (
    DEFAULT_MAX_ITER,
    DEFAULT_SEED,
    DEFAULT_TOL,
    Matrix,
    SpectralResult,
    power_iteration_spectral_norm,
)
from src.models.attention import AttentionHeadWeights, AttentionMap, HeadGradient, InputSequence
from src.services.softmax_analysis import softmax_jacobian_batch, softmax_rows

logger = structlog.get_logger()

DEFAULT_ENTRY_BUDGET = 40_000_000

Array = npt.NDArray[np.float64]


# ── Pesos aumentados ─────────────────────────────────────────────


def _augmented_weights(w: AttentionHeadWeights) -> tuple[Matrix, Matrix, Matrix]:
    """W con el sesgo (o ceros) como fila extra; solo si la cabeza tiene sesgos."""

    def aug(m: Matrix, b: Array | None) -> Matrix:
        row = np.zeros(m.shape[1]) if b is None else b
        return np.vstack([m, row])

    return aug(w.w_q, w.bias_q), aug(w.w_k, w.bias_k), aug(w.w_v, w.bias_v)


def _with_ones(x: Array) -> Array:
    return np.concatenate([x, np.ones(x.shape[:-1] + (1,))], axis=-1)


def _flatten_batch(a: Array) -> Array:
    """(..., m, n) → (B, m, n); un único lote si no hay ejes previos."""
    return a.reshape((-1,) + a.shape[-2:])


def absorbed_weights(w: AttentionHeadWeights) -> AttentionHeadWeights:
    """Pesos sin sesgo sobre D + 1 entradas: [W_Q; b_Q], [W_K; b_K], [W_V; b_V]."""
    w_q, w_k, w_v = _augmented_weights(w)
    return AttentionHeadWeights(w_q=w_q, w_k=w_k, w_v=w_v, layer=w.layer, head=w.head)


def bias_absorb(
    x: InputSequence, w: AttentionHeadWeights
) -> tuple[InputSequence, AttentionHeadWeights]:
    """X_aug = [X, 1] y W_aug = [W; b], de modo que X_aug W_aug = X W + b por filas.

    El radio pasa a √(R² + 1); los pesos resultantes no tienen sesgos.
    """
    if not w.has_bias:
        raise DomainError("La cabeza no tiene sesgos que absorber")
    _check_dims(x.x, w)
    radius = x.effective_radius
    x_aug = InputSequence(x=_with_ones(x.x), radius=float(np.sqrt(radius * radius + 1.0)))
    return x_aug, absorbed_weights(w)


def _check_dims(x: Array, w: AttentionHeadWeights) -> None:
    if x.shape[-1] != w.model_dim:
        raise DimensionError(
            f"X tiene {x.shape[-1]} columnas, la cabeza espera D={w.model_dim}"
        )


# ── Forward / backward ───────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class HeadCache:
    """Intermedios del forward de una cabeza sobre un lote (..., N, D)."""

    weights: AttentionHeadWeights
    x: Array
    x_aug: Array
    w_q: Matrix
    w_k: Matrix
    w_v: Matrix
    attention_matrix: Matrix
    values: Array
    probs: Array
    output: Array


def head_forward(x: npt.ArrayLike, w: AttentionHeadWeights) -> HeadCache:
    """sm(X A Xᵀ) X W_V sobre el último par de ejes; los ejes previos son de lote."""
    xs = np.asarray(x, dtype=np.float64)
    if xs.ndim < 2:
        raise DimensionError(f"X debe tener al menos 2 ejes, recibido ndim={xs.ndim}")
    _check_dims(xs, w)
    if w.has_bias:
        x_aug = _with_ones(xs)
        w_q, w_k, w_v = _augmented_weights(w)
    else:
        x_aug, w_q, w_k, w_v = xs, w.w_q, w.w_k, w.w_v
    a = w_q @ w_k.T / np.sqrt(w.head_dim)
    logits = (x_aug @ a) @ np.swapaxes(x_aug, -1, -2)
    probs = softmax_rows(logits)
    values = x_aug @ w_v
    return HeadCache(
        weights=w,
        x=xs,
        x_aug=x_aug,
        w_q=w_q,
        w_k=w_k,
        w_v=w_v,
        attention_matrix=a,
        values=values,
        probs=probs,
        output=probs @ values,
    )


def head_backward(
    cache: HeadCache,
    d_output: npt.ArrayLike | None,
    d_probs: npt.ArrayLike | None = None,
) -> tuple[Array, HeadGradient]:
    """Regla de la cadena inversa de una cabeza.

    Args:
        cache: resultado de head_forward.
        d_output: ∂L/∂salida (..., N, d), o None si la pérdida no depende de ella.
        d_probs: ∂L/∂P adicional (..., N, N), p. ej. la cotangente de JaSMin.

    Returns:
        (∂L/∂X con la forma de X, gradiente de los parámetros sumado sobre el lote).
    """
    w = cache.weights
    p = cache.probs
    x = cache.x_aug
    d_p = np.zeros_like(p)
    d_x = np.zeros_like(x)
    d_wv = np.zeros_like(cache.w_v)
    if d_output is not None:
        d_o = np.asarray(d_output, dtype=np.float64)
        d_p = d_p + d_o @ np.swapaxes(cache.values, -1, -2)
        d_values = np.swapaxes(p, -1, -2) @ d_o
        d_wv = np.einsum("bni,bnj->ij", _flatten_batch(x), _flatten_batch(d_values))
        d_x = d_x + d_values @ cache.w_v.T
    if d_probs is not None:
        d_p = d_p + np.asarray(d_probs, dtype=np.float64)

    d_logits = p * (d_p - np.sum(p * d_p, axis=-1, keepdims=True))
    a = cache.attention_matrix
    d_x = d_x + d_logits @ x @ a.T + np.swapaxes(d_logits, -1, -2) @ x @ a
    flat_x = _flatten_batch(x)
    d_a = np.einsum("bni,bnm,bmj->ij", flat_x, _flatten_batch(d_logits), flat_x)
    scale = np.sqrt(w.head_dim)
    d_wq = d_a @ cache.w_k / scale
    d_wk = d_a.T @ cache.w_q / scale

    model_dim = w.model_dim
    if w.has_bias:
        grad = HeadGradient(
            w_q=d_wq[:model_dim],
            w_k=d_wk[:model_dim],
            w_v=d_wv[:model_dim],
            bias_q=None if w.bias_q is None else d_wq[model_dim],
            bias_k=None if w.bias_k is None else d_wk[model_dim],
            bias_v=None if w.bias_v is None else d_wv[model_dim],
        )
        return d_x[..., :model_dim], grad
    return d_x, HeadGradient(w_q=d_wq, w_k=d_wk, w_v=d_wv)


def attention_forward(
    x: InputSequence, w: AttentionHeadWeights
) -> tuple[Matrix, AttentionMap]:
    """(sm(X A Xᵀ) X W_V, P); con sesgos se evalúa sobre la forma aumentada."""
    cache = head_forward(x.x, w)
    return cache.output, AttentionMap(cache.probs)


def multihead_attention_forward(
    x: InputSequence, heads: Sequence[AttentionHeadWeights]
) -> tuple[Matrix, list[AttentionMap]]:
    """Salidas de las cabezas concatenadas en el eje de features (N × Σd)."""
    if not heads:
        raise DimensionError("Se necesita al menos una cabeza")
    results = [attention_forward(x, w) for w in heads]
    return np.concatenate([out for out, _ in results], axis=-1), [m for _, m in results]


# ── Jacobiano exacto ─────────────────────────────────────────────


def _check_budget(rows: int, cols: int, budget: int) -> None:
    entries = rows * cols
    if entries > budget:
        logger.warning("dense_jacobian_over_budget", entries=entries, budget=budget)
        raise CapacityError(entries, budget)


def _jacobian_blocks(x: Array, w_v: Matrix, a: Matrix, probs: Array) -> Array:
    """Tensor (N, d, N, D') con J[i, :, j, :] = J_ij."""
    n = x.shape[0]
    s = softmax_jacobian_batch(probs)  # (N, N, N): S[i] = J_sm(P_i)
    u = np.einsum("imn,nk->imk", s, x @ w_v)  # U[i] = S_i X W_V
    xa = x @ a
    blocks = np.einsum("ijk,ib->ikjb", u, xa)
    blocks += np.einsum("ij,kb->ikjb", probs, w_v.T)
    x_at = x @ a.T
    for i in range(n):
        blocks[i, :, i, :] += u[i].T @ x_at
    return blocks


def _head_jacobian_blocks(x: InputSequence, w: AttentionHeadWeights) -> Array:
    cache = head_forward(x.x, w)
    blocks = _jacobian_blocks(cache.x_aug, cache.w_v, cache.attention_matrix, cache.probs)
    # La columna constante de X_aug no es una variable
    return blocks[..., : w.model_dim]


def exact_attention_jacobian(
    x: InputSequence,
    w: AttentionHeadWeights,
    *,
    entry_budget: int = DEFAULT_ENTRY_BUDGET,
) -> Matrix:
    """Jacobiano denso (N·d × N·D) de vec(Attn(X)) respecto a vec(X)."""
    _check_dims(x.x, w)
    n, d_model, d = x.n_tokens, w.model_dim, w.head_dim
    _check_budget(n * d, n * d_model, entry_budget)
    return _head_jacobian_blocks(x, w).reshape(n * d, n * d_model)


def exact_multihead_jacobian(
    x: InputSequence,
    heads: Sequence[AttentionHeadWeights],
    *,
    entry_budget: int = DEFAULT_ENTRY_BUDGET,
) -> Matrix:
    """Jacobiano de la atención multi-cabeza, también token-major.

    La fila del token i, cabeza h, componente a es i·Σd + offset_h + a.
    """
    if not heads:
        raise DimensionError("Se necesita al menos una cabeza")
    for w in heads:
        _check_dims(x.x, w)
    n, d_model = x.n_tokens, x.model_dim
    total = sum(w.head_dim for w in heads)
    _check_budget(n * total, n * d_model, entry_budget)
    blocks = np.concatenate([_head_jacobian_blocks(x, w) for w in heads], axis=1)
    return blocks.reshape(n * total, n * d_model)


def exact_local_lipschitz(
    x: InputSequence,
    w: AttentionHeadWeights,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
    entry_budget: int = DEFAULT_ENTRY_BUDGET,
) -> SpectralResult:
    """‖J_Attn(X)‖₂ puntual por power iteration sobre el Jacobiano ensamblado."""
    jac = exact_attention_jacobian(x, w, entry_budget=entry_budget)
    return power_iteration_spectral_norm(jac, tol=tol, max_iter=max_iter, seed=seed)


# ── Agregado multi-cabeza ────────────────────────────────────────


def _validated_norms(per_head_norms: Sequence[float]) -> Array:
    norms = np.asarray(per_head_norms, dtype=np.float64)
    if norms.size == 0:
        raise DimensionError("Lista de normas vacía")
    if np.any(norms < 0):
        raise DomainError("Las normas por cabeza deben ser >= 0")
    return norms


def multihead_jacobian_norm_bound(per_head_norms: Sequence[float]) -> float:
    """√(Σ‖J_h‖²), la forma ajustada de la cota del Jacobiano concatenado."""
    norms = _validated_norms(per_head_norms)
    return float(np.sqrt(np.sum(norms * norms)))


def multihead_jacobian_norm_loose(per_head_norms: Sequence[float]) -> float:
    """Σ‖J_h‖ (≥ la raíz de la suma de cuadrados)."""
    return float(np.sum(_validated_norms(per_head_norms)))
