"""Regularizador JaSMin y penalización Specformer, con sus gradientes analíticos.

Por fila i de cada mapa P^{l,h}:
    k = 0:  log(g₁(P_i) + ε)
    k ≥ 2:  log(g₁(P_i)) − log(g_k(P_i) + ε)

ε va solo en el denominador; en filas one-hot exactas (g₁ = 0) el
numerador se sustituye por ε² para que el valor siga siendo finito.

Las filas se agregan (máximo o media) por mapa y los mapas se suman. El
gradiente usa la permutación de orden del forward (subgradiente en empates)
y, con agregación máxima, solo la primera fila maximizante.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from src.errors import DimensionError, DomainError
from src.linalg.spectral import DEFAULT_MAX_ITER, DEFAULT_SEED, DEFAULT_TOL, top_singular_pair
from src.models.attention import AttentionHeadWeights, AttentionMap, HeadGradient, InputSequence
from src.models.enums import Aggregation
from src.models.jasmin import JasminConfig, JasminValue
from src.services.attention import head_backward, head_forward
from src.services.softmax_analysis import ordinal_statistics, softmax_rows

Array = npt.NDArray[np.float64]

SpecformerCoefficients = tuple[float, float, float]


# ── Contribuciones por fila ──────────────────────────────────────


def _dg_dsorted(s: Array, nxt: Array, k: int) -> Array:
    """∂g_k/∂s respecto a los estadísticos de orden s (índice k base 1)."""
    grad = np.zeros_like(s)
    grad[..., k - 1] = 1.0 - 2.0 * s[..., k - 1] + nxt[..., k - 1]
    if k < s.shape[-1]:
        grad[..., k] = s[..., k - 1]
    return grad


def row_contributions(probs: npt.ArrayLike, cfg: JasminConfig) -> tuple[Array, Array]:
    """Valor por fila y su gradiente respecto a la fila, sobre el último eje."""
    p = np.asarray(probs, dtype=np.float64)
    n = p.shape[-1]
    if cfg.is_ratio and n < cfg.k + 1:
        raise DimensionError(f"Filas de longitud {n} < k+1={cfg.k + 1}")
    s, order = ordinal_statistics(p)
    nxt = np.concatenate([s[..., 1:], np.zeros_like(s[..., :1])], axis=-1)
    g = s * (1.0 - s + nxt)
    eps = cfg.epsilon

    g1 = g[..., 0]
    if cfg.is_ratio:
        gk = g[..., cfg.k - 1]
        # Solo las filas one-hot exactas (g₁ = 0) reciben ε² en el numerador
        num = np.where(g1 > 0.0, g1, eps * eps)
        den = gk + eps
        values = np.log(num) - np.log(den)
        grad_sorted = (
            _dg_dsorted(s, nxt, 1) / num[..., None]
            - _dg_dsorted(s, nxt, cfg.k) / den[..., None]
        )
    else:
        values = np.log(g1 + eps)
        grad_sorted = _dg_dsorted(s, nxt, 1) / (g1 + eps)[..., None]

    grad = np.empty_like(grad_sorted)
    np.put_along_axis(grad, order, grad_sorted, axis=-1)
    return values, grad


def map_cotangent(
    probs: npt.ArrayLike, cfg: JasminConfig
) -> tuple[Array, Array, npt.NDArray[np.intp]]:
    """Contribución agregada de cada mapa (..., N, N) y ∂contribución/∂P.

    Returns:
        (valores (...), cotangente (..., N, N), fila maximizante (...) o -1 con media).
    """
    p = np.asarray(probs, dtype=np.float64)
    values, grads = row_contributions(p, cfg)
    n_rows = values.shape[-1]
    if cfg.aggregation is Aggregation.MEAN:
        argmax = np.full(values.shape[:-1], -1, dtype=np.intp)
        return values.mean(axis=-1), grads / n_rows, argmax
    argmax = np.argmax(values, axis=-1)
    mask = np.arange(n_rows) == argmax[..., None]
    aggregated = np.take_along_axis(values, argmax[..., None], axis=-1)[..., 0]
    return aggregated, grads * mask[..., None], argmax


# ── Pérdida ──────────────────────────────────────────────────────


def _as_grid(
    maps: Sequence[AttentionMap] | Sequence[Sequence[AttentionMap]],
) -> list[list[AttentionMap]]:
    if not maps:
        raise DomainError("La lista de mapas está vacía")
    if isinstance(maps[0], AttentionMap):
        return [list(maps)]  # type: ignore[arg-type]
    grid = [list(layer) for layer in maps]  # type: ignore[arg-type]
    if any(not layer for layer in grid):
        raise DomainError("Una capa no tiene mapas")
    return grid


def jasmin_loss(
    maps: Sequence[AttentionMap] | Sequence[Sequence[AttentionMap]],
    cfg: JasminConfig,
) -> JasminValue:
    """Σ_{l,h} agg_i contribución(P^{l,h}_i). Acepta una lista plana (una capa) o por capas."""
    grid = _as_grid(maps)
    per_layer_head: list[list[float]] = []
    argmax_rows: list[list[int]] = []
    for layer in grid:
        values, rows = [], []
        for m in layer:
            value, _, argmax = map_cotangent(m.p, cfg)
            values.append(float(value))
            rows.append(int(argmax))
        per_layer_head.append(values)
        argmax_rows.append(rows)
    loss = float(sum(sum(layer) for layer in per_layer_head))
    return JasminValue(
        loss=loss,
        per_layer_head=per_layer_head,
        argmax_rows=argmax_rows if cfg.aggregation is Aggregation.MAX else None,
    )


def jasmin_gradient(
    x: InputSequence,
    heads: Sequence[AttentionHeadWeights],
    cfg: JasminConfig,
) -> list[HeadGradient]:
    """∂(λ·JaSMin)/∂pesos de cada cabeza, todas evaluadas sobre la misma X."""
    grads = []
    for w in heads:
        cache = head_forward(x.x, w)
        _, d_probs, _ = map_cotangent(cache.probs, cfg)
        _, grad = head_backward(cache, None, cfg.lambda_ * d_probs)
        grads.append(grad)
    return grads


def row_loss_and_logit_gradient(z: npt.ArrayLike, cfg: JasminConfig) -> tuple[float, Array]:
    """Contribución de una única fila libre softmax(z) y su gradiente respecto a z."""
    logits = np.asarray(z, dtype=np.float64)
    if logits.ndim != 1:
        raise DimensionError(f"Se esperaba un vector, recibido ndim={logits.ndim}")
    p = softmax_rows(logits)
    value, grad_p = row_contributions(p, cfg)
    d_z = p * (grad_p - np.dot(p, grad_p))
    return float(value), d_z


# ── Penalización Specformer ──────────────────────────────────────


def specformer_penalty(
    heads: Sequence[AttentionHeadWeights],
    coefficients: SpecformerCoefficients = (1.0, 1.0, 1.0),
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> float:
    """Σ_{l,h} c_Q σ₁²(W_Q) + c_K σ₁²(W_K) + c_V σ₁²(W_V)."""
    total = 0.0
    for w in heads:
        for c, m in zip(coefficients, (w.w_q, w.w_k, w.w_v), strict=True):
            sigma = top_singular_pair(m, tol=tol, max_iter=max_iter, seed=seed)[0].value
            total += c * sigma * sigma
    return total


def specformer_penalty_gradient(
    heads: Sequence[AttentionHeadWeights],
    coefficients: SpecformerCoefficients = (1.0, 1.0, 1.0),
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> list[HeadGradient]:
    """∂(c σ₁²(W))/∂W = 2cσ₁ u vᵀ con (u, v) el par singular dominante."""

    def grad(m: Array, c: float) -> Array:
        result, u, v = top_singular_pair(m, tol=tol, max_iter=max_iter, seed=seed)
        return 2.0 * c * result.value * np.outer(u, v)

    c_q, c_k, c_v = coefficients
    return [
        HeadGradient(w_q=grad(w.w_q, c_q), w_k=grad(w.w_k, c_k), w_v=grad(w.w_v, c_v))
        for w in heads
    ]
