"""Cotas superiores de la constante de Lipschitz local de una cabeza de atención.

- refinada: ‖W_V‖(‖P‖ + 2‖X‖²‖A‖·max_i ‖J_sm(P_i)‖), con el término softmax
  exacto o acotado por g₁;
- refinada √N: ‖W_V‖√N(1 + 2R²‖A‖);
- Specformer: N(N+1)(‖X‖_F + r)²(‖W_V‖‖W_Q‖‖W_K‖ + ‖W_V‖) en la bola de radio r;
- Castin: √3‖W_V‖(‖A‖²R⁴(4N+1) + N)^{1/2} en B_R(0)^N.

Las cotas son puntuales: se evalúan en X y no se extienden a un entorno.
"""

from __future__ import annotations

from collections.abc import Sequence
from itertools import groupby

import numpy as np
import structlog
from pydantic import BaseModel, Field

from src.errors import CapacityError, DimensionError, DomainError
from src.linalg.spectral import (
    DEFAULT_MAX_ITER,
    DEFAULT_SEED,
    DEFAULT_TOL,
    power_iteration_spectral_norm,
    spectral_norm,
    symmetric_eigenvalues,
)
from src.models.attention import AttentionHeadWeights, InputSequence
from src.models.enums import SoftmaxTerm
from src.models.report import (
    BoundIngredients,
    BoundReport,
    CertificationReport,
    MultiheadSummary,
)
from src.services.attention import (
    DEFAULT_ENTRY_BUDGET,
    absorbed_weights,
    attention_forward,
    bias_absorb,
    exact_local_lipschitz,
    exact_multihead_jacobian,
    multihead_jacobian_norm_bound,
    multihead_jacobian_norm_loose,
)
from src.services.softmax_analysis import g_values, softmax_jacobian_batch

logger = structlog.get_logger()


class CertifyOptions(BaseModel):
    exact: bool = True
    ball_radius: float = Field(default=0.0, ge=0)
    tol: float = Field(default=DEFAULT_TOL, gt=0)
    max_iter: int = Field(default=DEFAULT_MAX_ITER, ge=1)
    seed: int = DEFAULT_SEED
    entry_budget: int = Field(default=DEFAULT_ENTRY_BUDGET, ge=1)


# ── Ingredientes ─────────────────────────────────────────────────


def _bias_free(
    x: InputSequence, w: AttentionHeadWeights
) -> tuple[InputSequence, AttentionHeadWeights]:
    if x.model_dim != w.model_dim:
        raise DimensionError(f"X tiene {x.model_dim} columnas, la cabeza espera D={w.model_dim}")
    if w.has_bias:
        return bias_absorb(x, w)
    return x, w


def bound_ingredients(
    x: InputSequence,
    w: AttentionHeadWeights,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> BoundIngredients:
    """Normas espectrales (misma power iteration con semilla) y estadísticos de P."""
    x, w = _bias_free(x, w)

    def norm(m: np.ndarray) -> float:
        return spectral_norm(m, tol=tol, max_iter=max_iter, seed=seed)

    _, attention_map = attention_forward(x, w)
    probs = attention_map.p
    sigmas = [symmetric_eigenvalues(s)[0] for s in softmax_jacobian_batch(probs)]
    return BoundIngredients(
        value_norm=norm(w.w_v),
        attention_matrix_norm=norm(w.attention_matrix),
        input_norm=norm(x.x),
        input_frobenius=float(np.linalg.norm(x.x)),
        query_norm=norm(w.w_q),
        key_norm=norm(w.w_k),
        map_norm=norm(probs),
        max_g1=float(np.max(g_values(probs)[:, 0])),
        max_softmax_sigma=max(0.0, float(max(sigmas))),
        radius=x.effective_radius,
        n_tokens=x.n_tokens,
    )


# ── Fórmulas ─────────────────────────────────────────────────────


def refined_from(ing: BoundIngredients, softmax_term: SoftmaxTerm) -> float:
    t = ing.max_g1 if softmax_term is SoftmaxTerm.G1_UPPER else ing.max_softmax_sigma
    return ing.value_norm * (
        ing.map_norm + 2.0 * ing.input_norm**2 * ing.attention_matrix_norm * t
    )


def sqrt_n_from(ing: BoundIngredients) -> float:
    return (
        ing.value_norm
        * np.sqrt(ing.n_tokens)
        * (1.0 + 2.0 * ing.radius**2 * ing.attention_matrix_norm)
    )


def specformer_from(ing: BoundIngredients, ball_radius: float) -> float:
    n = ing.n_tokens
    return (
        n
        * (n + 1)
        * (ing.input_frobenius + ball_radius) ** 2
        * (ing.value_norm * ing.query_norm * ing.key_norm + ing.value_norm)
    )


def castin_formula(value_norm: float, attention_norm: float, n: int, r: float) -> float:
    return float(
        np.sqrt(3.0) * value_norm * np.sqrt(attention_norm**2 * r**4 * (4 * n + 1) + n)
    )


# ── Operaciones ──────────────────────────────────────────────────


def bound_ours(
    x: InputSequence,
    w: AttentionHeadWeights,
    softmax_term: SoftmaxTerm = SoftmaxTerm.G1_UPPER,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> float:
    """Cota refinada; `softmax_term` elige σ₁ exacto o su cota g₁ por fila."""
    ing = bound_ingredients(x, w, tol=tol, max_iter=max_iter, seed=seed)
    return float(refined_from(ing, SoftmaxTerm(softmax_term)))


def bound_ours_sqrt_n(
    x: InputSequence,
    w: AttentionHeadWeights,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> float:
    """‖W_V‖√N(1 + 2R²‖A‖), con R el radio declarado o el máximo de normas de fila."""
    x, w = _bias_free(x, w)
    value_norm = spectral_norm(w.w_v, tol=tol, max_iter=max_iter, seed=seed)
    attention_norm = spectral_norm(w.attention_matrix, tol=tol, max_iter=max_iter, seed=seed)
    r = x.effective_radius
    return float(value_norm * np.sqrt(x.n_tokens) * (1.0 + 2.0 * r * r * attention_norm))


def bound_specformer(
    x: InputSequence,
    w: AttentionHeadWeights,
    ball_radius: float = 0.0,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> float:
    if ball_radius < 0:
        raise DomainError(f"ball_radius debe ser >= 0, recibido {ball_radius}")
    x, w = _bias_free(x, w)

    def norm(m: np.ndarray) -> float:
        return spectral_norm(m, tol=tol, max_iter=max_iter, seed=seed)

    n = x.n_tokens
    v = norm(w.w_v)
    return float(
        n * (n + 1) * (np.linalg.norm(x.x) + ball_radius) ** 2 * (v * norm(w.w_q) * norm(w.w_k) + v)
    )


def bound_castin(
    w: AttentionHeadWeights,
    n: int,
    r: float,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> float:
    """Cota global en B_R(0)^N; con sesgos se usa la forma aumentada y √(R² + 1)."""
    if n < 1:
        raise DomainError(f"n debe ser >= 1, recibido {n}")
    if r < 0:
        raise DomainError(f"r debe ser >= 0, recibido {r}")
    if w.has_bias:
        w = absorbed_weights(w)
        r = float(np.sqrt(r * r + 1.0))
    value_norm = spectral_norm(w.w_v, tol=tol, max_iter=max_iter, seed=seed)
    attention_norm = spectral_norm(w.attention_matrix, tol=tol, max_iter=max_iter, seed=seed)
    return castin_formula(value_norm, attention_norm, n, r)


def head_report(
    x: InputSequence,
    w: AttentionHeadWeights,
    opts: CertifyOptions,
) -> tuple[BoundReport, bool]:
    """Informe de una cabeza; el booleano indica si se excedió el presupuesto denso."""
    power = dict(tol=opts.tol, max_iter=opts.max_iter, seed=opts.seed)
    ing = bound_ingredients(x, w, **power)
    exact = None
    over_budget = False
    if opts.exact:
        try:
            exact = exact_local_lipschitz(x, w, entry_budget=opts.entry_budget, **power).value
        except CapacityError:
            over_budget = True

    report = BoundReport(
        layer=w.layer,
        head=w.head,
        exact=exact,
        refined=refined_from(ing, SoftmaxTerm.G1_UPPER),
        refined_exact_softmax=refined_from(ing, SoftmaxTerm.EXACT_SIGMA1),
        refined_sqrt_n=sqrt_n_from(ing),
        specformer=specformer_from(ing, opts.ball_radius),
        castin=castin_formula(ing.value_norm, ing.attention_matrix_norm, ing.n_tokens, ing.radius),
        ingredients=ing,
    )
    violations = report.invariant_violations()
    for v in violations:
        logger.warning("bound_invariant_violated", layer=w.layer, head=w.head, violation=v)
    return report.model_copy(update={"violations": violations}), over_budget


def certify(
    x: InputSequence,
    heads: Sequence[AttentionHeadWeights],
    opts: CertifyOptions | None = None,
) -> CertificationReport:
    """Todas las cotas por cabeza (evaluadas en X) y el agregado multi-cabeza por capa.

    Si la norma exacta no cabe en el presupuesto denso se omite y se marca
    `capacity_exceeded`; las cotas se calculan igualmente.
    """
    opts = opts or CertifyOptions()
    if not heads:
        raise DimensionError("Se necesita al menos una cabeza")
    log = logger.bind(n_tokens=x.n_tokens, model_dim=x.model_dim, heads=len(heads))
    log.info("certify_started", exact=opts.exact)

    reports: list[BoundReport] = []
    capacity_exceeded = False
    for w in heads:
        report, over_budget = head_report(x, w, opts)
        reports.append(report)
        capacity_exceeded = capacity_exceeded or over_budget

    by_layer = sorted(zip(heads, reports, strict=True), key=lambda hr: hr[0].layer)
    layers = []
    for layer, group in groupby(by_layer, key=lambda hr: hr[0].layer):
        members = list(group)
        layer_heads = [w for w, _ in members]
        layer_reports = [r for _, r in members]
        refined = [r.refined for r in layer_reports]
        exacts = [r.exact for r in layer_reports]
        summary = MultiheadSummary(
            layer=layer,
            heads=len(members),
            refined_rss=multihead_jacobian_norm_bound(refined),
            refined_sum=multihead_jacobian_norm_loose(refined),
        )
        if all(e is not None for e in exacts):
            exact_concatenated = None
            try:
                jac = exact_multihead_jacobian(x, layer_heads, entry_budget=opts.entry_budget)
                exact_concatenated = power_iteration_spectral_norm(
                    jac, tol=opts.tol, max_iter=opts.max_iter, seed=opts.seed
                ).value
            except CapacityError:
                capacity_exceeded = True
            summary = summary.model_copy(
                update={
                    "exact_rss": multihead_jacobian_norm_bound(exacts),
                    "exact_sum": multihead_jacobian_norm_loose(exacts),
                    "exact_concatenated": exact_concatenated,
                }
            )
        layers.append(summary)

    result = CertificationReport(heads=reports, layers=layers, capacity_exceeded=capacity_exceeded)
    log.info(
        "certify_finished",
        capacity_exceeded=capacity_exceeded,
        violations=len(result.violations),
    )
    return result
