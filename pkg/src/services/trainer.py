"""Demo de entrenamiento a escala de juguete: clasificador de atención + JaSMin.

Descenso de gradiente de lote completo sobre entropía cruzada + λ·JaSMin
(+ penalización Specformer opcional), con gradientes analíticos de extremo
a extremo. Periódicamente se mide la norma espectral del Jacobiano de la pila
de atención (sin embedding ni readout) sobre un conjunto de sondeo.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import structlog

from src.errors import CapacityError, DimensionError, DomainError, TrainingDivergenceError
from src.linalg.differentiation import DEFAULT_STEP, directional_derivative
from src.linalg.spectral import (
    DEFAULT_MAX_ITER,
    DEFAULT_SEED,
    DEFAULT_TOL,
    Matrix,
    SpectralResult,
    make_rng,
    power_iteration_operator,
    power_iteration_spectral_norm,
)
from src.models.attention import HeadGradient, InputSequence
from src.models.jasmin import JasminConfig
from src.models.training import SyntheticDataset, ToyModel, TrainRecord, TrainTrace
from src.services.attention import (
    DEFAULT_ENTRY_BUDGET,
    HeadCache,
    exact_multihead_jacobian,
    head_backward,
    head_forward,
)
from src.services.jasmin import (
    SpecformerCoefficients,
    map_cotangent,
    specformer_penalty,
    specformer_penalty_gradient,
)
from src.services.softmax_analysis import g_values, softmax_rows

logger = structlog.get_logger()

Array = npt.NDArray[np.float64]

DEFAULT_SEPARATION = 2.0
DEFAULT_NOISE = 1.0


# ── Dataset ──────────────────────────────────────────────────────


def generate_synthetic_dataset(
    seed: int,
    n_samples: int,
    n_tokens: int,
    model_dim: int,
    classes: int,
    *,
    separation: float = DEFAULT_SEPARATION,
    noise: float = DEFAULT_NOISE,
) -> SyntheticDataset:
    """Tokens N(μ_c, noise²·I) con medias ortogonales de norma `separation`; etiquetas balanceadas."""
    if classes < 2:
        raise DomainError(f"Se necesitan al menos 2 clases, recibido {classes}")
    if classes > model_dim:
        raise DomainError(f"classes={classes} > D={model_dim}: las medias no son ortogonales")
    if n_samples < 0 or n_tokens < 1:
        raise DomainError("n_samples debe ser >= 0 y n_tokens >= 1")
    rng = make_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((model_dim, classes)))
    class_means = separation * q.T
    labels = rng.permutation(np.arange(n_samples) % classes)
    x = class_means[labels][:, None, :] + noise * rng.standard_normal(
        (n_samples, n_tokens, model_dim)
    )
    return SyntheticDataset(
        x=x, labels=labels.astype(np.int64), class_means=class_means, noise=noise, seed=seed
    )


# ── Forward / backward del modelo ────────────────────────────────


@dataclass(frozen=True, eq=False)
class ModelForward:
    caches: list[list[HeadCache]]
    hidden: Array
    pooled: Array
    logits: Array


def model_forward(model: ToyModel, x: npt.ArrayLike) -> ModelForward:
    """Forward sobre (..., N, D): pila de atención, media de tokens y readout."""
    h = np.asarray(x, dtype=np.float64)
    if h.shape[-2:] != (model.n_tokens, model.model_dim):
        raise DimensionError(
            f"Se esperaba (..., {model.n_tokens}, {model.model_dim}), recibido {h.shape}"
        )
    caches = []
    for layer in model.layers:
        layer_caches = [head_forward(h, w) for w in layer]
        caches.append(layer_caches)
        h = np.concatenate([c.output for c in layer_caches], axis=-1)
    pooled = h.mean(axis=-2)
    return ModelForward(
        caches=caches, hidden=h, pooled=pooled, logits=pooled @ model.readout + model.readout_bias
    )


def _stack_backward(
    model: ToyModel,
    caches: list[list[HeadCache]],
    d_hidden: Array,
    d_probs: list[list[Array | None]] | None = None,
) -> tuple[Array, list[list[HeadGradient]]]:
    """Propaga ∂L/∂salida de la pila hasta X; devuelve (∂L/∂X, gradientes por capa)."""
    grads: list[list[HeadGradient]] = [[] for _ in model.layers]
    d_h = d_hidden
    for l_idx in reversed(range(len(model.layers))):
        offsets = np.cumsum([0] + [w.head_dim for w in model.layers[l_idx]])
        d_x = None
        for h_idx, cache in enumerate(caches[l_idx]):
            extra = None if d_probs is None else d_probs[l_idx][h_idx]
            d_out = d_h[..., offsets[h_idx] : offsets[h_idx + 1]]
            dx_head, grad = head_backward(cache, d_out, extra)
            grads[l_idx].append(grad)
            d_x = dx_head if d_x is None else d_x + dx_head
        d_h = d_x
    return d_h, grads


@dataclass(frozen=True, eq=False)
class LossState:
    """Pérdidas, métricas y gradientes del modelo en un punto de los parámetros."""

    task_loss: float
    jasmin_loss: float
    penalty: float
    total_loss: float
    accuracy: float
    max_g1: float
    mean_g1: float
    head_grads: list[list[HeadGradient]]
    readout_grad: Matrix
    readout_bias_grad: Array


def loss_and_gradients(
    model: ToyModel,
    x: Array,
    labels: npt.NDArray[np.int64],
    cfg: JasminConfig,
    specformer: SpecformerCoefficients | None = None,
) -> LossState:
    """CE media + λ·media por muestra de Σ_{l,h} JaSMin (+ penalización Specformer)."""
    batch = x.shape[0]
    fwd = model_forward(model, x)

    # Entropía cruzada estable
    shifted = fwd.logits - fwd.logits.max(axis=-1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    task_loss = float(-log_probs[np.arange(batch), labels].mean())
    accuracy = float(np.mean(np.argmax(fwd.logits, axis=-1) == labels))

    d_logits = softmax_rows(fwd.logits)
    d_logits[np.arange(batch), labels] -= 1.0
    d_logits /= batch
    readout_grad = fwd.pooled.T @ d_logits
    bias_grad = d_logits.sum(axis=0)
    d_pooled = d_logits @ model.readout.T
    d_hidden = np.repeat(d_pooled[:, None, :] / model.n_tokens, model.n_tokens, axis=1)

    jasmin_per_sample = np.zeros(batch)
    d_probs: list[list[Array | None]] = []
    g1_rows = []
    for layer_caches in fwd.caches:
        layer_d = []
        for cache in layer_caches:
            values, cotangent, _ = map_cotangent(cache.probs, cfg)
            jasmin_per_sample += values
            layer_d.append(cfg.lambda_ * cotangent / batch if cfg.lambda_ > 0 else None)
            g1_rows.append(g_values(cache.probs)[..., 0].ravel())
        d_probs.append(layer_d)
    jasmin_loss = float(jasmin_per_sample.mean())

    _, head_grads = _stack_backward(model, fwd.caches, d_hidden, d_probs)

    penalty = 0.0
    if specformer is not None:
        penalty = specformer_penalty(model.heads, specformer)
        for l_idx, layer in enumerate(model.layers):
            extra = specformer_penalty_gradient(layer, specformer)
            head_grads[l_idx] = [g + e for g, e in zip(head_grads[l_idx], extra, strict=True)]

    g1 = np.concatenate(g1_rows)
    return LossState(
        task_loss=task_loss,
        jasmin_loss=jasmin_loss,
        penalty=penalty,
        total_loss=task_loss + cfg.lambda_ * jasmin_loss + penalty,
        accuracy=accuracy,
        max_g1=float(g1.max()),
        mean_g1=float(g1.mean()),
        head_grads=head_grads,
        readout_grad=readout_grad,
        readout_bias_grad=bias_grad,
    )


# ── Medición del Jacobiano ───────────────────────────────────────


def _readout_jacobian(model: ToyModel) -> Matrix:
    """∂logits/∂vec(H) = [Rᵀ/N, …, Rᵀ/N] (token-major)."""
    return np.tile(model.readout.T / model.n_tokens, (1, model.n_tokens))


def stack_jacobian(
    model: ToyModel,
    x: npt.ArrayLike,
    *,
    include_readout: bool = False,
    entry_budget: int = DEFAULT_ENTRY_BUDGET,
) -> Matrix:
    """Jacobiano denso de la pila (producto de los Jacobianos multi-cabeza por capa)."""
    h = np.asarray(x, dtype=np.float64)
    total = None
    for layer in model.layers:
        seq = InputSequence(h)
        jac = exact_multihead_jacobian(seq, layer, entry_budget=entry_budget)
        total = jac if total is None else jac @ total
        h = np.concatenate([head_forward(h, w).output for w in layer], axis=-1)
    if include_readout:
        total = _readout_jacobian(model) @ total
    return total


def _matrix_free_norm(
    model: ToyModel,
    x: Array,
    *,
    include_readout: bool,
    tol: float,
    max_iter: int,
    seed: int,
    fd_step: float,
) -> SpectralResult:
    """JᵀJ v con J v por diferencia central y Jᵀ u por la regla de la cadena inversa."""
    shape = x.shape

    def forward_flat(flat: Array) -> Array:
        fwd = model_forward(model, flat.reshape(shape))
        return (fwd.logits if include_readout else fwd.hidden).ravel()

    fwd = model_forward(model, x)

    def apply_gram(v: Array) -> Array:
        jv = directional_derivative(forward_flat, x.ravel(), v, h=fd_step)
        if include_readout:
            d_hidden = np.tile((model.readout @ jv) / model.n_tokens, (model.n_tokens, 1))
        else:
            d_hidden = jv.reshape(fwd.hidden.shape)
        d_x, _ = _stack_backward(model, fwd.caches, d_hidden)
        return d_x.ravel()

    result, _ = power_iteration_operator(
        apply_gram, x.size, tol=tol, max_iter=max_iter, seed=seed
    )
    return result


def measure_model_lipschitz(
    model: ToyModel,
    probe_inputs: Sequence[npt.ArrayLike] | Array,
    *,
    include_readout: bool = False,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
    entry_budget: int = DEFAULT_ENTRY_BUDGET,
    fd_step: float = DEFAULT_STEP,
) -> list[SpectralResult]:
    """‖J(x)‖₂ de la pila de atención para cada sonda.

    Se ensambla el Jacobiano denso mientras quepa en `entry_budget`; si no,
    se itera sin ensamblar.
    """
    probes = [np.asarray(p, dtype=np.float64) for p in probe_inputs]
    if not probes:
        raise DomainError("El conjunto de sondeo está vacío")
    results = []
    for probe in probes:
        try:
            jac = stack_jacobian(
                model, probe, include_readout=include_readout, entry_budget=entry_budget
            )
            results.append(
                power_iteration_spectral_norm(jac, tol=tol, max_iter=max_iter, seed=seed)
            )
        except CapacityError:
            logger.info("measurement_matrix_free", n_tokens=model.n_tokens)
            results.append(
                _matrix_free_norm(
                    model,
                    probe,
                    include_readout=include_readout,
                    tol=tol,
                    max_iter=max_iter,
                    seed=seed,
                    fd_step=fd_step,
                )
            )
    return results


# ── Entrenamiento ────────────────────────────────────────────────


def train(
    model: ToyModel,
    dataset: SyntheticDataset,
    cfg: JasminConfig,
    *,
    steps: int,
    lr: float,
    seed: int,
    measure_every: int = 25,
    probe_count: int = 32,
    specformer: SpecformerCoefficients | None = None,
    include_readout: bool = False,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    entry_budget: int = DEFAULT_ENTRY_BUDGET,
    fd_step: float = DEFAULT_STEP,
) -> tuple[ToyModel, TrainTrace]:
    """Descenso de gradiente de lote completo; un registro por paso, tras la actualización.

    La norma del Jacobiano (mediana sobre `probe_count` sondas de
    `dataset.sample_probes(probe_count, seed)`) se mide cada `measure_every`
    pasos y en el último.

    Raises:
        TrainingDivergenceError: si la pérdida deja de ser finita.
    """
    if steps < 1:
        raise DomainError(f"steps debe ser >= 1, recibido {steps}")
    if lr < 0:
        raise DomainError(f"lr debe ser >= 0, recibido {lr}")
    if measure_every < 1:
        raise DomainError(f"measure_every debe ser >= 1, recibido {measure_every}")
    if dataset.n_samples == 0:
        raise DomainError("El dataset está vacío: no se puede entrenar")
    if (dataset.n_tokens, dataset.model_dim) != (model.n_tokens, model.model_dim):
        raise DimensionError(
            f"Dataset (N={dataset.n_tokens}, D={dataset.model_dim}) incompatible con el modelo "
            f"(N={model.n_tokens}, D={model.model_dim})"
        )
    if dataset.classes != model.classes:
        raise DimensionError(f"Dataset con {dataset.classes} clases, modelo con {model.classes}")

    log = logger.bind(seed=seed, k=cfg.k, lambda_=cfg.lambda_, aggregation=cfg.aggregation.value)
    log.info("training_started", steps=steps, lr=lr, samples=dataset.n_samples)
    probes, _ = dataset.sample_probes(probe_count, seed)

    def evaluate(m: ToyModel, step: int) -> LossState:
        state = loss_and_gradients(m, dataset.x, dataset.labels, cfg, specformer)
        if not np.isfinite(state.total_loss):
            log.error("training_diverged", step=step, loss=state.total_loss)
            raise TrainingDivergenceError(step, state.total_loss)
        return state

    state = evaluate(model, 0)
    records = []
    for step in range(1, steps + 1):
        model = model.updated(state.head_grads, state.readout_grad, state.readout_bias_grad, lr)
        state = evaluate(model, step)

        jacobian_norm = None
        if step % measure_every == 0 or step == steps:
            norms = measure_model_lipschitz(
                model,
                probes,
                include_readout=include_readout,
                tol=tol,
                max_iter=max_iter,
                entry_budget=entry_budget,
                fd_step=fd_step,
            )
            jacobian_norm = float(np.median([r.value for r in norms]))
            log.info(
                "training_progress",
                step=step,
                task_loss=state.task_loss,
                jasmin_loss=state.jasmin_loss,
                accuracy=state.accuracy,
                jacobian_norm=jacobian_norm,
            )

        records.append(
            TrainRecord(
                step=step,
                task_loss=state.task_loss,
                jasmin_loss=state.jasmin_loss,
                train_accuracy=state.accuracy,
                jacobian_norm=jacobian_norm,
                max_g1=state.max_g1,
                mean_g1=state.mean_g1,
            )
        )

    trace = TrainTrace(records=records)
    log.info(
        "training_finished",
        accuracy=trace.final.train_accuracy,
        jacobian_norm=trace.final_jacobian_norm,
    )
    return model, trace
