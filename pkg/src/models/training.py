"""Modelo de juguete, dataset sintético y traza de entrenamiento."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, field_validator

from src.errors import DimensionError, DomainError
from src.linalg.spectral import Matrix, make_rng
from src.models.attention import AttentionHeadWeights, HeadGradient

Vector = npt.NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class ToyModel:
    """Pila de L capas de H cabezas (H·d = D, sin residuales) + readout lineal.

    Cada capa concatena las salidas de sus cabezas en el eje de features; el
    readout actúa sobre la media de los tokens de la última capa.
    """

    layers: tuple[tuple[AttentionHeadWeights, ...], ...]
    readout: Matrix
    readout_bias: Vector
    n_tokens: int

    def __post_init__(self) -> None:
        if not self.layers or any(not layer for layer in self.layers):
            raise DimensionError("El modelo necesita al menos una capa con una cabeza")
        if self.n_tokens < 1:
            raise DimensionError(f"n_tokens debe ser >= 1, recibido {self.n_tokens}")
        d_model = self.layers[0][0].model_dim
        for l_idx, layer in enumerate(self.layers):
            for w in layer:
                if w.model_dim != d_model:
                    raise DimensionError(
                        f"Capa {l_idx}: D={w.model_dim}, se esperaba {d_model}"
                    )
            if sum(w.head_dim for w in layer) != d_model:
                raise DimensionError(f"Capa {l_idx}: la suma de head_dim debe ser D={d_model}")
        readout = np.asarray(self.readout, dtype=np.float64)
        bias = np.asarray(self.readout_bias, dtype=np.float64)
        if readout.ndim != 2 or readout.shape[0] != d_model:
            raise DimensionError(f"readout debe ser D×C con D={d_model}, recibido {readout.shape}")
        if readout.shape[1] < 2:
            raise DimensionError("Se necesitan al menos 2 clases")
        if bias.shape != (readout.shape[1],):
            raise DimensionError(f"readout_bias debe tener longitud {readout.shape[1]}")
        object.__setattr__(self, "readout", readout)
        object.__setattr__(self, "readout_bias", bias)

    @classmethod
    def initialize(
        cls,
        seed: int,
        *,
        n_tokens: int,
        model_dim: int,
        heads: int,
        layers: int,
        classes: int,
        weight_scale: float = 1.0,
    ) -> ToyModel:
        """Pesos N(0, weight_scale²/D); readout N(0, 1/D), sesgo nulo."""
        if heads < 1 or layers < 1:
            raise DomainError("heads y layers deben ser >= 1")
        if model_dim % heads:
            raise DomainError(f"D={model_dim} no es divisible entre H={heads}")
        rng = make_rng(seed)
        d = model_dim // heads
        std = weight_scale / np.sqrt(model_dim)
        built = []
        for l_idx in range(layers):
            built.append(
                tuple(
                    AttentionHeadWeights(
                        w_q=rng.normal(0.0, std, (model_dim, d)),
                        w_k=rng.normal(0.0, std, (model_dim, d)),
                        w_v=rng.normal(0.0, std, (model_dim, d)),
                        layer=l_idx,
                        head=h_idx,
                    )
                    for h_idx in range(heads)
                )
            )
        readout = rng.normal(0.0, 1.0 / np.sqrt(model_dim), (model_dim, classes))
        return cls(
            layers=tuple(built),
            readout=readout,
            readout_bias=np.zeros(classes),
            n_tokens=n_tokens,
        )

    @property
    def model_dim(self) -> int:
        return self.layers[0][0].model_dim

    @property
    def head_dim(self) -> int:
        return self.layers[0][0].head_dim

    @property
    def classes(self) -> int:
        return int(self.readout.shape[1])

    @property
    def heads(self) -> list[AttentionHeadWeights]:
        return [w for layer in self.layers for w in layer]

    def updated(
        self,
        head_grads: Sequence[Sequence[HeadGradient]],
        readout_grad: Matrix,
        readout_bias_grad: Vector,
        lr: float,
    ) -> ToyModel:
        """Un paso de descenso de gradiente; devuelve un modelo nuevo."""
        layers = tuple(
            tuple(
                AttentionHeadWeights(
                    w_q=w.w_q - lr * g.w_q,
                    w_k=w.w_k - lr * g.w_k,
                    w_v=w.w_v - lr * g.w_v,
                    layer=w.layer,
                    head=w.head,
                )
                for w, g in zip(layer, grads, strict=True)
            )
            for layer, grads in zip(self.layers, head_grads, strict=True)
        )
        return ToyModel(
            layers=layers,
            readout=self.readout - lr * readout_grad,
            readout_bias=self.readout_bias - lr * readout_bias_grad,
            n_tokens=self.n_tokens,
        )


@dataclass(frozen=True, eq=False)
class SyntheticDataset:
    """Secuencias (S, N, D) con tokens gaussianos alrededor de la media de su clase."""

    x: npt.NDArray[np.float64]
    labels: npt.NDArray[np.int64]
    class_means: Matrix
    noise: float
    seed: int

    @property
    def n_samples(self) -> int:
        return int(self.labels.shape[0])

    @property
    def classes(self) -> int:
        return int(self.class_means.shape[0])

    @property
    def n_tokens(self) -> int:
        return int(self.x.shape[1])

    @property
    def model_dim(self) -> int:
        return int(self.class_means.shape[1])

    def sample_probes(
        self, count: int, seed: int
    ) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.int64]]:
        """Secuencias nuevas de las mismas clases (conjunto de sondeo fuera de entrenamiento)."""
        if count < 1:
            raise DomainError(f"count debe ser >= 1, recibido {count}")
        rng = make_rng(seed)
        labels = rng.integers(0, self.classes, size=count)
        x = self.class_means[labels][:, None, :] + self.noise * rng.standard_normal(
            (count, self.n_tokens, self.model_dim)
        )
        return x, labels


class TrainRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: int
    task_loss: float
    jasmin_loss: float
    train_accuracy: float
    jacobian_norm: float | None = None
    max_g1: float
    mean_g1: float


class TrainTrace(BaseModel):
    records: list[TrainRecord]

    @field_validator("records")
    @classmethod
    def validate_steps(cls, v: list[TrainRecord]) -> list[TrainRecord]:
        steps = [r.step for r in v]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("Los pasos de la traza deben ser estrictamente crecientes")
        return v

    @property
    def final(self) -> TrainRecord:
        return self.records[-1]

    @property
    def final_jacobian_norm(self) -> float | None:
        measured = [r.jacobian_norm for r in self.records if r.jacobian_norm is not None]
        return measured[-1] if measured else None
