"""Modelos de los informes de certificación y de las filas de los barridos."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from src import __version__

SOUNDNESS_REL_SLACK = 1e-6


class BoundIngredients(BaseModel):
    """Escalares intermedios de las cotas, guardados para auditoría."""

    value_norm: float = Field(ge=0)
    attention_matrix_norm: float = Field(ge=0)
    input_norm: float = Field(ge=0)
    input_frobenius: float = Field(ge=0)
    query_norm: float = Field(ge=0)
    key_norm: float = Field(ge=0)
    map_norm: float = Field(ge=0)
    max_g1: float = Field(ge=0)
    max_softmax_sigma: float = Field(ge=0)
    radius: float = Field(ge=0)
    n_tokens: int = Field(ge=1)


class BoundReport(BaseModel):
    """Todas las cotas y la norma exacta para un par (pesos de una cabeza, entrada)."""

    layer: int = 0
    head: int = 0
    exact: float | None = Field(default=None, ge=0)
    refined: float
    refined_exact_softmax: float
    refined_sqrt_n: float
    specformer: float
    castin: float
    ingredients: BoundIngredients
    violations: list[str] = Field(default_factory=list)

    @property
    def bounds(self) -> dict[str, float]:
        return {
            "refined": self.refined,
            "refined_exact_softmax": self.refined_exact_softmax,
            "refined_sqrt_n": self.refined_sqrt_n,
            "specformer": self.specformer,
            "castin": self.castin,
        }

    def invariant_violations(self, slack: float = SOUNDNESS_REL_SLACK) -> list[str]:
        """Cotas por debajo de la norma exacta y órdenes de nitidez incumplidos."""
        found = []
        if self.exact is not None:
            floor = self.exact - slack * self.exact
            found += [
                f"{name}={value!r} < exact={self.exact!r}"
                for name, value in self.bounds.items()
                if value < floor
            ]
        if self.refined > self.specformer:
            found.append(f"refined={self.refined!r} > specformer={self.specformer!r}")
        if self.refined_sqrt_n > self.castin:
            found.append(f"refined_sqrt_n={self.refined_sqrt_n!r} > castin={self.castin!r}")
        if self.refined_exact_softmax > self.refined * (1 + slack):
            found.append(
                f"refined_exact_softmax={self.refined_exact_softmax!r} > refined={self.refined!r}"
            )
        return found


class MultiheadSummary(BaseModel):
    """Agregado por capa: raíz de la suma de cuadrados y suma simple."""

    layer: int
    heads: int = Field(ge=1)
    refined_rss: float
    refined_sum: float
    exact_rss: float | None = None
    exact_sum: float | None = None
    exact_concatenated: float | None = None


class CertificationReport(BaseModel):
    heads: list[BoundReport]
    layers: list[MultiheadSummary]
    capacity_exceeded: bool = False

    @property
    def violations(self) -> list[str]:
        return [
            f"layer={r.layer} head={r.head}: {v}" for r in self.heads for v in r.violations
        ]


class RunMetadata(BaseModel):
    tool_version: str = __version__
    seed: int
    power_tol: float
    power_max_iter: int
    dense_entry_budget: int
    ball_radius: float = 0.0
    exact: bool = True


class ReportFile(BaseModel):
    """Documento JSON emitido por `certify`."""

    model_config = ConfigDict(frozen=True)

    metadata: RunMetadata
    certification: CertificationReport


# ── Filas CSV de los barridos ────────────────────────────────────


class SweepRow(BaseModel):
    """Una instancia del barrido de cotas."""

    model_config = ConfigDict(populate_by_name=True)

    instance_id: int
    n_tokens: int = Field(alias="N")
    model_dim: int = Field(alias="D")
    head_dim: int = Field(alias="d")
    exact: float | None = None
    refined: float = Field(alias="ours_eq4")
    refined_sqrt_n: float = Field(alias="ours_appc")
    specformer: float
    castin: float
    max_g1: float
    max_sigma1: float


class SimplexTrialRow(BaseModel):
    """Un vector muestreado del barrido de entrelazado."""

    n: int
    x1: float
    g1: float
    sigma1: float
    sandwich_ok: bool
    ratio: float | None = None


SWEEP_CSV_HEADER = (
    "instance_id",
    "N",
    "D",
    "d",
    "exact",
    "ours_eq4",
    "ours_appc",
    "specformer",
    "castin",
    "max_g1",
    "max_sigma1",
)

SIMPLEX_CSV_HEADER = ("n", "x1", "g1", "sigma1", "sandwich_ok", "ratio")

TRACE_CSV_HEADER = (
    "step",
    "task_loss",
    "jasmin_loss",
    "train_accuracy",
    "jacobian_norm",
    "max_g1",
    "mean_g1",
)
