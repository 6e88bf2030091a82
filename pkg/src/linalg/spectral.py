"""Primitivas espectrales densas: power iteration y autovalores simétricos (Jacobi)."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import structlog

from src.errors import DimensionError, DomainError, EvaluationError, SymmetryError

logger = structlog.get_logger()

Matrix = npt.NDArray[np.float64]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000
DEFAULT_SEED = 0
KRYLOV_DIM = 32
KRYLOV_BREAKDOWN = 1e-12

JACOBI_REL_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class SpectralResult:
    """Estimación de σ₁ producida por power iteration."""

    value: float
    iterations: int
    converged: bool
    residual: float

    def __post_init__(self) -> None:
        if self.value < 0:
            raise DomainError(f"σ₁ estimado negativo: {self.value}")


def as_matrix(values: npt.ArrayLike, name: str = "matrix") -> Matrix:
    """Convierte a matriz float64 2-D validando que todas las entradas sean finitas."""
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"{name} debe ser 2-D, recibido ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} contiene entradas no finitas")
    return m


def make_rng(seed: int) -> np.random.Generator:
    """Generador Philox (counter-based, 64 bits): reproducible entre plataformas."""
    return np.random.Generator(np.random.Philox(seed))


# ── Power iteration ──────────────────────────────────────────────


def _ritz_refine(
    apply_gram: Callable[[npt.NDArray[np.float64]], npt.NDArray[np.float64]],
    v: npt.NDArray[np.float64],
    size: int,
) -> tuple[float, npt.NDArray[np.float64], float]:
    """Rayleigh-Ritz sobre el espacio de Krylov K_size(G, v) con reortogonalización completa.

    Separa autovalores casi empatados que la power iteration no distingue
    dentro de su presupuesto. Si size alcanza la dimensión, el resultado es exacto.
    """
    dim = v.shape[0]
    basis = np.zeros((dim, size))
    images = np.zeros((dim, size))
    basis[:, 0] = v
    used = size
    for j in range(size):
        w = apply_gram(basis[:, j])
        if not np.all(np.isfinite(w)):
            raise EvaluationError("El operador devolvió valores no finitos")
        images[:, j] = w
        if j + 1 == size:
            break
        q = w - basis[:, : j + 1] @ (basis[:, : j + 1].T @ w)
        q -= basis[:, : j + 1] @ (basis[:, : j + 1].T @ q)
        norm_q = float(np.linalg.norm(q))
        if norm_q <= KRYLOV_BREAKDOWN * max(float(np.linalg.norm(w)), np.finfo(np.float64).tiny):
            # Subespacio invariante: los Ritz ya son autovalores
            used = j + 1
            break
        basis[:, j + 1] = q / norm_q

    b, gb = basis[:, :used], images[:, :used]
    h = b.T @ gb
    vals, vecs = np.linalg.eigh((h + h.T) / 2)
    theta = float(vals[-1])
    ritz = b @ vecs[:, -1]
    ritz /= np.linalg.norm(ritz)
    residual = float(np.linalg.norm(gb @ vecs[:, -1] - theta * ritz)) / max(
        abs(theta), np.finfo(np.float64).tiny
    )
    return theta, ritz, residual


def power_iteration_operator(
    apply_gram: Callable[[npt.NDArray[np.float64]], npt.NDArray[np.float64]],
    dim: int,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> tuple[SpectralResult, npt.NDArray[np.float64]]:
    """Power iteration sobre un operador v ↦ MᵀMv (simétrico, PSD).

    El vector inicial es uniforme en la esfera unidad (gaussiano normalizado
    con semilla fija). Se detiene cuando el residuo ‖Gv − ρv‖ / ρ cae por
    debajo de `tol`, con ρ el cociente de Rayleigh. Si se agota `max_iter`,
    el último vector arranca un refinamiento de Rayleigh-Ritz sobre un
    espacio de Krylov de dimensión min(dim, KRYLOV_DIM, max_iter).

    Returns:
        (SpectralResult con σ₁ = √λ_max, vector singular derecho estimado).
    """
    if dim < 1:
        raise DimensionError("El operador no puede tener dimensión 0")
    if tol <= 0:
        raise DomainError(f"tol debe ser > 0, recibido {tol}")
    if max_iter < 1:
        raise DomainError(f"max_iter debe ser >= 1, recibido {max_iter}")

    rng = make_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)

    estimate = 0.0
    residual = np.inf
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        w = apply_gram(v)
        if not np.all(np.isfinite(w)):
            raise EvaluationError("El operador devolvió valores no finitos")
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            # Operador nulo en la dirección actual: σ₁ = 0
            estimate, residual, converged = 0.0, 0.0, True
            break
        estimate = float(v @ w)
        residual = float(np.linalg.norm(w - estimate * v)) / max(
            abs(estimate), np.finfo(np.float64).tiny
        )
        if residual <= tol:
            converged = True
            break
        v = w / norm_w

    if not converged:
        size = min(dim, KRYLOV_DIM, max_iter)
        theta, ritz, ritz_residual = _ritz_refine(apply_gram, v, size)
        if theta >= estimate:
            estimate, v, residual = theta, ritz, ritz_residual
        converged = residual <= tol

    if not converged:
        logger.warning(
            "power_iteration_not_converged",
            iterations=iterations,
            residual=residual,
            tol=tol,
        )

    result = SpectralResult(
        value=float(np.sqrt(max(estimate, 0.0))),
        iterations=iterations,
        converged=converged,
        residual=float(residual),
    )
    return result, v


def top_singular_pair(
    m: npt.ArrayLike,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> tuple[SpectralResult, npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """σ₁ con sus vectores singulares (u, v), m·v = σ₁·u."""
    mat = as_matrix(m)
    if mat.size == 0:
        raise DimensionError("La matriz está vacía")

    # Se itera sobre el lado pequeño del Gram; el resultado es el mismo σ₁
    if mat.shape[0] < mat.shape[1]:
        gram = mat @ mat.T
        result, u = power_iteration_operator(
            lambda x: gram @ x, gram.shape[0], tol=tol, max_iter=max_iter, seed=seed
        )
        v = mat.T @ u
        v = v / result.value if result.value > 0 else v
        return result, u, v

    gram = mat.T @ mat
    result, v = power_iteration_operator(
        lambda x: gram @ x, gram.shape[0], tol=tol, max_iter=max_iter, seed=seed
    )
    u = mat @ v
    u = u / result.value if result.value > 0 else u
    return result, u, v


def power_iteration_spectral_norm(
    m: npt.ArrayLike,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> SpectralResult:
    """Norma espectral σ₁(m) por power iteration sobre el Gram de m."""
    result, _, _ = top_singular_pair(m, tol=tol, max_iter=max_iter, seed=seed)
    return result


def spectral_norm(
    m: npt.ArrayLike,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> float:
    """Atajo: solo el valor de σ₁. Una matriz vacía tiene norma 0."""
    mat = as_matrix(m)
    if mat.size == 0:
        return 0.0
    return power_iteration_spectral_norm(mat, tol=tol, max_iter=max_iter, seed=seed).value


# ── Autovalores simétricos ───────────────────────────────────────


def _round_robin_rounds(n: int) -> list[tuple[npt.NDArray[np.intp], npt.NDArray[np.intp]]]:
    """Orden cíclico tipo torneo: cada ronda son pares (p, q) disjuntos.

    Con n impar se añade un índice ficticio que se descarta. En n-1 rondas
    (n par) aparecen todos los pares exactamente una vez.
    """
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            ps, qs = zip(*pairs, strict=True)
            rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


def symmetric_eigenvalues(m: npt.ArrayLike) -> list[float]:
    """Autovalores de una matriz simétrica, en orden descendente.

    Jacobi cíclico: cada ronda aplica a la vez rotaciones sobre pares
    disjuntos. Itera hasta que la norma de Frobenius fuera de la diagonal
    sea ≤ 1e-13·‖m‖_F.

    Raises:
        DimensionError: si la matriz no es cuadrada.
        SymmetryError: si |m - mᵀ| supera 1e-12 (relativo a max(1, max|m|)).
    """
    a = as_matrix(m).copy()
    n, cols = a.shape
    if n != cols:
        raise DimensionError(f"Se esperaba una matriz cuadrada, recibido {a.shape}")
    if n == 0:
        return []
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOL * scale:
        raise SymmetryError("La matriz no es simétrica dentro de la tolerancia")

    a = (a + a.T) / 2.0
    frobenius = float(np.linalg.norm(a))
    threshold = JACOBI_REL_TOL * frobenius
    rounds = _round_robin_rounds(n)

    for sweep in range(JACOBI_MAX_SWEEPS):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= threshold:
            break
        for ps, qs in rounds:
            apq = a[ps, qs]
            active = apq != 0.0
            if not np.any(active):
                continue
            ps, qs, apq = ps[active], qs[active], apq[active]
            theta = (a[qs, qs] - a[ps, ps]) / (2.0 * apq)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            col_p = a[:, ps].copy()
            col_q = a[:, qs].copy()
            a[:, ps] = c * col_p - s * col_q
            a[:, qs] = s * col_p + c * col_q
            row_p = a[ps, :].copy()
            row_q = a[qs, :].copy()
            a[ps, :] = c[:, None] * row_p - s[:, None] * row_q
            a[qs, :] = s[:, None] * row_p + c[:, None] * row_q
            a[ps, qs] = 0.0
            a[qs, ps] = 0.0
    else:
        logger.warning("jacobi_sweep_limit_reached", n=n, sweeps=JACOBI_MAX_SWEEPS)

    return sorted((float(x) for x in np.diag(a)), reverse=True)


# ── Matrices por bloques ─────────────────────────────────────────


def assemble_blocks(blocks: Sequence[Sequence[npt.ArrayLike]]) -> Matrix:
    """Ensambla una rejilla de bloques validando que las formas sean consistentes."""
    grid = [[as_matrix(b, name="block") for b in row] for row in blocks]
    if not grid or not grid[0]:
        raise DimensionError("La rejilla de bloques está vacía")
    n_cols = len(grid[0])
    if any(len(row) != n_cols for row in grid):
        raise DimensionError("Todas las filas de bloques deben tener el mismo número de bloques")

    row_heights = [row[0].shape[0] for row in grid]
    col_widths = [b.shape[1] for b in grid[0]]
    for i, row in enumerate(grid):
        for j, block in enumerate(row):
            if block.shape != (row_heights[i], col_widths[j]):
                raise DimensionError(
                    f"Bloque ({i}, {j}) con forma {block.shape}, "
                    f"se esperaba {(row_heights[i], col_widths[j])}"
                )
    return np.block(grid)


def kronecker_free_block_norm(
    blocks: Sequence[Sequence[npt.ArrayLike]],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = DEFAULT_SEED,
) -> SpectralResult:
    """Norma espectral de la matriz por bloques ensamblada densamente."""
    return power_iteration_spectral_norm(
        assemble_blocks(blocks), tol=tol, max_iter=max_iter, seed=seed
    )
