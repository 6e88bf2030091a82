"""Tests para softmax, su Jacobiano, g_k y el sándwich de entrelazado."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import DimensionError, DomainError, OrdinalIndexError
from src.linalg.differentiation import finite_difference_jacobian
from src.linalg.spectral import make_rng
from src.models.simplex import InterlacingSandwich, SandwichLevel, SimplexVector
from src.services.softmax_analysis import (
    bifurcation_thresholds,
    classical_interlacing_bound,
    exact_singular_values,
    g_k,
    g_values,
    interlacing_sandwich,
    ordinal_statistics,
    ratio_norm_bound,
    sample_simplex,
    softmax,
    softmax_jacobian_batch,
    softmax_jacobian_matrix,
    softmax_rows,
    spectral_norm_upper_bound,
)


# ── Helpers ──────────────────────────────────────────────────────


def _make_simplex(*values: float) -> SimplexVector:
    return SimplexVector(np.array(values))


def _make_dirichlet(seed: int, n: int, concentration: float = 1.0) -> SimplexVector:
    return SimplexVector(sample_simplex(make_rng(seed), n, 1, concentration)[0])


def _make_top_uniform(
    rng: np.random.Generator, m: int, tail: int, size: int, tail_max: float = 0.9
) -> np.ndarray:
    """Filas con m entradas máximas iguales y `tail` entradas estrictamente menores."""
    raw = np.concatenate(
        [np.ones((size, m)), rng.uniform(0.0, tail_max, size=(size, tail))], axis=-1
    )
    return raw / raw.sum(axis=-1, keepdims=True)


def _spectral_norms(probs: np.ndarray) -> np.ndarray:
    """‖diag(p) − ppᵀ‖₂ por fila (oráculo LAPACK)."""
    if probs.shape[0] == 0:
        return np.zeros(0)
    return np.abs(np.linalg.eigvalsh(softmax_jacobian_batch(probs))).max(axis=-1)


simplex_draws = st.tuples(
    st.integers(min_value=0, max_value=2**32 - 1),
    st.integers(min_value=2, max_value=12),
    st.sampled_from([0.1, 0.5, 1.0, 5.0]),
)


# ── Softmax ──────────────────────────────────────────────────────


class TestSoftmax:
    def test_suma_uno_e_invariante_a_traslaciones(self) -> None:
        z = np.array([0.3, -1.0, 2.0])
        p = softmax(z)
        assert p.probs.sum() == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_allclose(softmax(z + 100.0).probs, p.probs, atol=1e-12)

    def test_logits_grandes_no_desbordan(self) -> None:
        p = softmax(np.array([1000.0, 0.0]))
        assert p.probs[0] == 1.0

    def test_entradas_invalidas(self) -> None:
        with pytest.raises(DomainError):
            softmax(np.array([0.0, np.inf]))
        with pytest.raises(DimensionError):
            softmax(np.zeros((2, 2)))
        with pytest.raises(DimensionError):
            softmax(np.zeros(0))

    def test_por_filas(self) -> None:
        rows = softmax_rows(np.arange(6.0).reshape(2, 3))
        np.testing.assert_allclose(rows.sum(axis=-1), 1.0, atol=1e-15)


class TestSimplexVector:
    def test_rechaza_suma_distinta_de_uno(self) -> None:
        with pytest.raises(DomainError):
            _make_simplex(0.5, 0.4)

    def test_rechaza_negativos(self) -> None:
        with pytest.raises(DomainError):
            _make_simplex(1.5, -0.5)

    def test_orden_estable_en_empates(self) -> None:
        p = _make_simplex(0.25, 0.5, 0.25)
        np.testing.assert_array_equal(p.order, [1, 0, 2])


class TestSoftmaxJacobian:
    def test_coincide_con_diferencias_finitas(self) -> None:
        """∂softmax/∂z = diag(p) − ppᵀ."""
        z = np.array([0.4, -0.3, 1.1, 0.0])
        p = softmax(z)
        numeric = finite_difference_jacobian(softmax_rows, z)
        np.testing.assert_allclose(softmax_jacobian_matrix(p), numeric, atol=1e-9)

    def test_simetrica_con_filas_nulas(self) -> None:
        jac = softmax_jacobian_matrix(_make_dirichlet(3, 6))
        np.testing.assert_allclose(jac, jac.T, atol=0)
        np.testing.assert_allclose(jac.sum(axis=1), 0.0, atol=1e-14)


# ── g_k ──────────────────────────────────────────────────────────


class TestGk:
    def test_valores_conocidos(self) -> None:
        p = _make_simplex(0.2, 0.5, 0.3)
        assert g_k(p, 1) == pytest.approx(0.5 * (1 - 0.5 + 0.3))
        assert g_k(p, 2) == pytest.approx(0.3 * (1 - 0.3 + 0.2))
        assert g_k(p, 3) == pytest.approx(0.2 * (1 - 0.2))

    def test_indice_fuera_de_rango(self) -> None:
        p = _make_simplex(0.5, 0.5)
        with pytest.raises(OrdinalIndexError):
            g_k(p, 0)
        with pytest.raises(OrdinalIndexError):
            g_k(p, 3)

    def test_one_hot(self) -> None:
        """One-hot: g₁ = 0 mientras la cota clásica vale 1."""
        p = _make_simplex(0.0, 1.0, 0.0)
        assert g_k(p, 1) == 0.0
        assert classical_interlacing_bound(p) == 1.0
        assert exact_singular_values(p)[0] == pytest.approx(0.0, abs=1e-15)

    def test_uniforme_es_ajustada(self) -> None:
        """En el vector uniforme g₁ = σ₁ = 1/n."""
        n = 5
        p = SimplexVector(np.full(n, 1.0 / n))
        assert g_k(p, 1) == pytest.approx(1.0 / n)
        assert exact_singular_values(p)[0] == pytest.approx(1.0 / n, abs=1e-12)

    def test_lotes(self) -> None:
        """g_values y ordinal_statistics operan sobre el último eje de cualquier lote."""
        probs = sample_simplex(make_rng(0), 4, 6).reshape(2, 3, 4)
        s, order = ordinal_statistics(probs)
        assert s.shape == order.shape == (2, 3, 4)
        assert np.all(np.diff(s, axis=-1) <= 0)
        g = g_values(probs)
        assert g[1, 2, 0] == pytest.approx(g_k(SimplexVector(probs[1, 2]), 1))


# ── Sándwich ─────────────────────────────────────────────────────


class TestInterlacingSandwich:
    @settings(deadline=None, max_examples=60)
    @given(draw=simplex_draws)
    def test_cadena_completa(self, draw: tuple[int, int, float]) -> None:
        """x_(1) ≥ g₁ ≥ σ₁ ≥ x_(2) ≥ … ≥ x_(n) ≥ g_n ≥ σ_n = 0."""
        seed, n, concentration = draw
        sandwich = interlacing_sandwich(_make_dirichlet(seed, n, concentration))
        assert sandwich.violations() == []
        assert len(sandwich.chain()) == 3 * n

    @settings(deadline=None, max_examples=60)
    @given(draw=simplex_draws)
    def test_g1_acota_la_norma_y_no_supera_un_medio(self, draw: tuple[int, int, float]) -> None:
        seed, n, concentration = draw
        p = _make_dirichlet(seed, n, concentration)
        bound = spectral_norm_upper_bound(p)
        assert bound <= 0.5 + 1e-12
        assert exact_singular_values(p)[0] <= bound + 1e-10
        assert bound <= classical_interlacing_bound(p)

    def test_empate_maximo(self) -> None:
        """(1/2, 1/2) alcanza g₁ = σ₁ = 1/2."""
        sandwich = interlacing_sandwich(_make_simplex(0.5, 0.5))
        assert sandwich.holds()
        assert sandwich.g_values[0] == 0.5
        assert sandwich.exact_singular_values[0] == pytest.approx(0.5, abs=1e-15)

    def test_necesita_dos_componentes(self) -> None:
        with pytest.raises(DimensionError):
            interlacing_sandwich(_make_simplex(1.0))

    def test_detecta_violaciones(self) -> None:
        """Una cadena manipulada se reporta en lugar de lanzar."""
        broken = InterlacingSandwich(
            levels=(SandwichLevel(0.6, 0.3, 0.35), SandwichLevel(0.4, 0.24, 0.0))
        )
        assert not broken.holds()
        assert any("g_1" in v for v in broken.violations())


# ── Umbrales ─────────────────────────────────────────────────────


class TestBifurcationThresholds:
    def test_raices(self) -> None:
        t = bifurcation_thresholds(0.16)
        assert t.lower == pytest.approx(0.2)
        assert t.upper == pytest.approx(0.8)
        assert t.lower * (1 - t.lower) == pytest.approx(0.16)

    def test_un_cuarto_colapsa(self) -> None:
        t = bifurcation_thresholds(0.25)
        assert t.lower == t.upper == 0.5

    def test_gamma_diminuto(self) -> None:
        t = bifurcation_thresholds(1e-20)
        assert t.lower == pytest.approx(1e-20)

    @pytest.mark.parametrize("gamma", [0.0, -0.1, 0.3])
    def test_fuera_de_dominio(self, gamma: float) -> None:
        with pytest.raises(DomainError):
            bifurcation_thresholds(gamma)

    def test_excluye_la_banda(self) -> None:
        t = bifurcation_thresholds(0.16)
        assert t.excludes(0.9)
        assert t.excludes(0.1)
        assert not t.excludes(0.5)

    def test_consistencia_con_g1(self) -> None:
        """Toda fila con g₁ = γ ≤ 1/4 tiene x_(1) fuera de (lower(γ), upper(γ))."""
        rng = make_rng(2)
        checked = 0
        for probs in sample_simplex(rng, 4, 300, concentration=0.2):
            p = SimplexVector(probs)
            gamma = g_k(p, 1)
            if not 0 < gamma <= 0.25:
                continue
            checked += 1
            assert bifurcation_thresholds(gamma).excludes(float(p.sorted_desc[0]), margin=1e-12)
        assert checked > 0

    @pytest.mark.slow
    @pytest.mark.parametrize("gamma", [0.1, 0.16, 0.2])
    def test_cien_mil_filas_por_rechazo(self, gamma: float) -> None:
        """10⁵ filas aceptadas con g₁ ≤ γ, n ∈ [2, 50]: ninguna con x_(1) dentro de la banda."""
        t = bifurcation_thresholds(gamma)
        rng = make_rng(round(gamma * 1000))
        accepted = 0
        while accepted < 100_000:
            for n in range(2, 51):
                for concentration in (0.1, 1.0):
                    probs = sample_simplex(rng, n, 200, concentration)
                    top = probs[g_values(probs)[:, 0] <= gamma].max(axis=-1)
                    assert all(t.excludes(float(x), margin=1e-9) for x in top)
                    accepted += top.size


class TestRatioNormBound:
    def test_valores(self) -> None:
        assert ratio_norm_bound(1.0, 4) == pytest.approx(0.5)
        assert ratio_norm_bound(1.0, 8) == pytest.approx((1 - np.sqrt(0.5)) / 2)

    def test_acota_al_uniforme(self) -> None:
        """Uniforme con n = k = 8: g₁/g₈ = 8/7 y la cota supera σ₁ = 1/8."""
        p = SimplexVector(np.full(8, 1.0 / 8))
        gamma = g_k(p, 1) / g_k(p, 8)
        assert gamma == pytest.approx(8 / 7)
        assert exact_singular_values(p)[0] <= ratio_norm_bound(gamma, 8)

    def test_creciente_en_gamma(self) -> None:
        assert ratio_norm_bound(1.0, 12) < ratio_norm_bound(2.0, 12) < ratio_norm_bound(3.0, 12)

    @pytest.mark.parametrize(("gamma", "k"), [(1.0, 3), (0.5, 8), (2.5, 8)])
    def test_fuera_de_dominio(self, gamma: float, k: int) -> None:
        with pytest.raises(DomainError):
            ratio_norm_bound(gamma, k)

    def test_cociente_uno_iguala_los_k_mayores(self) -> None:
        """g₁/g_k = 1 con x_(1) < 1 solo si x_(1) = … = x_(k); con k máximos iguales no basta."""
        k, rng = 10, make_rng(31)
        for m in range(k + 1, 31):
            probs = _make_top_uniform(rng, m, int(rng.integers(0, 21)), 50)
            g = g_values(probs)
            np.testing.assert_allclose(g[:, 0] / g[:, k - 1], 1.0, rtol=0, atol=1e-12)
            s, _ = ordinal_statistics(probs)
            assert np.all(s[:, 0] < 1.0)
            assert np.all(s[:, 0] - s[:, k - 1] <= 1e-9)
        probs = _make_top_uniform(rng, k, 5, 50)
        g = g_values(probs)
        assert np.all(g[:, 0] / g[:, k - 1] > 1.0 + 1e-9)

    @pytest.mark.slow
    @pytest.mark.parametrize("gamma", [1.0, 10 / 8, 10 / 4])
    def test_muestras_restringidas_con_k_diez(self, gamma: float) -> None:
        """Filas con g₁/g₁₀ ≤ γ: σ₁ ≤ ratio_norm_bound(γ, 10)."""
        k = 10
        bound = ratio_norm_bound(gamma, k)
        rng = make_rng(round(gamma * 100))
        batches = [_make_top_uniform(rng, m, tail, 100) for m in range(k + 1, 31) for tail in (0, 10)]
        batches += [
            sample_simplex(rng, n, 500, concentration)
            for n in range(k + 1, 41)
            for concentration in (5.0, 50.0, 500.0)
        ]
        accepted = 0
        for probs in batches:
            g = g_values(probs)
            kept = probs[g[:, 0] / g[:, k - 1] <= gamma + 1e-9]
            assert np.all(_spectral_norms(kept) <= bound + 1e-12)
            accepted += kept.shape[0]
        assert accepted >= 2000


class TestSampleSimplex:
    def test_forma_y_validez(self) -> None:
        draws = sample_simplex(make_rng(0), 7, 20)
        assert draws.shape == (20, 7)
        for row in draws:
            SimplexVector(row)

    def test_determinista(self) -> None:
        np.testing.assert_array_equal(
            sample_simplex(make_rng(9), 3, 5), sample_simplex(make_rng(9), 3, 5)
        )

    def test_parametros_invalidos(self) -> None:
        with pytest.raises(DimensionError):
            sample_simplex(make_rng(0), 0, 1)
        with pytest.raises(DomainError):
            sample_simplex(make_rng(0), 3, 1, concentration=0.0)
