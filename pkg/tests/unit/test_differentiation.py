"""Tests para las diferencias centrales."""

import numpy as np
import pytest

from src.errors import DimensionError, DomainError, EvaluationError
from src.linalg.differentiation import directional_derivative, finite_difference_jacobian
from src.linalg.spectral import make_rng


def _make_linear(seed: int = 0) -> np.ndarray:
    return make_rng(seed).standard_normal((3, 4))


class TestFiniteDifferenceJacobian:
    def test_funcion_lineal(self) -> None:
        m = _make_linear()
        jac = finite_difference_jacobian(lambda x: m @ x, np.ones(4))
        np.testing.assert_allclose(jac, m, atol=1e-8)

    def test_funcion_no_lineal(self) -> None:
        """∂ sin(x) = diag(cos(x))."""
        x0 = np.array([0.1, -0.7, 1.3])
        jac = finite_difference_jacobian(np.sin, x0)
        np.testing.assert_allclose(jac, np.diag(np.cos(x0)), atol=1e-8)

    def test_salida_matricial_se_aplana(self) -> None:
        jac = finite_difference_jacobian(lambda x: np.outer(x, x), np.array([1.0, 2.0]))
        assert jac.shape == (4, 2)

    def test_paso_no_positivo(self) -> None:
        with pytest.raises(DomainError):
            finite_difference_jacobian(np.sin, np.ones(2), h=0.0)

    def test_entrada_vacia(self) -> None:
        with pytest.raises(DimensionError):
            finite_difference_jacobian(np.sin, np.zeros(0))

    def test_salida_no_finita(self) -> None:
        with pytest.raises(EvaluationError):
            finite_difference_jacobian(lambda x: np.full_like(x, np.inf), np.ones(2))


class TestDirectionalDerivative:
    def test_igual_a_jacobiano_por_direccion(self) -> None:
        m = _make_linear(1)
        d = np.array([1.0, -2.0, 0.5, 0.0])
        np.testing.assert_allclose(directional_derivative(lambda x: m @ x, np.zeros(4), d), m @ d, atol=1e-8)

    def test_direccion_incompatible(self) -> None:
        with pytest.raises(DimensionError):
            directional_derivative(np.sin, np.ones(3), np.ones(2))
