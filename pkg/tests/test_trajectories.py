import math

import numpy as np
import pytest
from scipy import integrate

from exceptions import TrajectoryError
from trajectories import TrajectorySpec, scenario


def _cuadratura(spec, a, b):
    valor, _ = integrate.quad(lambda u: 1.0 / float(spec.population_size(u)), a, b,
                              epsabs=1e-12, epsrel=1e-12, limit=200)
    return valor


class TestPopulationSize:
    def test_constante(self):
        spec = TrajectorySpec.constant(3.0)
        np.testing.assert_allclose(spec.population_size([0.0, 1.0, 10.0]), 3.0)

    def test_exponencial(self):
        spec = scenario("exponential")
        assert spec.population_size(0.0) == pytest.approx(25.0)
        assert spec.population_size(1.0) == pytest.approx(25.0 * math.exp(-5.0))
        assert spec.log_population_size(1.0) == pytest.approx(math.log(25.0) - 5.0)

    def test_boom_bust_es_continua_en_el_quiebre(self):
        spec = scenario("boombust")
        izquierda = spec.population_size(0.5 - 1e-12)
        derecha = spec.population_size(0.5)
        assert izquierda == pytest.approx(math.exp(2.0), rel=1e-9)
        assert derecha == pytest.approx(math.exp(2.0), rel=1e-12)
        assert spec.population_size(0.0) == pytest.approx(1.0)
        assert spec.population_size(1.0) == pytest.approx(math.exp(1.0))

    def test_constante_por_tramos(self):
        spec = TrajectorySpec.piecewise_constant([1.0, 2.0], [1.0, 4.0, 0.5])
        np.testing.assert_allclose(spec.population_size([0.5, 1.0, 1.5, 2.5]), [1.0, 4.0, 4.0, 0.5])

    def test_funcion_arbitraria(self):
        spec = TrajectorySpec.from_function(lambda t: 1.0 + t)
        assert spec.population_size(2.0) == pytest.approx(3.0)
        assert spec.log_population_size(2.0) == pytest.approx(math.log(3.0))


class TestIntegratedIntensity:
    @pytest.mark.parametrize("nombre", ["constant", "exponential", "boombust"])
    @pytest.mark.parametrize("a,b", [(0.0, 0.3), (0.2, 0.9), (0.5, 1.7), (0.0, 2.0)])
    def test_forma_cerrada_coincide_con_cuadratura(self, nombre, a, b):
        spec = scenario(nombre)
        assert spec.integrated_intensity(a, b) == pytest.approx(_cuadratura(spec, a, b), rel=1e-9)

    def test_exponencial_valor_exacto(self):
        spec = scenario("exponential")
        assert spec.integrated_intensity(0.0, 1.0) == pytest.approx(math.expm1(5.0) / 125.0)

    def test_intervalo_vacio(self):
        assert scenario("constant").integrated_intensity(2.0, 1.0) == 0.0

    def test_funcion_por_cuadratura(self):
        spec = TrajectorySpec.from_function(lambda t: 1.0 + t)
        assert spec.integrated_intensity(0.0, 1.0) == pytest.approx(math.log(2.0), rel=1e-9)

    def test_crecimiento_hacia_el_pasado_tiene_intensidad_acotada(self):
        spec = TrajectorySpec.exponential(2.0, -1.0)
        assert spec.integrated_intensity(0.0, math.inf) == pytest.approx(0.5)


class TestInverseIntensity:
    @pytest.mark.parametrize("nombre", ["constant", "exponential", "boombust"])
    @pytest.mark.parametrize("a", [0.0, 0.3, 0.8])
    @pytest.mark.parametrize("objetivo", [0.01, 0.5, 3.0])
    def test_inversa(self, nombre, a, objetivo):
        spec = scenario(nombre)
        t = spec.inverse_intensity(a, objetivo)
        assert t >= a
        assert spec.integrated_intensity(a, t) == pytest.approx(objetivo, rel=1e-9)

    def test_inversa_numerica(self):
        spec = TrajectorySpec.from_function(lambda t: 1.0 + t)
        t = spec.inverse_intensity(0.0, math.log(3.0))
        assert t == pytest.approx(2.0, abs=1e-7)

    def test_objetivo_inalcanzable(self):
        spec = TrajectorySpec.exponential(2.0, -1.0)
        assert math.isinf(spec.inverse_intensity(0.0, 1.0))

    def test_objetivo_nulo(self):
        assert scenario("constant").inverse_intensity(1.5, 0.0) == 1.5


class TestErrores:
    def test_tamaño_no_positivo(self):
        with pytest.raises(TrajectoryError):
            TrajectorySpec.constant(0.0)
        with pytest.raises(TrajectoryError):
            TrajectorySpec.exponential(-1.0, 2.0)

    def test_tramos_con_valores_de_mas(self):
        with pytest.raises(TrajectoryError, match="Se esperaban 2 valores"):
            TrajectorySpec.piecewise_constant([1.0], [1.0, 2.0, 3.0])

    def test_tramos_no_crecientes(self):
        with pytest.raises(TrajectoryError, match="crecientes"):
            TrajectorySpec.piecewise_constant([2.0, 1.0], [1.0, 2.0, 3.0])

    def test_tramos_con_valor_negativo(self):
        with pytest.raises(TrajectoryError, match="positivos"):
            TrajectorySpec.piecewise_constant([1.0], [1.0, -2.0])

    def test_funcion_no_positiva(self):
        spec = TrajectorySpec.from_function(lambda t: 1.0 - t)
        with pytest.raises(TrajectoryError):
            spec.population_size(2.0)

    def test_escenario_desconocido(self):
        with pytest.raises(TrajectoryError, match="desconocido"):
            scenario("logistic")
