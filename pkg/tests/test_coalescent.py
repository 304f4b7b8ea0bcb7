import math

import numpy as np
import pytest

from coalescent import build_cells_cggp, build_cells_rggp, log_likelihood
from conftest import (
    ARBOL_DOS_PUNTAS, ARBOL_HETEROCRONO, ARBOL_N3_ISOCRONO, ARBOL_UNA_CELDA, arbol_simulado, celdas_simuladas,
)
from exceptions import CellError, LikelihoodError
from genealogy import CoalescentData, extract_coalescent_data, parse_newick


def _datos(texto):
    return extract_coalescent_data(parse_newick(texto))


class TestBuildCellsCggp:
    def test_isocrono_n3(self, celdas_n3):
        assert celdas_n3.dim == 2
        np.testing.assert_allclose(celdas_n3.A, [1.5, 1.0])
        assert celdas_n3.y.tolist() == [1, 1]
        assert celdas_n3.boundaries.tolist() == [0.0, 0.5, 1.5]
        np.testing.assert_allclose(celdas_n3.midpoints, [0.25, 1.0])
        assert celdas_n3.log_const == pytest.approx(math.log(3.0))
        assert celdas_n3.model == "cggp"

    def test_una_celda(self, celdas_una):
        assert celdas_una.dim == 1
        assert celdas_una.A.tolist() == [2.0]
        assert celdas_una.y.tolist() == [1]
        assert celdas_una.log_const == 0.0

    def test_heterocrono(self):
        c = build_cells_cggp(_datos(ARBOL_HETEROCRONO))
        np.testing.assert_allclose(c.A, [4.0, 1.0])
        assert c.y.tolist() == [1, 1]
        assert c.log_const == pytest.approx(math.log(3.0))

    def test_valor_inicial(self, celdas_n3):
        np.testing.assert_allclose(celdas_n3.initial_gamma(), math.log(2.5 / 2.0))

    def test_celdas_inmutables(self, celdas_n3):
        with pytest.raises(ValueError):
            celdas_n3.A[0] = 0.0


class TestBuildCellsRggp:
    def test_dos_celdas(self):
        c = build_cells_rggp(_datos(ARBOL_UNA_CELDA), 2)
        np.testing.assert_allclose(c.boundaries, [0.0, 1.0, 2.0])
        np.testing.assert_allclose(c.A, [1.0, 1.0])
        assert c.y.tolist() == [0, 1]
        assert c.model == "rggp"

    def test_isocrono_n3_tres_celdas(self):
        c = build_cells_rggp(_datos(ARBOL_N3_ISOCRONO), 3)
        np.testing.assert_allclose(c.A, [1.5, 0.5, 0.5])
        assert c.y.tolist() == [1, 0, 1]

    def test_conserva_la_exposicion(self, celdas_n3):
        for B in (2, 3, 7, 50, 301):
            c = build_cells_rggp(_datos(ARBOL_N3_ISOCRONO), B)
            assert c.total_exposure == pytest.approx(celdas_n3.total_exposure, rel=1e-12)
            assert int(c.y.sum()) == 2

    def test_conserva_la_exposicion_en_arboles_simulados(self):
        celdas = celdas_simuladas(60, 4)
        d = extract_coalescent_data(arbol_simulado(60, 4))
        for B in (2, 10, 100):
            assert build_cells_rggp(d, B).total_exposure == pytest.approx(celdas.total_exposure, rel=1e-10)

    def test_rejilla_alineada_equivale_a_cggp(self, celdas_n3):
        rggp = build_cells_rggp(_datos(ARBOL_N3_ISOCRONO), 3)
        for g1, g2 in [(0.0, 0.0), (0.3, -1.2), (2.0, 0.7)]:
            a = log_likelihood(celdas_n3, [g1, g2]).value
            b = log_likelihood(rggp, [g1, g2, g2]).value
            assert abs(a - b) < 1e-12

    @pytest.mark.parametrize("B", [1, 0, 2.5])
    def test_rejilla_demasiado_pequeña(self, B):
        with pytest.raises(CellError):
            build_cells_rggp(_datos(ARBOL_N3_ISOCRONO), B)

    def test_celdas_sin_exposicion(self):
        # Todos los linajes coalescen en 0.5; las muestras siguientes llegan en 3
        d = CoalescentData(coal_ages=[0.5, 3.5, 4.0], sample_ages=[0.0, 0.0, 3.0, 3.0], n=4)
        c = build_cells_rggp(d, 8)
        assert c.informative_mask().tolist() == [True, False, False, False, False, False, True, True]
        assert c.total_exposure == pytest.approx(0.5 + 1.5 + 0.5)


class TestLogLikelihood:
    def test_valores_conocidos(self, celdas_n3):
        assert log_likelihood(celdas_n3, [0.0, 0.0]).value == pytest.approx(-1.401388, abs=1e-6)
        mitad = math.log(2.0)
        assert log_likelihood(celdas_n3, [mitad, mitad]).value == pytest.approx(-1.537697, abs=1e-6)

    def test_gradiente_y_curvatura(self, celdas_n3):
        ev = log_likelihood(celdas_n3, [0.0, 0.0])
        np.testing.assert_allclose(ev.gradient, [0.5, 0.0])
        np.testing.assert_allclose(ev.curvature, [1.5, 1.0])

    def test_diferencias_finitas(self, rng):
        celdas = celdas_simuladas(40, 8)
        gamma = celdas.initial_gamma() + rng.normal(0.0, 0.5, size=celdas.dim)
        ev = celdas.log_likelihood(gamma)
        h = 1e-6
        identidad = np.eye(celdas.dim)
        gradiente = np.array([
            (log_likelihood(celdas, gamma + h * e).value - log_likelihood(celdas, gamma - h * e).value) / (2 * h)
            for e in identidad
        ])
        curvatura = np.array([
            -(log_likelihood(celdas, gamma + h * e).gradient[i] - log_likelihood(celdas, gamma - h * e).gradient[i]) / (2 * h)
            for i, e in enumerate(identidad)
        ])
        np.testing.assert_allclose(gradiente, ev.gradient, rtol=1e-6, atol=1e-6)
        np.testing.assert_allclose(curvatura, ev.curvature, rtol=1e-6, atol=1e-6)
        assert np.all(ev.curvature >= 0)

    def test_lote(self, celdas_n3, rng):
        lote = rng.normal(size=(5, 2))
        ev = log_likelihood(celdas_n3, lote)
        assert ev.value.shape == (5,)
        assert ev.gradient.shape == (5, 2)
        for fila, valor in zip(lote, ev.value):
            assert valor == pytest.approx(float(log_likelihood(celdas_n3, fila).value), rel=1e-14)

    def test_longitud_incorrecta(self, celdas_n3):
        with pytest.raises(LikelihoodError, match="Longitud"):
            log_likelihood(celdas_n3, [0.0, 0.0, 0.0])

    def test_valores_no_finitos(self, celdas_n3):
        with pytest.raises(LikelihoodError, match="no finitos"):
            log_likelihood(celdas_n3, [0.0, np.nan])

    def test_dos_puntas(self):
        c = build_cells_cggp(_datos(ARBOL_DOS_PUNTAS))
        # -gamma - e^{-gamma}, máximo en gamma = 0
        assert float(log_likelihood(c, [0.0]).value) == pytest.approx(-1.0)


@pytest.mark.slow
def test_estimador_constante_converge_al_valor_verdadero():
    estimaciones = []
    for semilla in range(200):
        celdas = celdas_simuladas(100, semilla)
        estimaciones.append(celdas.total_exposure / (100 - 1))
    assert abs(np.mean(estimaciones) - 1.0) < 0.05
