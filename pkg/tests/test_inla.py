import math
import time

import numpy as np
import pytest
from scipy import integrate, optimize, special, stats

import config
import inla_grid
from coalescent import CellStats, build_cells_rggp
from conftest import arbol_simulado, celdas_simuladas
from exceptions import (
    ConfigError, MarginalError, ModeFindingError, NonConvergenceError, SingularPrecisionError, TauExplorationError,
)
from genealogy import CoalescentData, extract_coalescent_data
from gmrf import StructureMatrix, build_rw1, gmrf_logdensity, structure_for
from inla import (
    InferenceOptions, MarginalMixture, TauPrior, explore_tau, find_mode, infer, latent_marginals, log_tau_posterior,
)
from likelihoods import GaussianPseudoLikelihood
from trajectories import scenario

Z_975 = 1.959963984540054


def _gaussiana(B, semilla, precision=(20.0, 50.0)):
    generador = np.random.default_rng(semilla)
    medios = np.cumsum(generador.uniform(0.2, 1.0, size=B))
    observaciones = np.cumsum(generador.normal(0.0, 0.3, size=B))
    precisiones = generador.uniform(*precision, size=B)
    return GaussianPseudoLikelihood(observaciones, precisiones, medios)


def _precision_densa(gauss, S, tau):
    return tau * S.dense() + np.diag(gauss.precisions)


def _log_marginal_exacta(gauss, S, tau, prior):
    """log p(z | tau) + log p(tau), salvo constantes, integrando gamma de forma exacta."""
    H = _precision_densa(gauss, S, tau)
    b = gauss.precisions * gauss.observations
    return (
        0.5 * S.rank * math.log(tau)
        - 0.5 * np.linalg.slogdet(H)[1]
        + 0.5 * b @ np.linalg.solve(H, b)
        + prior.logpdf(tau)
    )


def _mezcla_densa(gauss, S, grid):
    """Medias y desviaciones exactas de gamma | tau_g, z en cada punto de la rejilla."""
    medias, desviaciones = [], []
    for tau in grid.taus:
        H = _precision_densa(gauss, S, tau)
        medias.append(np.linalg.solve(H, gauss.precisions * gauss.observations))
        desviaciones.append(np.sqrt(np.diag(np.linalg.inv(H))))
    return np.array(medias), np.array(desviaciones)


def _escalar(d, c):
    return CoalescentData(c * d.coal_ages, c * d.sample_ages, d.n)


def _log_marginal_por_cuadratura(celdas, S, tau, eje):
    """log ∫ L(γ) Pr(γ | tau) dγ sobre una rejilla cuadrada para dos celdas."""
    g1, g2 = np.meshgrid(eje, eje, indexing='ij')
    gammas = np.stack([g1, g2], axis=-1)
    log_integrando = celdas.log_likelihood(gammas).value + gmrf_logdensity(S, tau, gammas)
    paso = eje[1] - eje[0]
    return float(special.logsumexp(log_integrando) + 2.0 * math.log(paso))


def _cuantil_denso(pesos, medias, desviaciones, p):
    def f(x):
        return pesos @ special.ndtr((x - medias) / desviaciones) - p
    return optimize.brentq(f, medias.min() - 20 * desviaciones.max(), medias.max() + 20 * desviaciones.max(),
                           xtol=1e-13)


class TestTauPrior:
    def test_parametros_invalidos(self):
        with pytest.raises(ConfigError):
            TauPrior(0.0, 1.0)
        with pytest.raises(ConfigError):
            TauPrior(1.0, -1.0)

    def test_densidad_forma_tasa(self):
        prior = TauPrior(2.0, 3.0)
        # Gamma(2, 3): 9 tau exp(-3 tau)
        assert prior.logpdf(0.5) == pytest.approx(math.log(9 * 0.5) - 1.5)


class TestFindMode:
    def test_una_celda(self, celdas_una):
        modo = find_mode(celdas_una, structure_for(celdas_una.midpoints), 1.0)
        assert modo.gamma_star[0] == pytest.approx(math.log(2.0), abs=1e-10)
        assert modo.curvature[0] == pytest.approx(1.0, abs=1e-9)
        assert modo.converged

    def test_gradiente_nulo_en_el_modo(self):
        celdas = celdas_simuladas(60, 5)
        S = build_rw1(celdas.midpoints)
        for tau in (0.01, 1.0, 100.0, math.exp(10.0)):
            modo = find_mode(celdas, S, tau)
            gradiente = celdas.log_likelihood(modo.gamma_star).gradient - tau * S.matvec(modo.gamma_star)
            escala = 1.0 + tau * np.max(S.diag) + np.max(modo.curvature)
            assert np.max(np.abs(gradiente)) < 1e-8 * escala

    @pytest.mark.parametrize("escenario", ["constant", "exponential", "boombust"])
    def test_tau_grande_en_los_escenarios(self, escenario):
        for semilla in range(5):
            celdas = celdas_simuladas(100, semilla, escenario)
            S = build_rw1(celdas.midpoints)
            for theta in (8.0, 10.0, 14.0):
                modo = find_mode(celdas, S, math.exp(theta))
                assert modo.converged
                assert np.all(np.isfinite(modo.gamma_star))

    def test_gaussiana_coincide_con_minimos_cuadrados(self, verosimilitud_gaussiana):
        gauss = verosimilitud_gaussiana
        S = build_rw1(gauss.midpoints)
        for tau in (0.1, 2.0, 50.0):
            modo = find_mode(gauss, S, tau)
            esperado = np.linalg.solve(_precision_densa(gauss, S, tau), gauss.precisions * gauss.observations)
            np.testing.assert_allclose(modo.gamma_star, esperado, atol=1e-10)
            assert modo.iterations <= 2

    def test_suavizado_monotono_en_tau(self):
        celdas = celdas_simuladas(50, 2)
        S = build_rw1(celdas.midpoints)
        formas = [float(S.quadratic_form(find_mode(celdas, S, tau).gamma_star)) for tau in (0.1, 1.0, 10.0, 100.0)]
        assert all(b <= a + 1e-12 for a, b in zip(formas, formas[1:]))

    def test_punto_de_partida_no_cambia_el_modo(self, celdas_n3):
        S = build_rw1(celdas_n3.midpoints)
        a = find_mode(celdas_n3, S, 2.0)
        b = find_mode(celdas_n3, S, 2.0, init=np.array([5.0, -5.0]))
        np.testing.assert_allclose(a.gamma_star, b.gamma_star, atol=1e-8)

    def test_no_convergencia(self, celdas_n3, monkeypatch):
        monkeypatch.setattr(config, "NEWTON_MAX_ITERACIONES", 0)
        with pytest.raises(NonConvergenceError) as info:
            find_mode(celdas_n3, build_rw1(celdas_n3.midpoints), 1.0)
        assert info.value.norma_gradiente > 0

    def test_sin_exposicion(self):
        ceros = np.zeros(3)
        celdas = CellStats(
            boundaries=np.array([0.0, 1.0, 2.0, 3.0]),
            midpoints=np.array([0.5, 1.5, 2.5]),
            y=np.array([0, 0, 1]),
            A=ceros,
            log_const=0.0,
            model="rggp"
        )
        with pytest.raises(SingularPrecisionError):
            find_mode(celdas, build_rw1(celdas.midpoints), 1.0)

    def test_argumentos_invalidos(self, celdas_n3):
        S = build_rw1(celdas_n3.midpoints)
        with pytest.raises(ModeFindingError):
            find_mode(celdas_n3, S, 0.0)
        with pytest.raises(ModeFindingError):
            find_mode(celdas_n3, build_rw1([0.0, 1.0, 2.0]), 1.0)


class TestLogTauPosterior:
    def test_gaussiana_coincide_con_la_marginal_exacta(self, verosimilitud_gaussiana):
        gauss = verosimilitud_gaussiana
        S = build_rw1(gauss.midpoints)
        prior = TauPrior()
        taus = np.logspace(-2, 3, 20)
        aproximada = np.array([log_tau_posterior(gauss, S, prior, t).log_density for t in taus])
        exacta = np.array([_log_marginal_exacta(gauss, S, t, prior) for t in taus])
        diferencia = (aproximada - aproximada.mean()) - (exacta - exacta.mean())
        assert np.max(np.abs(diferencia)) < 1e-8

    def test_una_celda_solo_depende_del_prior(self, celdas_una):
        S = StructureMatrix.degenerate()
        prior = TauPrior(2.0, 3.0)
        taus = np.array([0.05, 0.3, 1.0, 4.0, 20.0])
        valores = np.array([log_tau_posterior(celdas_una, S, prior, t).log_density for t in taus])
        previos = np.array([prior.logpdf(t) for t in taus])
        np.testing.assert_allclose(valores - valores.mean(), previos - previos.mean(), atol=1e-10)

    def test_escalar_las_edades_desplaza_log_tau(self):
        # Edades × c: gamma se desplaza en log c, S se divide por c y tau se multiplica por c
        c = 2.5
        d = extract_coalescent_data(arbol_simulado(50, 4, "exponential"))
        originales = build_cells_rggp(d, 20)
        escaladas = build_cells_rggp(_escalar(d, c), 20)
        S, S_c = build_rw1(originales.midpoints), build_rw1(escaladas.midpoints)
        prior = TauPrior(0.001, 1e-9)
        for tau in (0.5, 3.0, 20.0, 150.0):
            a = log_tau_posterior(originales, S, prior, tau).log_density
            b = log_tau_posterior(escaladas, S_c, prior, c * tau).log_density
            esperado = -originales.y.sum() * math.log(c) + prior.logpdf(c * tau) - prior.logpdf(tau)
            assert b - a == pytest.approx(esperado, abs=1e-7)

        modo = explore_tau(originales, S, prior).mode_log_tau
        modo_c = explore_tau(escaladas, S_c, prior).mode_log_tau
        assert modo_c - modo == pytest.approx(math.log(c), abs=1e-3)

    def test_escalado_contra_cuadratura_con_dos_celdas(self):
        c = 3.0
        d = extract_coalescent_data(arbol_simulado(30, 8, "exponential"))
        originales = build_cells_rggp(d, 2)
        escaladas = build_cells_rggp(_escalar(d, c), 2)
        S, S_c = build_rw1(originales.midpoints), build_rw1(escaladas.midpoints)
        prior = TauPrior()
        centro = float(originales.initial_gamma()[0])
        eje = np.linspace(centro - 7.0, centro + 7.0, 401)
        for tau in (0.2, 2.0, 30.0):
            exacta = _log_marginal_por_cuadratura(originales, S, tau, eje)
            exacta_c = _log_marginal_por_cuadratura(escaladas, S_c, c * tau, eje + math.log(c))
            laplace = log_tau_posterior(originales, S, prior, tau).log_density - prior.logpdf(tau)
            laplace_c = log_tau_posterior(escaladas, S_c, prior, c * tau).log_density - prior.logpdf(c * tau)
            desplazamiento = -originales.y.sum() * math.log(c)
            assert exacta_c - exacta == pytest.approx(desplazamiento, abs=1e-8)
            assert laplace_c - laplace == pytest.approx(exacta_c - exacta, abs=1e-7)


class TestExploreTau:
    def test_pesos_y_modo(self, celdas_n3):
        grid = explore_tau(celdas_n3, build_rw1(celdas_n3.midpoints), TauPrior(1.0, 1.0))
        assert grid.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(grid.weights > 0)
        assert np.all(np.diff(grid.log_tau_values) > 0)
        assert len(grid.modes) == len(grid)
        i = int(np.argmax(grid.log_densities))
        assert grid.log_tau_values[i] == grid.mode_log_tau
        assert len(grid) <= 2 * config.REJILLA_TAU_MAX_PUNTOS_LADO + 1

    def test_media_de_tau_gaussiana(self):
        gauss = _gaussiana(40, 11)
        S = build_rw1(gauss.midpoints)
        prior = TauPrior()
        grid = explore_tau(gauss, S, prior)
        assert grid.unimodal
        media_rejilla = float(grid.weights @ grid.taus)

        thetas = np.linspace(grid.mode_log_tau - 12 * grid.sigma_theta,
                             grid.mode_log_tau + 12 * grid.sigma_theta, 6001)
        log_f = np.array([_log_marginal_exacta(gauss, S, math.exp(th), prior) + th for th in thetas])
        f = np.exp(log_f - log_f.max())
        media_exacta = integrate.trapezoid(f * np.exp(thetas), thetas) / integrate.trapezoid(f, thetas)
        assert media_rejilla == pytest.approx(media_exacta, rel=0.005)

    def test_fallos_de_newton_lejos_del_modo(self, celdas_n3, monkeypatch):
        original = inla_grid.log_tau_posterior
        fallos = []

        def con_fallos(cells, S, tau_prior, tau):
            if tau > math.exp(6.0):
                fallos.append(tau)
                raise NonConvergenceError(50, 1.0)
            return original(cells, S, tau_prior, tau)

        monkeypatch.setattr(inla_grid, "log_tau_posterior", con_fallos)
        grid = explore_tau(celdas_n3, build_rw1(celdas_n3.midpoints), TauPrior(1.0, 1.0))
        assert fallos
        assert np.all(grid.log_tau_values < 6.0)
        assert np.all(np.isfinite(grid.log_densities))
        assert grid.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_sin_ningun_punto_evaluable(self, celdas_n3, monkeypatch):
        def siempre_falla(cells, S, tau_prior, tau):
            raise NonConvergenceError(50, 1.0)

        monkeypatch.setattr(inla_grid, "log_tau_posterior", siempre_falla)
        with pytest.raises(TauExplorationError, match="ningún punto"):
            explore_tau(celdas_n3, build_rw1(celdas_n3.midpoints), TauPrior(1.0, 1.0))

    @pytest.mark.parametrize("escenario", ["constant", "exponential", "boombust"])
    def test_prior_difuso_en_los_escenarios(self, escenario):
        for semilla in range(5):
            celdas = celdas_simuladas(100, semilla, escenario)
            grid = explore_tau(celdas, build_rw1(celdas.midpoints), TauPrior())
            assert np.all(np.isfinite(grid.log_densities))
            assert grid.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_modo_en_el_borde(self, monkeypatch):
        monkeypatch.setattr(config, "THETA_LIMITE_EXPANSION", 10.0)
        # Datos perfectamente constantes: la densidad crece hasta log(alpha/beta) ≈ 13.8
        gauss = GaussianPseudoLikelihood(np.zeros(6), np.full(6, 5.0), np.arange(6.0))
        with pytest.raises(TauExplorationError, match="borde superior"):
            explore_tau(gauss, build_rw1(gauss.midpoints), TauPrior(0.001, 1e-9))


class TestMarginalMixture:
    def test_normal_estandar(self):
        mezcla = MarginalMixture([1.0], [[0.0]], [[1.0]])
        assert mezcla.quantile(0.5)[0] == pytest.approx(0.0, abs=1e-9)
        assert mezcla.quantile(0.975)[0] == pytest.approx(Z_975, abs=1e-6)
        assert mezcla.mean()[0] == 0.0
        assert mezcla.mean_natural()[0] == pytest.approx(math.exp(0.5))

    def test_correccion_plana_es_gaussiana(self):
        K = config.LAPLACE_SUBINTERVALOS + 2
        mezcla = MarginalMixture([1.0], [[1.0]], [[2.0]], np.zeros((1, 1, K)))
        assert mezcla.quantile(0.975)[0] == pytest.approx(1.0 + 2.0 * Z_975, abs=1e-6)
        assert mezcla.mean()[0] == pytest.approx(1.0, abs=1e-12)
        assert mezcla.mean_natural()[0] == pytest.approx(math.exp(1.0 + 2.0), rel=1e-10)
        assert mezcla.cdf([1.0])[0] == pytest.approx(0.5, abs=1e-12)

    def test_mezcla_de_dos_componentes(self):
        mezcla = MarginalMixture([0.5, 0.5], [[-1.0], [1.0]], [[1.0], [1.0]])
        assert mezcla.quantile(0.5)[0] == pytest.approx(0.0, abs=1e-9)
        x = mezcla.quantile(0.975)[0]
        assert 0.5 * (stats.norm.cdf(x + 1) + stats.norm.cdf(x - 1)) == pytest.approx(0.975, abs=1e-9)


class TestLatentMarginals:
    def test_una_celda(self, celdas_una):
        resumen = infer(celdas_una)
        assert resumen.median[0] == pytest.approx(math.log(2.0), abs=1e-6)
        assert resumen.upper95[0] - resumen.median[0] == pytest.approx(Z_975, abs=1e-6)
        assert resumen.median[0] - resumen.lower95[0] == pytest.approx(Z_975, abs=1e-6)

    @pytest.mark.parametrize("estrategia", ["gaussian", "laplace"])
    def test_gaussiana_es_exacta(self, verosimilitud_gaussiana, estrategia):
        gauss = verosimilitud_gaussiana
        S = build_rw1(gauss.midpoints)
        grid = explore_tau(gauss, S, TauPrior())
        resumen = latent_marginals(gauss, S, grid, estrategia)
        medias, desviaciones = _mezcla_densa(gauss, S, grid)

        np.testing.assert_allclose(resumen.mean, grid.weights @ medias, atol=1e-8)
        for i in range(gauss.dim):
            for p, obtenido in ((0.5, resumen.median), (0.025, resumen.lower95), (0.975, resumen.upper95)):
                esperado = _cuantil_denso(grid.weights, medias[:, i], desviaciones[:, i], p)
                assert obtenido[i] == pytest.approx(esperado, abs=1e-6)

    def test_estrategias_coinciden_con_gaussiana(self, verosimilitud_gaussiana):
        gauss = verosimilitud_gaussiana
        S = build_rw1(gauss.midpoints)
        grid = explore_tau(gauss, S, TauPrior())
        a = latent_marginals(gauss, S, grid, "gaussian")
        b = latent_marginals(gauss, S, grid, "laplace")
        np.testing.assert_allclose(a.median, b.median, atol=1e-6)
        np.testing.assert_allclose(a.mean_natural, b.mean_natural, rtol=1e-6)

    def test_fuerza_bruta_con_dos_celdas(self, celdas_n3):
        # π(γ | t) ∝ L(γ) (β + w d²/2)^{-(α + 1/2)} tras integrar tau; w = 1 / 0.75
        alpha, beta, w = 1.0, 1.0, 4.0 / 3.0
        eje = np.linspace(-8.0, 9.0, 801)
        g1, g2 = np.meshgrid(eje, eje, indexing='ij')
        log_post = (
            -g1 - 1.5 * np.exp(-g1) - g2 - 1.0 * np.exp(-g2)
            - (alpha + 0.5) * np.log(beta + 0.5 * w * (g2 - g1) ** 2)
        )
        densidad = np.exp(log_post - log_post.max())
        marginales = (densidad.sum(axis=1), densidad.sum(axis=0))

        resumen = infer(celdas_n3, InferenceOptions("laplace", TauPrior(alpha, beta)))
        for i, marginal in enumerate(marginales):
            acumulada = np.cumsum(marginal) / marginal.sum()
            mediana = np.interp(0.5, acumulada, eje)
            assert resumen.median[i] == pytest.approx(mediana, abs=0.1)

    def test_estrategia_desconocida(self, celdas_n3):
        S = build_rw1(celdas_n3.midpoints)
        grid = explore_tau(celdas_n3, S, TauPrior(1.0, 1.0))
        with pytest.raises(MarginalError, match="desconocida"):
            latent_marginals(celdas_n3, S, grid, "simplified")


class TestInfer:
    def test_determinista_y_ordenado(self):
        celdas = celdas_simuladas(50, 9)
        a = infer(celdas)
        b = infer(celdas)
        np.testing.assert_array_equal(a.median, b.median)
        np.testing.assert_array_equal(a.upper95, b.upper95)
        np.testing.assert_array_equal(a.times, celdas.midpoints)
        assert np.all(a.lower95 < a.median)
        assert np.all(a.median < a.upper95)
        assert np.all(np.isfinite(a.mean)) and np.all(a.mean_natural > 0)
        assert a.strategy == "gaussian"
        assert not a.uninformative.any()

    @pytest.mark.parametrize("escenario", ["constant", "exponential", "boombust"])
    def test_gaussiana_y_laplace_coinciden(self, escenario):
        celdas = celdas_simuladas(100, 1, escenario)
        a = infer(celdas, InferenceOptions("gaussian"))
        b = infer(celdas, InferenceOptions("laplace"))
        informativas = celdas.y >= 1
        assert np.max(np.abs(a.median - b.median)[informativas]) < 0.05

    def test_arbol_con_colapso_de_la_linea_de_comandos(self):
        resumen = infer(celdas_simuladas(100, 42, "boombust"))
        assert np.all(np.isfinite(resumen.median))
        assert np.all(resumen.lower95 < resumen.upper95)

    def test_rejilla_regular(self):
        d = extract_coalescent_data(arbol_simulado(100, 2, "exponential"))
        resumen = infer(build_cells_rggp(d, 100))
        assert resumen.dim == 100
        assert np.all(resumen.lower95 <= resumen.median)

    def test_opciones_invalidas(self):
        with pytest.raises(ConfigError):
            InferenceOptions(strategy="simplified")


@pytest.mark.slow
class TestInferLento:
    def test_cobertura_con_tamaño_constante(self):
        verdadero = scenario("constant")
        coberturas = []
        for semilla in range(50):
            resumen = infer(celdas_simuladas(50, semilla))
            log_ne = verdadero.log_population_size(resumen.times)
            coberturas.append(np.mean((resumen.lower95 <= log_ne) & (log_ne <= resumen.upper95)))
        assert np.mean(coberturas) >= 0.85

    def test_marginal_de_tau_unimodal(self):
        unimodales = 0
        for semilla in range(100):
            celdas = celdas_simuladas(50, semilla)
            unimodales += explore_tau(celdas, build_rw1(celdas.midpoints), TauPrior()).unimodal
        assert unimodales >= 95

    @pytest.mark.parametrize("escenario", ["constant", "exponential", "boombust"])
    def test_muchas_semillas_sin_fallos(self, escenario):
        for semilla in range(20):
            resumen = infer(celdas_simuladas(100, semilla, escenario))
            assert np.all(np.isfinite(resumen.median))

    def test_pendiente_del_escenario_exponencial(self):
        d = extract_coalescent_data(arbol_simulado(100, 3, "exponential"))
        resumen = infer(build_cells_rggp(d, 100))
        bajo, alto = np.quantile(d.coal_ages, [0.1, 0.9])
        densas = (resumen.times >= bajo) & (resumen.times <= alto)
        tiempos = resumen.times[densas]
        pendiente = np.polyfit(tiempos, resumen.median[densas], 1)[0]
        verdadera = np.polyfit(tiempos, scenario("exponential").log_population_size(tiempos), 1)[0]
        assert abs(pendiente - verdadera) < 3.0

    def test_tiempos_de_ejecucion(self):
        celdas = celdas_simuladas(100, 1)
        inicio = time.perf_counter()
        infer(celdas)
        assert time.perf_counter() - inicio < 4.0

        d = extract_coalescent_data(arbol_simulado(100, 1, "boombust"))
        inicio = time.perf_counter()
        infer(build_cells_rggp(d, 1000))
        assert time.perf_counter() - inicio < 10.0
