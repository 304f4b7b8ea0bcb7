"""
Orquestador principal del sistema de estimación filodinámica.

Este módulo coordina todos los componentes del sistema:
- Simulador de genealogías
- Lectura de Newick y construcción de celdas (CGGP / RGGP)
- Motor INLA
- Muestreador MCMC
- Gestor de archivos

Cada comando se ejecuta en pasos numerados; si un paso falla, el error
indica la etapa en la que ocurrió.
"""

import sys
import json
import time
import logging
import traceback
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Tuple

import numpy as np

from coalescent import CellStats, build_cells_cggp, build_cells_rggp
from exceptions import ConfigError, GenealogyError, NewickError, PhylodynamicsError
from file_manager import FileManager, ruta_auxiliar
from genealogy import extract_coalescent_data
from inla import PosteriorSummary, infer
from mcmc import McmcOutput, run_mcmc
from orchestrator_setup import mostrar_advertencia_mcmc, mostrar_configuracion
from orchestrator_summary import comparar_resultados, mostrar_resumen_comparacion, mostrar_resumen_final
from simulator import simulate

# Errores atribuibles a la entrada del usuario (código de salida 2)
ERRORES_DE_ENTRADA = (ConfigError, NewickError, GenealogyError)


class Orchestrator:
    """
    Clase orquestadora que coordina todos los componentes del sistema.

    Esta clase maneja el flujo completo de cada comando:
    1. simulate: escenario → simulación → Newick
    2. infer: Newick → celdas → INLA → CSV/JSON
    3. mcmc: Newick → celdas → MCMC → CSV/JSON
    4. compare: Newick → celdas → INLA y MCMC → comparación
    """

    def __init__(self, run_config):
        """
        Inicializa el orquestador.

        Args:
            run_config: Configuración validada (RunConfig).
        """
        self.config = run_config
        self.estadisticas = {
            'archivos_escritos': [],
            'tiempos': {}
        }
        self.file_manager = FileManager(self.estadisticas)
        self.etapa = "inicio"

    def ejecutar(self) -> int:
        """
        Ejecuta el comando configurado.

        Returns:
            int: 0 si terminó bien, 2 ante errores de entrada, 1 ante fallos de ejecución.
        """
        comandos = {
            'simulate': self.cmd_simulate,
            'infer': self.cmd_infer,
            'mcmc': self.cmd_mcmc,
            'compare': self.cmd_compare,
        }
        try:
            mostrar_configuracion(self.config)
            mostrar_advertencia_mcmc(self.config)
            comandos[self.config.command]()
            mostrar_resumen_final(self.estadisticas, self.config.command)
            logging.info("PROCESO COMPLETADO EXITOSAMENTE")
            return 0

        except ERRORES_DE_ENTRADA as e:
            self._mostrar_error("ERROR EN LOS DATOS DE ENTRADA", e)
            return 2

        except PhylodynamicsError as e:
            self._mostrar_error(f"FALLO EN LA ETAPA: {self.etapa}", e)
            return 1

        except KeyboardInterrupt:
            logging.warning("=" * 70)
            logging.warning("INTERRUPCIÓN DEL USUARIO")
            logging.warning("=" * 70)
            return 1

        except Exception as e:
            self._mostrar_error(f"ERROR CRÍTICO INESPERADO (etapa: {self.etapa})", e)
            logging.error(f"Traceback: {traceback.format_exc()}")
            return 1

    def _mostrar_error(self, titulo: str, error: Exception) -> None:
        logging.error("")
        logging.error("=" * 70)
        logging.error(titulo)
        logging.error("=" * 70)
        logging.error(f"Error: {error}")

    def _paso(self, numero: int, titulo: str) -> None:
        self.etapa = titulo.lower()
        logging.info("")
        logging.info("=" * 70)
        logging.info(f"PASO {numero}: {titulo}")
        logging.info("=" * 70)

    # ------------------------------------------------------------------
    # simulate
    # ------------------------------------------------------------------

    def cmd_simulate(self) -> None:
        """Simula una genealogía y la escribe en Newick."""
        self._paso(1, "PREPARANDO ESCENARIO")
        trayectoria = self.config.trajectory()
        calendario = self.config.schedule()

        self._paso(2, "SIMULANDO GENEALOGÍA")
        inicio = time.perf_counter()
        genealogia = simulate(trayectoria, calendario, self.config.seed)
        self.estadisticas['tiempos']['Simulación'] = time.perf_counter() - inicio

        self._paso(3, "ESCRIBIENDO NEWICK")
        self.file_manager.escribir_genealogia(genealogia, self.config.out)

        linea = (
            f"n={genealogia.n_tips} height={genealogia.height:.17g} scenario={self.config.scenario}"
        )
        # Sin --out el Newick ocupa stdout; el resumen va entonces a stderr
        destino = sys.stdout if self.config.out is not None else sys.stderr
        print(linea, file=destino)

    # ------------------------------------------------------------------
    # infer / mcmc / compare
    # ------------------------------------------------------------------

    def _preparar_celdas(self) -> CellStats:
        self._paso(1, "LEYENDO GENEALOGÍA")
        genealogia = self.file_manager.leer_genealogia(self.config.input)

        self._paso(2, "CONSTRUYENDO CELDAS")
        datos = extract_coalescent_data(genealogia)
        if self.config.model == "cggp":
            celdas = build_cells_cggp(datos)
        else:
            celdas = build_cells_rggp(datos, self.config.grid_size)
        logging.info(
            f"✓ {celdas.dim} celdas {celdas.model.upper()}, {int(celdas.y.sum())} coalescencias, "
            f"exposición total {celdas.total_exposure:.6g}"
        )
        return celdas

    def _ejecutar_inla(self, celdas: CellStats) -> Tuple[PosteriorSummary, float]:
        inicio = time.perf_counter()
        resumen = infer(celdas, self.config.inference_options())
        return resumen, time.perf_counter() - inicio

    def _ejecutar_mcmc(self, celdas: CellStats) -> Tuple[McmcOutput, float]:
        inicio = time.perf_counter()
        salida = run_mcmc(celdas, self.config.mcmc_config())
        return salida, time.perf_counter() - inicio

    def _columnas(self, resultado) -> Dict[str, np.ndarray]:
        """Columnas del resumen; con --natural-scale los cuantiles pasan a N_e."""
        if self.config.natural_scale:
            return {
                'time': resultado.times,
                'median': np.exp(resultado.median),
                'lower95': np.exp(resultado.lower95),
                'upper95': np.exp(resultado.upper95),
                'mean': resultado.mean_natural,
            }
        return {
            'time': resultado.times,
            'median': resultado.median,
            'lower95': resultado.lower95,
            'upper95': resultado.upper95,
            'mean': resultado.mean,
        }

    def _metadatos(self, celdas: CellStats, segundos: float) -> Dict:
        return {
            'model': self.config.model,
            'cells': int(celdas.dim),
            'scale': 'natural' if self.config.natural_scale else 'log',
            'tau_prior': {'alpha': self.config.tau_alpha, 'beta': self.config.tau_beta},
            'wall_time_seconds': segundos,
        }

    def cmd_infer(self) -> None:
        """Inferencia INLA y escritura del resumen y de la rejilla de tau."""
        celdas = self._preparar_celdas()

        self._paso(3, "INFERENCIA INLA")
        resumen, segundos = self._ejecutar_inla(celdas)
        self.estadisticas['tiempos']['INLA'] = segundos
        rejilla = resumen.tau_grid

        self._paso(4, "ESCRIBIENDO RESULTADOS")
        columnas = self._columnas(resumen)
        if self.config.format == "json":
            documento = self._metadatos(celdas, segundos)
            documento['strategy'] = resumen.strategy
            documento['summary'] = {k: v.tolist() for k, v in columnas.items()}
            documento['summary']['uninformative'] = resumen.uninformative.tolist()
            documento['tau_grid'] = {
                'log_tau': rejilla.log_tau_values.tolist(),
                'log_density': rejilla.log_densities.tolist(),
                'weight': rejilla.weights.tolist(),
                'unimodal': rejilla.unimodal,
            }
            self.file_manager.escribir_json(self.config.out, documento)
        else:
            self.file_manager.escribir_resumen(self.config.out, columnas)
            self.file_manager.escribir_rejilla_tau(
                ruta_auxiliar(self.config.out, "tau.csv"),
                rejilla.log_tau_values, rejilla.log_densities, rejilla.weights
            )

    def cmd_mcmc(self) -> None:
        """Inferencia MCMC y escritura del resumen y de las muestras de tau."""
        celdas = self._preparar_celdas()

        self._paso(3, "MUESTREO MCMC")
        salida, segundos = self._ejecutar_mcmc(celdas)
        self.estadisticas['tiempos']['MCMC'] = segundos

        self._paso(4, "ESCRIBIENDO RESULTADOS")
        columnas = self._columnas(salida)
        if self.config.format == "json":
            documento = self._metadatos(celdas, segundos)
            documento['acceptance_rate'] = salida.acceptance_rate
            documento['ess_tau'] = salida.ess_tau
            documento['failures'] = salida.failures
            documento['summary'] = {k: v.tolist() for k, v in columnas.items()}
            documento['tau_samples'] = salida.tau_samples.tolist()
            self.file_manager.escribir_json(self.config.out, documento)
        else:
            self.file_manager.escribir_resumen(self.config.out, columnas)
            self.file_manager.escribir_muestras_tau(
                ruta_auxiliar(self.config.out, "tau.csv"), salida.tau_samples
            )

    def cmd_compare(self) -> None:
        """Ejecuta INLA y MCMC sobre las mismas celdas y escribe la comparación."""
        celdas = self._preparar_celdas()

        self._paso(3, "EJECUTANDO INLA Y MCMC")
        with ThreadPoolExecutor(max_workers=2) as ejecutor:
            futuro_inla = ejecutor.submit(self._ejecutar_inla, celdas)
            futuro_mcmc = ejecutor.submit(self._ejecutar_mcmc, celdas)
            resumen, segundos_inla = futuro_inla.result()
            salida, segundos_mcmc = futuro_mcmc.result()
        self.estadisticas['tiempos']['INLA'] = segundos_inla
        self.estadisticas['tiempos']['MCMC'] = segundos_mcmc

        self._paso(4, "COMPARANDO RESULTADOS")
        comparacion = comparar_resultados(resumen, salida)
        mostrar_resumen_comparacion(comparacion)

        self._paso(5, "ESCRIBIENDO RESULTADOS")
        transformar = np.exp if self.config.natural_scale else (lambda x: x)
        self.file_manager.escribir_comparacion(self.config.out, {
            'time': resumen.times,
            'inla_median': transformar(resumen.median),
            'inla_lo': transformar(resumen.lower95),
            'inla_hi': transformar(resumen.upper95),
            'mcmc_median': transformar(salida.median),
            'mcmc_lo': transformar(salida.lower95),
            'mcmc_hi': transformar(salida.upper95),
        })
        bloque = dict(comparacion)
        bloque['inla_wall_time_seconds'] = segundos_inla
        bloque['mcmc_wall_time_seconds'] = segundos_mcmc
        self.file_manager.escribir_json(ruta_auxiliar(self.config.out, "summary.json"), bloque)
        print(json.dumps(bloque, indent=2))
