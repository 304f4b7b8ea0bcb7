"""
Módulo para generar resúmenes y estadísticas del orquestador.

Este módulo se encarga de:
- Calcular las estadísticas de la comparación INLA vs MCMC
- Mostrar el resumen de ejecución
- Formatear información de resultados
"""

import logging
from typing import Dict

import numpy as np

from inla import PosteriorSummary
from mcmc import McmcOutput, tau_discrepancy
from utils import formatear_tiempo

# Diferencia de medianas (escala log) por debajo de la cual una celda se considera en acuerdo
UMBRAL_ACUERDO_MEDIANA = 0.3


def comparar_resultados(inla: PosteriorSummary, mcmc: McmcOutput) -> Dict:
    """
    Estadísticas de acuerdo entre ambos motores sobre las mismas celdas.

    Args:
        inla: Resumen INLA.
        mcmc: Salida MCMC.

    Returns:
        Dict: max_median_gap, fracción de celdas con |gap| < 0.3, fracción de
        intervalos del 95% que se solapan y distancia de variación total entre
        las marginales de tau.
    """
    diferencia = np.abs(inla.median - mcmc.median)
    solapan = np.maximum(inla.lower95, mcmc.lower95) <= np.minimum(inla.upper95, mcmc.upper95)
    return {
        'cells': int(inla.dim),
        'max_median_gap': float(diferencia.max()),
        'mean_median_gap': float(diferencia.mean()),
        'fraction_gap_below_threshold': float(np.mean(diferencia < UMBRAL_ACUERDO_MEDIANA)),
        'overlap_fraction': float(np.mean(solapan)),
        'tau_total_variation': tau_discrepancy(inla.tau_grid, mcmc.tau_samples),
        'mcmc_acceptance_rate': float(mcmc.acceptance_rate),
        'mcmc_ess_tau': float(mcmc.ess_tau),
    }


def mostrar_resumen_comparacion(resumen: Dict) -> None:
    """Muestra el bloque de la comparación INLA vs MCMC."""
    logging.info("")
    logging.info("=" * 70)
    logging.info("COMPARACIÓN INLA vs MCMC")
    logging.info("=" * 70)
    logging.info(f"  ✓ Celdas comparadas: {resumen['cells']}")
    logging.info(f"  ✓ Máxima diferencia de medianas: {resumen['max_median_gap']:.4f}")
    logging.info(
        f"  ✓ Celdas con diferencia < {UMBRAL_ACUERDO_MEDIANA}: {100 * resumen['fraction_gap_below_threshold']:.1f}%"
    )
    logging.info(f"  ✓ Intervalos del 95% que se solapan: {100 * resumen['overlap_fraction']:.1f}%")
    logging.info(f"  ✓ Variación total entre marginales de tau: {resumen['tau_total_variation']:.4f}")
    logging.info("=" * 70)


def mostrar_resumen_final(estadisticas: Dict, comando: str) -> None:
    """
    Muestra el resumen final de la ejecución.

    Args:
        estadisticas: Diccionario con archivos escritos y tiempos por etapa.
        comando: Comando ejecutado.
    """
    logging.info("")
    logging.info("=" * 70)
    logging.info(f"RESUMEN FINAL DE EJECUCIÓN ({comando})")
    logging.info("=" * 70)

    for etapa, segundos in estadisticas.get('tiempos', {}).items():
        logging.info(f"  ✓ {etapa}: {formatear_tiempo(segundos)}")

    archivos = estadisticas.get('archivos_escritos', [])
    if archivos:
        logging.info(f"  ✓ Archivos escritos: {len(archivos)}")
        for ruta in archivos:
            logging.info(f"    - {ruta}")
    else:
        logging.info("  ✓ Archivos escritos: 0")

    logging.info("=" * 70)
    logging.info("")
