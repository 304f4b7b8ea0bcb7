"""
Módulo de configuración inicial del orquestador.

Este módulo se encarga de:
- Mostrar la configuración efectiva de la ejecución
- Advertir sobre ejecuciones largas de MCMC
"""

import logging

import config


def mostrar_configuracion(run_config) -> None:
    """Muestra los valores de configuración relevantes para el comando."""
    logging.info("=" * 70)
    logging.info(f"CONFIGURACIÓN: comando {run_config.command}")
    logging.info("=" * 70)
    if run_config.command == "simulate":
        calendario = run_config.schedule()
        logging.info(f"  - Escenario: {run_config.scenario}")
        logging.info(f"  - Muestras: {sum(c for _, c in calendario)} en {len(calendario)} edad(es)")
        logging.info(f"  - Semilla: {run_config.seed}")
    else:
        logging.info(f"  - Entrada: {run_config.input}")
        logging.info(f"  - Modelo: {run_config.model}"
                     + (f" (B = {run_config.grid_size})" if run_config.model == "rggp" else ""))
        logging.info(f"  - Prior de tau: Gamma({run_config.tau_alpha:g}, {run_config.tau_beta:g})")
        if run_config.command in ("infer", "compare"):
            logging.info(f"  - Estrategia: {run_config.strategy}")
        if run_config.command in ("mcmc", "compare"):
            logging.info(
                f"  - MCMC: {run_config.iterations} iteraciones, burn-in {run_config.burn_in}, "
                f"thin {run_config.thin}, semilla {run_config.seed}"
            )
    logging.info("=" * 70)


def mostrar_advertencia_mcmc(run_config) -> None:
    """Advierte si la cadena configurada tiene la longitud completa por defecto o más."""
    if run_config.command in ("mcmc", "compare") and run_config.iterations >= config.MCMC_ITERACIONES:
        logging.warning("=" * 60)
        logging.warning(f"CADENA LARGA: {run_config.iterations} iteraciones")
        logging.warning("=" * 60)
        logging.warning("La ejecución puede tardar varios minutos; usa --iterations para acortarla")
        logging.warning("=" * 60)
