"""
Motor INLA de extremo a extremo.

Compone la matriz de estructura rw1, la exploración de tau y la mezcla de
marginales latentes. Reexporta los tipos públicos de los submódulos.
"""

import time
import logging
from dataclasses import dataclass, field

import config
from exceptions import ConfigError
from gmrf import structure_for
from inla_grid import TauGrid, explore_tau
from inla_marginals import MarginalMixture, PosteriorSummary, latent_marginals
from inla_mode import ModeResult, TauPosteriorPoint, TauPrior, find_mode, log_tau_posterior
from likelihoods import LatentLikelihood

__all__ = [
    "InferenceOptions",
    "MarginalMixture",
    "ModeResult",
    "PosteriorSummary",
    "TauGrid",
    "TauPosteriorPoint",
    "TauPrior",
    "explore_tau",
    "find_mode",
    "infer",
    "latent_marginals",
    "log_tau_posterior",
]


@dataclass(frozen=True)
class InferenceOptions:
    """Opciones del motor INLA."""
    strategy: str = config.ESTRATEGIA_POR_DEFECTO
    tau_prior: TauPrior = field(default_factory=TauPrior)

    def __post_init__(self):
        if self.strategy not in config.ESTRATEGIAS:
            raise ConfigError(
                f"Estrategia desconocida: '{self.strategy}' (opciones: {', '.join(config.ESTRATEGIAS)})"
            )


def infer(cells: LatentLikelihood, model_opts: InferenceOptions = None) -> PosteriorSummary:
    """
    Inferencia INLA completa: rw1 → exploración de tau → marginales latentes.

    Args:
        cells: Verosimilitud latente (celdas CGGP/RGGP o gaussiana de referencia).
        model_opts: Estrategia y prior de tau.

    Returns:
        PosteriorSummary: Resumen posterior por celda.
    """
    opciones = model_opts or InferenceOptions()
    inicio = time.perf_counter()

    S = structure_for(cells.midpoints)
    grid = explore_tau(cells, S, opciones.tau_prior)
    resumen = latent_marginals(cells, S, grid, opciones.strategy)

    logging.info(
        f"INLA completado: {cells.dim} celdas, {len(grid)} puntos de tau, "
        f"estrategia {opciones.strategy}, {time.perf_counter() - inicio:.3f} s"
    )
    if not grid.unimodal:
        logging.warning("Resultado obtenido con una marginal de tau no unimodal")
    return resumen
