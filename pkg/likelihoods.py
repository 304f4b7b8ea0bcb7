"""
Interfaz común de verosimilitudes latentes y verosimilitud gaussiana de referencia.

El motor INLA y el muestreador MCMC trabajan con cualquier objeto que exponga:
- dim: número de celdas B
- midpoints: puntos representativos de cada celda
- log_likelihood(gamma): LikelihoodEval (admite lotes en la última dimensión)
- initial_gamma(): punto de partida de Newton
- informative_mask(): celdas cuya verosimilitud depende de gamma_j

La verosimilitud gaussiana separable sirve de oráculo: con ella la
aproximación de Laplace es exacta.
"""

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from exceptions import LikelihoodError


@dataclass(frozen=True, eq=False)
class LikelihoodEval:
    """Valor, gradiente y curvatura (menos la segunda derivada) de log L(gamma)."""
    value: np.ndarray
    gradient: np.ndarray
    curvature: np.ndarray


class LatentLikelihood(Protocol):
    """Verosimilitud separable en las celdas, consumida por INLA y MCMC."""

    @property
    def dim(self) -> int: ...

    @property
    def midpoints(self) -> np.ndarray: ...

    def log_likelihood(self, gamma: np.ndarray) -> LikelihoodEval: ...

    def initial_gamma(self) -> np.ndarray: ...

    def informative_mask(self) -> np.ndarray: ...


def validar_gamma(gamma, dim: int) -> np.ndarray:
    """
    Comprueba longitud y finitud de un vector (o lote de vectores) gamma.

    Raises:
        LikelihoodError: Si la última dimensión no coincide o hay valores no finitos.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim == 0 or gamma.shape[-1] != dim:
        raise LikelihoodError(
            f"Longitud de gamma incorrecta: {gamma.shape[-1] if gamma.ndim else 0} (se esperaba {dim})"
        )
    if not np.all(np.isfinite(gamma)):
        raise LikelihoodError("gamma contiene valores no finitos")
    return gamma


class GaussianPseudoLikelihood:
    """
    Verosimilitud gaussiana separable: z_j ~ N(gamma_j, 1 / p_j).

    Sustituye al núcleo coalescente en los oráculos de exactitud: la
    condicional completa es gaussiana, de modo que Newton converge en un paso,
    la aproximación de Laplace es exacta y la propuesta de independencia
    coincide con la condicional completa.
    """

    def __init__(self, observations, precisions, midpoints=None):
        self.observations = np.asarray(observations, dtype=float)
        self.precisions = np.broadcast_to(
            np.asarray(precisions, dtype=float), self.observations.shape
        ).copy()
        if self.observations.ndim != 1 or len(self.observations) == 0:
            raise LikelihoodError("Las observaciones deben ser un vector no vacío")
        if np.any(self.precisions <= 0):
            raise LikelihoodError("Las precisiones deben ser positivas")
        if midpoints is None:
            midpoints = np.arange(len(self.observations), dtype=float)
        self._midpoints = np.asarray(midpoints, dtype=float)

    @property
    def dim(self) -> int:
        return len(self.observations)

    @property
    def midpoints(self) -> np.ndarray:
        return self._midpoints

    def log_likelihood(self, gamma) -> LikelihoodEval:
        gamma = validar_gamma(gamma, self.dim)
        residuo = self.observations - gamma
        constante = 0.5 * np.sum(np.log(self.precisions / (2.0 * np.pi)))
        valor = constante - 0.5 * np.sum(self.precisions * residuo ** 2, axis=-1)
        return LikelihoodEval(
            value=valor,
            gradient=self.precisions * residuo,
            curvature=np.broadcast_to(self.precisions, gamma.shape).copy()
        )

    def initial_gamma(self) -> np.ndarray:
        return np.full(self.dim, np.average(self.observations, weights=self.precisions))

    def informative_mask(self) -> np.ndarray:
        return np.ones(self.dim, dtype=bool)
