"""
Exploración de la marginal posterior de tau.

Se trabaja en theta = log tau. La densidad en theta es

    log π̃(theta | t) = log π̃(tau | t) + theta

de modo que el modo, la curvatura y la rejilla se calculan en esa escala.
Los pesos de la rejilla salen de la regla del trapecio en theta.
"""

import math
import logging
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy import optimize

import config
from exceptions import ModeFindingError, TauExplorationError
from gmrf import StructureMatrix
from inla_mode import ModeResult, TauPrior, log_tau_posterior
from likelihoods import LatentLikelihood


@dataclass(frozen=True, eq=False)
class TauGrid:
    """
    Rejilla de integración sobre log tau.

    Attributes:
        log_tau_values: Puntos theta_k en orden creciente.
        log_densities: log π̃(theta_k | t) sin normalizar.
        weights: Pesos normalizados (suman 1).
        modes: Resultado de Newton en cada punto.
        mode_log_tau: Modo de la densidad en theta.
        sigma_theta: Desviación de la aproximación cuadrática en el modo.
        unimodal: False si la densidad no decrece monótonamente a ambos lados.
    """
    log_tau_values: np.ndarray
    log_densities: np.ndarray
    weights: np.ndarray
    modes: Tuple[ModeResult, ...]
    mode_log_tau: float
    sigma_theta: float
    unimodal: bool

    @property
    def taus(self) -> np.ndarray:
        return np.exp(self.log_tau_values)

    def __len__(self) -> int:
        return len(self.log_tau_values)


class _DensidadTheta:
    """Evalúa log π̃(theta | t) guardando los modos ya calculados."""

    def __init__(self, cells: LatentLikelihood, S: StructureMatrix, tau_prior: TauPrior):
        self.cells = cells
        self.S = S
        self.tau_prior = tau_prior
        self._cache: Dict[float, Tuple[float, ModeResult]] = {}

    def evaluar(self, theta: float) -> Tuple[float, ModeResult]:
        theta = float(theta)
        if theta not in self._cache:
            punto = log_tau_posterior(self.cells, self.S, self.tau_prior, math.exp(theta))
            self._cache[theta] = (punto.log_density + theta, punto.mode_result)
        return self._cache[theta]

    def __call__(self, theta: float) -> float:
        return self.evaluar(theta)[0]

    def tolerante(self, theta: float) -> float:
        """Como __call__, pero un fallo de Newton cuenta como densidad nula."""
        try:
            return self(theta)
        except ModeFindingError as e:
            logging.debug(f"Newton falló en log tau = {float(theta):g}: {e}")
            return -math.inf


def _busqueda_gruesa(densidad: _DensidadTheta) -> Tuple[float, float, float]:
    """
    Barrido en [-10, 10] con paso 2, ampliado hasta ±40 si el máximo queda en un extremo.
    Los puntos en los que Newton no converge cuentan como densidad nula.

    Returns:
        Tupla (a, b, c) con b el máximo del barrido y a < b < c.

    Raises:
        TauExplorationError: Si el máximo sigue en el borde al llegar a ±40.
    """
    paso = config.THETA_PASO_BUSQUEDA
    thetas = list(np.arange(config.THETA_INICIAL_MIN, config.THETA_INICIAL_MAX + paso / 2, paso))
    valores = [densidad.tolerante(th) for th in thetas]
    if not np.any(np.isfinite(valores)):
        raise TauExplorationError("No se pudo evaluar la marginal de log tau en ningún punto del barrido")

    while True:
        i = int(np.argmax(valores))
        if 0 < i < len(thetas) - 1:
            return thetas[i - 1], thetas[i], thetas[i + 1]
        if i == 0:
            nuevo = thetas[0] - paso
            if nuevo < -config.THETA_LIMITE_EXPANSION:
                raise TauExplorationError(
                    f"El modo de log tau está en el borde inferior de la búsqueda ({thetas[0]:g})"
                )
            thetas.insert(0, nuevo)
            valores.insert(0, densidad.tolerante(nuevo))
        else:
            nuevo = thetas[-1] + paso
            if nuevo > config.THETA_LIMITE_EXPANSION:
                raise TauExplorationError(
                    f"El modo de log tau está en el borde superior de la búsqueda ({thetas[-1]:g})"
                )
            thetas.append(nuevo)
            valores.append(densidad.tolerante(nuevo))
        logging.debug(f"Ampliando la búsqueda de log tau hasta {nuevo:g}")


def _refinar_modo(densidad: _DensidadTheta, bracket: Tuple[float, float, float]) -> float:
    try:
        return float(optimize.golden(
            lambda th: -densidad.tolerante(th),
            brack=bracket,
            tol=config.THETA_TOLERANCIA_MODO
        ))
    except ValueError:
        # Empates numéricos en el bracket: nos quedamos con el punto central
        return float(bracket[1])


def _sigma_theta(densidad: _DensidadTheta, theta_modo: float) -> float:
    h = config.THETA_PASO_HESSIANO
    segunda = (
        densidad(theta_modo + h) - 2.0 * densidad(theta_modo) + densidad(theta_modo - h)
    ) / h ** 2
    if not (segunda < 0 and math.isfinite(segunda)):
        logging.warning(
            f"Curvatura no negativa en el modo de log tau ({segunda:.3g}); se usa sigma = 1"
        )
        return 1.0
    return 1.0 / math.sqrt(-segunda)


def explore_tau(
    cells: LatentLikelihood,
    S: StructureMatrix,
    tau_prior: TauPrior
) -> TauGrid:
    """
    Localiza el modo de log tau y construye la rejilla de integración.

    La rejilla es mode_log_tau ± j·0.5·sigma_theta, extendida en cada dirección
    mientras la log-densidad no caiga más de 5 unidades respecto del modo
    (como máximo 35 puntos por lado).

    Args:
        cells: Verosimilitud latente.
        S: Matriz de estructura.
        tau_prior: Prior Gamma de tau.

    Returns:
        TauGrid: Puntos, log-densidades, pesos normalizados y modos.

    Raises:
        TauExplorationError: Modo en el borde de la búsqueda o pesos degenerados.
        ModeFindingError: Si Newton falla junto al modo (los fallos lejanos se tratan como densidad nula).
    """
    densidad = _DensidadTheta(cells, S, tau_prior)
    theta_modo = _refinar_modo(densidad, _busqueda_gruesa(densidad))
    sigma = _sigma_theta(densidad, theta_modo)
    valor_modo = densidad(theta_modo)
    logging.debug(f"Modo de log tau = {theta_modo:.6g}, sigma = {sigma:.4g}")

    delta = config.REJILLA_TAU_PASO * sigma
    lados = {}
    for signo in (-1, 1):
        puntos = []
        for j in range(1, config.REJILLA_TAU_MAX_PUNTOS_LADO + 1):
            theta = theta_modo + signo * j * delta
            valor = densidad.tolerante(theta)
            if not math.isfinite(valor) or valor_modo - valor > config.REJILLA_TAU_CAIDA_MAXIMA:
                break
            puntos.append((theta, valor))
        lados[signo] = puntos

    unimodal = True
    for signo, puntos in lados.items():
        valores = [valor_modo] + [v for _, v in puntos]
        if np.any(np.diff(valores) > 1e-9 * (1.0 + abs(valor_modo))):
            unimodal = False
    if not unimodal:
        logging.warning("La marginal de log tau no es unimodal en la rejilla; la integración puede ser imprecisa")

    ordenados = list(reversed(lados[-1])) + [(theta_modo, valor_modo)] + lados[1]
    log_tau_values = np.array([th for th, _ in ordenados])
    log_densidades = np.array([v for _, v in ordenados])

    # Trapecio en theta con paso uniforme: extremos con peso 1/2
    relativos = np.exp(log_densidades - log_densidades.max())
    if len(relativos) > 1:
        relativos[0] *= 0.5
        relativos[-1] *= 0.5
    total = relativos.sum()
    if not (total > 0 and math.isfinite(total)):
        raise TauExplorationError("Los pesos de la rejilla de tau son degenerados")
    pesos = relativos / total

    for arreglo in (log_tau_values, log_densidades, pesos):
        arreglo.setflags(write=False)
    logging.info(f"Rejilla de log tau: {len(log_tau_values)} puntos en [{log_tau_values[0]:.3f}, {log_tau_values[-1]:.3f}]")

    return TauGrid(
        log_tau_values=log_tau_values,
        log_densities=log_densidades,
        weights=pesos,
        modes=tuple(densidad.evaluar(th)[1] for th in log_tau_values),
        mode_log_tau=theta_modo,
        sigma_theta=sigma,
        unimodal=unimodal
    )
