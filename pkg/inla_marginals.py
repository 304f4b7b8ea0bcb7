"""
Marginales posteriores de cada gamma_i integrando sobre la rejilla de tau.

Estrategias:
- gaussian: en cada punto de la rejilla la marginal es N(γ*_i, [H⁻¹]_ii), con
  H = tau*S + diag(c). La marginal final es la mezcla ponderada.
- laplace: la gaussiana se corrige con una aproximación de Laplace evaluada
  en 25 puntos en μ ± 4σ. Para x fijo, el resto de gamma se coloca en la
  media condicional gaussiana γ(x) = γ* + H⁻¹e_i (x - γ*_i) / [H⁻¹]_ii y

      log π̃(x) = log L(γ(x)) - (tau/2) γ(x)ᵀSγ(x) - (1/2) log det H_{-i}(γ(x))

  La diferencia r(x) = log π̃(x) - log N(x) se interpola linealmente entre
  los 25 puntos y se mantiene constante fuera de ±4σ, de forma que la densidad es
  una gaussiana reescalada por tramos.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

import config
from exceptions import MarginalError
from gmrf import StructureMatrix
from inla_grid import TauGrid
from inla_mode import ModeResult
from likelihoods import LatentLikelihood
from tridiagonal import tri_inverse_diag, tri_log_det_excluding, tri_solve


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    """
    Resumen posterior de log N_e por celda.

    Attributes:
        times: Punto medio de cada celda.
        median, lower95, upper95: Cuantiles 0.5, 0.025 y 0.975 de gamma.
        mean: Media posterior de gamma.
        mean_natural: Media posterior de N_e = exp(gamma).
        tau_grid: Rejilla de tau utilizada.
        strategy: "gaussian" o "laplace".
        uninformative: Celdas sin exposición (marginal dominada por el prior).
    """
    times: np.ndarray
    median: np.ndarray
    lower95: np.ndarray
    upper95: np.ndarray
    mean: np.ndarray
    mean_natural: np.ndarray
    tau_grid: TauGrid
    strategy: str
    uninformative: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.times)


class MarginalMixture:
    """
    Mezcla sobre la rejilla de tau de las marginales de cada celda.

    Sin correcciones cada componente es N(μ_gi, σ_gi²). Con correcciones la
    densidad estandarizada de cada componente es m_k φ(z) en el tramo k de
    los bordes [-inf, u_0, ..., u_K, inf], con Σ_k m_k ΔΦ_k = 1.
    """

    def __init__(self, weights, mu, sigma, log_corrections: Optional[np.ndarray] = None):
        self.weights = np.asarray(weights, dtype=float)  # (G,)
        self.mu = np.asarray(mu, dtype=float)  # (G, B)
        self.sigma = np.asarray(sigma, dtype=float)  # (G, B)
        self.corregida = log_corrections is not None
        if self.corregida:
            internos = np.linspace(
                -config.LAPLACE_ANCHO_SIGMAS, config.LAPLACE_ANCHO_SIGMAS, config.LAPLACE_SUBINTERVALOS + 1
            )
            self.internos = internos
            self.bordes = np.concatenate(([-np.inf], internos, [np.inf]))
            phi_bordes = special.ndtr(self.bordes)
            masa_gauss = np.diff(phi_bordes)  # (K,)
            relativa = np.exp(log_corrections - log_corrections.max(axis=-1, keepdims=True))
            normalizador = np.sum(relativa * masa_gauss, axis=-1, keepdims=True)
            self.multiplicadores = relativa / normalizador  # (G, B, K)
            masas = self.multiplicadores * masa_gauss
            self.acumulada = np.concatenate(
                (np.zeros(masas.shape[:-1] + (1,)), np.cumsum(masas, axis=-1)), axis=-1
            )
            self.phi_bordes = phi_bordes

    def cdf(self, x) -> np.ndarray:
        """Función de distribución de cada celda en x (B,)."""
        z = (np.asarray(x, dtype=float)[None, :] - self.mu) / self.sigma
        if not self.corregida:
            return self.weights @ special.ndtr(z)
        k = np.searchsorted(self.internos, z, side='left')[..., None]
        base = np.take_along_axis(self.acumulada, k, axis=-1)[..., 0]
        m = np.take_along_axis(self.multiplicadores, k, axis=-1)[..., 0]
        componente = base + m * (special.ndtr(z) - self.phi_bordes[k[..., 0]])
        return self.weights @ np.clip(componente, 0.0, 1.0)

    def quantile(self, p: float) -> np.ndarray:
        """Cuantil p de cada celda por bisección vectorizada."""
        bajo = np.min(self.mu - 12.0 * self.sigma, axis=0)
        alto = np.max(self.mu + 12.0 * self.sigma, axis=0)
        while np.max(alto - bajo) > config.TOLERANCIA_CUANTIL * max(1.0, float(np.max(np.abs(alto)))):
            medio = 0.5 * (bajo + alto)
            debajo = self.cdf(medio) < p
            bajo = np.where(debajo, medio, bajo)
            alto = np.where(debajo, alto, medio)
            if np.all(medio == bajo) and np.all(medio == alto):
                break
        return 0.5 * (bajo + alto)

    def mean(self) -> np.ndarray:
        if not self.corregida:
            return self.weights @ self.mu
        densidad_bordes = np.exp(-0.5 * self.bordes ** 2) / np.sqrt(2.0 * np.pi)
        # E[z] por tramo de una normal truncada: φ(a) - φ(b)
        momento = np.sum(self.multiplicadores * (densidad_bordes[:-1] - densidad_bordes[1:]), axis=-1)
        return self.weights @ (self.mu + self.sigma * momento)

    def mean_natural(self) -> np.ndarray:
        with np.errstate(over='ignore'):
            lognormal = np.exp(self.mu + 0.5 * self.sigma ** 2)
        if not self.corregida:
            return self.weights @ lognormal
        # E[e^{σz}] por tramo: e^{σ²/2} [Φ(b - σ) - Φ(a - σ)]
        s = self.sigma[..., None]
        desplazada = special.ndtr(self.bordes[1:] - s) - special.ndtr(self.bordes[:-1] - s)
        factor = np.sum(self.multiplicadores * desplazada, axis=-1)
        return self.weights @ (lognormal * factor)


def _correcciones_laplace(
    cells: LatentLikelihood,
    S: StructureMatrix,
    tau: float,
    modo: ModeResult,
    sigma: np.ndarray
) -> np.ndarray:
    """
    log m_k (sin normalizar) de cada celda para un punto de la rejilla.

    Returns:
        np.ndarray: (B, K) con K = subintervalos + 2 colas.
    """
    B = S.dim
    z = np.linspace(-config.LAPLACE_ANCHO_SIGMAS, config.LAPLACE_ANCHO_SIGMAS, config.LAPLACE_PUNTOS)
    internos = np.linspace(
        -config.LAPLACE_ANCHO_SIGMAS, config.LAPLACE_ANCHO_SIGMAS, config.LAPLACE_SUBINTERVALOS + 1
    )
    medios = 0.5 * (internos[:-1] + internos[1:])
    tramo = np.clip(np.searchsorted(z, medios) - 1, 0, len(z) - 2)
    fraccion = (medios - z[tramo]) / (z[tramo + 1] - z[tramo])
    covarianza = tri_solve(modo.precision_factor, np.eye(B))
    if covarianza.ndim == 1:
        covarianza = covarianza.reshape(B, B)
    gamma_star = modo.gamma_star

    correcciones = np.empty((B, len(medios) + 2))
    for inicio in range(0, B, config.LAPLACE_CELDAS_POR_BLOQUE):
        indices = np.arange(inicio, min(inicio + config.LAPLACE_CELDAS_POR_BLOQUE, B))
        direcciones = covarianza[:, indices].T / sigma[indices, None]  # (m, B)
        filas = gamma_star[None, None, :] + direcciones[:, None, :] * z[None, :, None]
        filas = filas.reshape(-1, B)

        with np.errstate(over='ignore'):
            evaluacion = cells.log_likelihood(filas)
        log_prior = -0.5 * tau * S.quadratic_form(filas)
        diagonales = tau * S.diag + np.broadcast_to(evaluacion.curvature, filas.shape)
        excluidos = np.repeat(indices, len(z))
        log_det = tri_log_det_excluding(diagonales, tau * S.offdiag, excluidos)

        log_aprox = (evaluacion.value + log_prior - 0.5 * log_det).reshape(len(indices), len(z))
        resto = log_aprox + 0.5 * z ** 2
        if not np.all(np.isfinite(resto)):
            raise MarginalError(f"Corrección de Laplace no finita en las celdas {indices[0]}..{indices[-1]}")
        resto -= resto.max(axis=1, keepdims=True)

        correcciones[indices, 0] = resto[:, 0]
        correcciones[indices, 1:-1] = resto[:, tramo] * (1.0 - fraccion) + resto[:, tramo + 1] * fraccion
        correcciones[indices, -1] = resto[:, -1]
    return correcciones


def latent_marginals(
    cells: LatentLikelihood,
    S: StructureMatrix,
    grid: TauGrid,
    strategy: str = config.ESTRATEGIA_POR_DEFECTO
) -> PosteriorSummary:
    """
    Integra las marginales de gamma sobre la rejilla de tau.

    Args:
        cells: Verosimilitud latente.
        S: Matriz de estructura.
        grid: Rejilla de tau con sus modos.
        strategy: "gaussian" o "laplace".

    Returns:
        PosteriorSummary: Cuantiles 0.025/0.5/0.975, media y media natural.

    Raises:
        MarginalError: Estrategia desconocida o cuantiles no finitos/desordenados.
    """
    if strategy not in config.ESTRATEGIAS:
        raise MarginalError(f"Estrategia desconocida: '{strategy}' (opciones: {', '.join(config.ESTRATEGIAS)})")

    mu = np.stack([m.gamma_star for m in grid.modes])
    sigma = np.sqrt(np.stack([tri_inverse_diag(m.precision_factor) for m in grid.modes]))

    correcciones = None
    if strategy == "laplace":
        logging.info(f"Calculando correcciones de Laplace para {S.dim} celdas y {len(grid)} puntos de tau")
        correcciones = np.stack([
            _correcciones_laplace(cells, S, float(tau), modo, sigma[g])
            for g, (tau, modo) in enumerate(zip(grid.taus, grid.modes))
        ])

    mezcla = MarginalMixture(grid.weights, mu, sigma, correcciones)
    mediana = mezcla.quantile(0.5)
    inferior = mezcla.quantile(config.CUANTIL_INFERIOR)
    superior = mezcla.quantile(config.CUANTIL_SUPERIOR)

    for nombre, arreglo in (("mediana", mediana), ("inferior", inferior), ("superior", superior)):
        if not np.all(np.isfinite(arreglo)):
            raise MarginalError(f"Cuantil {nombre} no finito")
    holgura = 1e-8 * (1.0 + np.abs(mediana))
    if np.any(inferior > mediana + holgura) or np.any(mediana > superior + holgura):
        raise MarginalError("Los cuantiles posteriores no están ordenados")

    tiempos = np.asarray(cells.midpoints, dtype=float)
    return PosteriorSummary(
        times=tiempos,
        median=mediana,
        lower95=np.minimum(inferior, mediana),
        upper95=np.maximum(superior, mediana),
        mean=mezcla.mean(),
        mean_natural=mezcla.mean_natural(),
        tau_grid=grid,
        strategy=strategy,
        uninformative=~np.asarray(cells.informative_mask(), dtype=bool)
    )
