"""
Módulo de la verosimilitud coalescente.

Este módulo se encarga de:
- Reducir la línea temporal de una genealogía a estadísticos suficientes por
  celda (eventos y_j, exposición coalescente A_j)
- Construir las celdas del modelo CGGP (una por intervalo entre coalescencias)
  y del modelo RGGP (rejilla regular)
- Evaluar la log-verosimilitud, su gradiente y su curvatura

Ambos modelos comparten el mismo núcleo: con log N_e constante igual a
gamma_j en la celda j,

    log L = log_const + Σ_j [ -y_j * gamma_j - A_j * exp(-gamma_j) ]
"""

import logging
from dataclasses import dataclass

import numpy as np

from exceptions import CellError
from genealogy import CoalescentData
from likelihoods import LikelihoodEval, validar_gamma


@dataclass(frozen=True, eq=False)
class CellStats:
    """
    Estadísticos suficientes por celda.

    Attributes:
        boundaries: Límites s_0 = 0 < s_1 < ... < s_B = t_1; la celda j es (s_{j-1}, s_j].
        midpoints: Punto representativo de cada celda (su centro).
        y: Número de coalescencias en cada celda.
        A: Exposición coalescente ∫_celda C_{k(t)} dt, con C_k = k(k-1)/2.
        log_const: Σ sobre coalescencias de log C_k en el evento.
        model: "cggp" o "rggp".
    """
    boundaries: np.ndarray
    midpoints: np.ndarray
    y: np.ndarray
    A: np.ndarray
    log_const: float
    model: str

    @property
    def dim(self) -> int:
        return len(self.y)

    @property
    def total_exposure(self) -> float:
        return float(self.A.sum())

    def log_likelihood(self, gamma) -> LikelihoodEval:
        return log_likelihood(self, gamma)

    def initial_gamma(self) -> np.ndarray:
        """Valor constante log(ΣA / Σy), estimador de máxima verosimilitud con N_e constante."""
        return np.full(self.dim, np.log(self.A.sum() / self.y.sum()))

    def informative_mask(self) -> np.ndarray:
        return self.A > 0


def _combinaciones(k: np.ndarray) -> np.ndarray:
    """C_k = k (k - 1) / 2."""
    return k * (k - 1) / 2.0


def _exposicion_acumulada(d: CoalescentData):
    """
    Nodos y valores de F(t) = ∫_0^t C_{k(u)} du, lineal por tramos.

    k(t) cambia sólo en las edades de muestreo (sube) y de coalescencia (baja).
    """
    nodos = np.union1d(np.append(d.sample_ages, 0.0), d.coal_ages)
    k = d.lineage_count(nodos[:-1])
    incrementos = _combinaciones(k) * np.diff(nodos)
    return nodos, np.concatenate(([0.0], np.cumsum(incrementos)))


def _construir_celdas(d: CoalescentData, limites: np.ndarray, modelo: str) -> CellStats:
    nodos, acumulada = _exposicion_acumulada(d)
    exposicion = np.diff(np.interp(limites, nodos, acumulada))
    exposicion = np.maximum(exposicion, 0.0)

    # Celda j: s_{j-1} < t <= s_j
    celda = np.searchsorted(limites, d.coal_ages, side='left') - 1
    celda = np.clip(celda, 0, len(limites) - 2)
    eventos = np.bincount(celda, minlength=len(limites) - 1)

    log_const = float(np.sum(np.log(_combinaciones(d.lineages_at_coalescences()))))
    for arreglo in (limites, exposicion, eventos):
        arreglo.setflags(write=False)
    medios = 0.5 * (limites[:-1] + limites[1:])
    medios.setflags(write=False)

    celdas = CellStats(
        boundaries=limites,
        midpoints=medios,
        y=eventos,
        A=exposicion,
        log_const=log_const,
        model=modelo
    )
    vacias = int(np.sum(celdas.A == 0))
    if vacias:
        logging.warning(f"{vacias} celda(s) sin exposición coalescente: su marginal depende sólo del prior")
    return celdas


def build_cells_cggp(d: CoalescentData) -> CellStats:
    """
    Celdas del modelo CGGP: una por intervalo entre coalescencias.

    Los límites son {0} ∪ edades de coalescencia, y_j = 1 en cada celda y la
    exposición se integra partiendo en las edades de muestreo interiores.

    Args:
        d: Línea temporal válida.

    Returns:
        CellStats: n - 1 celdas.

    Ejemplo:
        Isócrono n = 3 con coalescencias en 0.5 y 1.5 → A = [1.5, 1.0], y = [1, 1].
    """
    limites = np.concatenate(([0.0], d.coal_ages))
    return _construir_celdas(d, limites, "cggp")


def build_cells_rggp(d: CoalescentData, B: int) -> CellStats:
    """
    Celdas del modelo RGGP: B celdas de igual ancho sobre [0, t_1].

    Args:
        d: Línea temporal válida.
        B: Número de celdas (>= 2).

    Returns:
        CellStats: B celdas con el conteo de coalescencias y la exposición de cada una.

    Raises:
        CellError: Si B < 2.
    """
    if int(B) != B or B < 2:
        raise CellError(f"La rejilla regular necesita al menos 2 celdas (B = {B})")
    limites = np.linspace(0.0, d.tmrca, int(B) + 1)
    limites[-1] = d.tmrca
    return _construir_celdas(d, limites, "rggp")


def log_likelihood(c: CellStats, gamma) -> LikelihoodEval:
    """
    Log-verosimilitud coalescente con log N_e = gamma_j constante en cada celda.

    Args:
        c: Estadísticos por celda.
        gamma: Vector de longitud B, o lote (..., B).

    Returns:
        LikelihoodEval: value = log_const + Σ_j [-y_j gamma_j - A_j e^{-gamma_j}],
        gradient_j = -y_j + A_j e^{-gamma_j}, curvature_j = A_j e^{-gamma_j}.

    Raises:
        LikelihoodError: Longitud incorrecta o valores no finitos.

    Ejemplo:
        Celdas CGGP con A = [1.5, 1.0], y = [1, 1] y gamma = (0, 0)
        → value = log 3 - 2.5 ≈ -1.401388.
    """
    gamma = validar_gamma(gamma, c.dim)
    tasa = c.A * np.exp(-gamma)
    valor = c.log_const + np.sum(-c.y * gamma - tasa, axis=-1)
    return LikelihoodEval(value=valor, gradient=tasa - c.y, curvature=tasa)
