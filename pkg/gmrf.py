"""
Módulo de campos aleatorios gaussianos de Markov (GMRF).

Este módulo se encarga de:
- Construir la matriz de estructura de un paseo aleatorio de primer orden
  (rw1) sobre una rejilla regular o irregular de puntos medios
- Evaluar la log-densidad intrínseca (de rango deficiente) del GMRF
"""

import math
from dataclasses import dataclass

import numpy as np

from exceptions import StructureError
from tridiagonal import tri_matvec


@dataclass(frozen=True, eq=False)
class StructureMatrix:
    """
    Matriz de estructura S simétrica tridiagonal; la precisión del prior es tau * S.

    Attributes:
        dim: Dimensión B.
        diag: Diagonal (B).
        offdiag: Subdiagonal (B - 1).
        rank: Rango de S (B - 1 para rw1; su núcleo es el vector constante).
        log_gdet: Log del determinante generalizado (producto de autovalores no nulos).
    """
    dim: int
    diag: np.ndarray
    offdiag: np.ndarray
    rank: int
    log_gdet: float

    @classmethod
    def degenerate(cls) -> 'StructureMatrix':
        """Estructura nula de una sola celda: el prior no aporta información."""
        return cls(dim=1, diag=np.zeros(1), offdiag=np.zeros(0), rank=0, log_gdet=0.0)

    @property
    def weights(self) -> np.ndarray:
        """Pesos 1/δ_i de los incrementos del paseo aleatorio."""
        return -self.offdiag

    def matvec(self, x) -> np.ndarray:
        return tri_matvec(self.diag, self.offdiag, x)

    def quadratic_form(self, gamma) -> np.ndarray:
        """γᵀSγ = Σ_i w_i (γ_{i+1} - γ_i)², exactamente invariante ante γ + c·1."""
        gamma = np.asarray(gamma, dtype=float)
        return np.sum(self.weights * np.diff(gamma, axis=-1) ** 2, axis=-1)

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


def build_rw1(midpoints) -> StructureMatrix:
    """
    Matriz de estructura rw1 sobre puntos medios posiblemente irregulares.

    Con incrementos δ_i = m_{i+1} - m_i: offdiag_i = -1/δ_i y diag_i es la
    suma de los 1/δ adyacentes. Para una rejilla regular es la matriz de
    segundas diferencias escalada por 1/Δ.

    El determinante generalizado de un laplaciano de camino con pesos w_i es
    B·Π w_i (teorema de la matriz-árbol: un único árbol generador).

    Args:
        midpoints: Al menos 2 puntos estrictamente crecientes.

    Returns:
        StructureMatrix: S con rango B - 1.

    Raises:
        StructureError: Menos de 2 puntos o puntos no crecientes.

    Ejemplo:
        >>> build_rw1([0.0, 0.5, 2.5]).diag.tolist()
        [2.0, 2.5, 0.5]
    """
    puntos = np.asarray(midpoints, dtype=float)
    if puntos.ndim != 1 or len(puntos) < 2:
        raise StructureError("rw1 necesita al menos 2 puntos medios")
    incrementos = np.diff(puntos)
    if np.any(~(incrementos > 0)):
        raise StructureError("Los puntos medios deben ser estrictamente crecientes")

    pesos = 1.0 / incrementos
    diagonal = np.zeros(len(puntos))
    diagonal[:-1] += pesos
    diagonal[1:] += pesos
    return StructureMatrix(
        dim=len(puntos),
        diag=diagonal,
        offdiag=-pesos,
        rank=len(puntos) - 1,
        log_gdet=float(math.log(len(puntos)) + np.sum(np.log(pesos)))
    )


def structure_for(midpoints) -> StructureMatrix:
    """rw1 sobre los puntos medios, o la estructura nula si sólo hay una celda."""
    if len(midpoints) == 1:
        return StructureMatrix.degenerate()
    return build_rw1(midpoints)


def gmrf_logdensity(S: StructureMatrix, tau: float, gamma) -> float:
    """
    Log-densidad intrínseca del GMRF con precisión tau * S.

    (rank/2) log tau + (1/2) log_gdet - (tau/2) γᵀSγ - (rank/2) log 2π

    Args:
        S: Matriz de estructura.
        tau: Precisión (> 0).
        gamma: Vector de longitud S.dim (o lote (..., S.dim)).

    Raises:
        StructureError: tau no positivo o longitud incorrecta.
    """
    if not tau > 0:
        raise StructureError(f"La precisión debe ser positiva (tau = {tau})")
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape[-1] != S.dim:
        raise StructureError(f"Longitud de gamma incorrecta: {gamma.shape[-1]} (se esperaba {S.dim})")
    return (
        0.5 * S.rank * math.log(tau)
        + 0.5 * S.log_gdet
        - 0.5 * tau * S.quadratic_form(gamma)
        - 0.5 * S.rank * math.log(2.0 * math.pi)
    )
