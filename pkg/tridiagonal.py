"""
Álgebra lineal para matrices simétricas tridiagonales definidas positivas.

Este módulo se encarga de:
- Factorizar M = L Lᵀ en forma de banda (LAPACK vía scipy)
- Resolver sistemas, muestrear N(0, M⁻¹) y calcular log det(M)
- Obtener la diagonal de M⁻¹ con la recursión hacia atrás sobre el factor
- Calcular log det de M sin una fila/columna, en lote (estrategia laplace)

Todas las operaciones son O(B).
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from exceptions import NotPositiveDefiniteError


@dataclass(frozen=True, eq=False)
class TriFactor:
    """
    Factor de Cholesky de una matriz tridiagonal en forma de banda inferior.

    Attributes:
        bands: Fila 0 = diagonal de L; fila 1 = subdiagonal L_{i+1,i} (último elemento sin uso).
        log_det: log det(M) = 2 Σ log L_ii.
    """
    bands: np.ndarray
    log_det: float

    @property
    def dim(self) -> int:
        return self.bands.shape[1]

    @property
    def diag(self) -> np.ndarray:
        return self.bands[0]

    @property
    def subdiag(self) -> np.ndarray:
        return self.bands[1, :-1] if self.bands.shape[0] > 1 else np.zeros(0)


def _bandas(diag: np.ndarray, offdiag: np.ndarray) -> np.ndarray:
    """Matriz en forma de banda inferior aceptada por cholesky_banded."""
    n = len(diag)
    if n == 1:
        return diag.reshape(1, 1).copy()
    bandas = np.zeros((2, n))
    bandas[0] = diag
    bandas[1, :-1] = offdiag
    return bandas


def _indice_pivote_fallido(diag: np.ndarray, offdiag: np.ndarray) -> int:
    """Recorre la eliminación para localizar el primer pivote no positivo."""
    pivote = diag[0]
    if not pivote > 0:
        return 0
    for i in range(1, len(diag)):
        pivote = diag[i] - offdiag[i - 1] ** 2 / pivote
        if not pivote > 0:
            return i
    return len(diag) - 1


def tri_cholesky(diag, offdiag) -> TriFactor:
    """
    Factoriza una matriz simétrica tridiagonal definida positiva.

    Args:
        diag: Diagonal (longitud B).
        offdiag: Subdiagonal (longitud B - 1).

    Returns:
        TriFactor: Factor en banda y log det.

    Raises:
        NotPositiveDefiniteError: Con el índice del primer pivote <= 0.

    Ejemplo:
        >>> tri_cholesky([2.0, 2.0], [-1.0]).log_det  # log 3
        1.0986122886681098
    """
    diag = np.asarray(diag, dtype=float)
    offdiag = np.asarray(offdiag, dtype=float)
    if len(offdiag) != len(diag) - 1:
        raise ValueError(f"La subdiagonal debe tener longitud {len(diag) - 1}")
    if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(offdiag))):
        raise NotPositiveDefiniteError(_indice_pivote_fallido(diag, offdiag))
    try:
        factor = linalg.cholesky_banded(_bandas(diag, offdiag), lower=True)
    except linalg.LinAlgError:
        raise NotPositiveDefiniteError(_indice_pivote_fallido(diag, offdiag))
    return TriFactor(bands=factor, log_det=float(2.0 * np.sum(np.log(factor[0]))))


def tri_solve(f: TriFactor, rhs) -> np.ndarray:
    """
    Resuelve M x = rhs usando el factor de M.

    Args:
        f: Factor de Cholesky de M.
        rhs: Vector (B,) o matriz (B, m) de lados derechos.
    """
    return linalg.cho_solve_banded((f.bands, True), np.asarray(rhs, dtype=float))


def tri_backsolve(f: TriFactor, z) -> np.ndarray:
    """
    Resuelve Lᵀ x = z.

    Si z ~ N(0, I), entonces x ~ N(0, M⁻¹).
    """
    z = np.asarray(z, dtype=float)
    if f.dim == 1:
        return z / f.bands[0, 0]
    superior = np.zeros((2, f.dim))
    superior[0, 1:] = f.bands[1, :-1]
    superior[1] = f.bands[0]
    return linalg.solve_banded((0, 1), superior, z)


def tri_inverse_diag(f: TriFactor) -> np.ndarray:
    """
    Diagonal de M⁻¹ a partir del factor L.

    Con l_i = L_ii y e_i = L_{i+1,i}, recorre de atrás hacia adelante:
    Σ_{B-1} = 1 / l_{B-1}², Σ_i = 1 / l_i² + (e_i / l_i)² Σ_{i+1}.
    """
    l = f.diag
    e = f.subdiag
    varianzas = np.empty(f.dim)
    varianzas[-1] = 1.0 / l[-1] ** 2
    for i in range(f.dim - 2, -1, -1):
        varianzas[i] = 1.0 / l[i] ** 2 + (e[i] / l[i]) ** 2 * varianzas[i + 1]
    return varianzas


def tri_matvec(diag, offdiag, x) -> np.ndarray:
    """M x para M simétrica tridiagonal; x puede ser un lote (..., B)."""
    x = np.asarray(x, dtype=float)
    resultado = diag * x
    resultado[..., :-1] += offdiag * x[..., 1:]
    resultado[..., 1:] += offdiag * x[..., :-1]
    return resultado


def tri_log_det_excluding(diag_rows, offdiag, excluded) -> np.ndarray:
    """
    log det de M_r sin la fila/columna excluded[r], para un lote de diagonales.

    Al quitar el índice i la matriz queda diagonal por bloques ([0, i) y
    (i, B)); se suman los pivotes de eliminación hacia adelante del primer
    bloque y hacia atrás del segundo.

    Args:
        diag_rows: Diagonales (m, B), una matriz por fila; la subdiagonal es común.
        offdiag: Subdiagonal común (B - 1).
        excluded: Índice excluido de cada fila (m,).

    Returns:
        np.ndarray: (m,) log determinantes.
    """
    diag_rows = np.asarray(diag_rows, dtype=float)
    m, n = diag_rows.shape
    excluded = np.asarray(excluded)
    cuadrados = np.asarray(offdiag, dtype=float) ** 2

    log_adelante = np.zeros((m, n + 1))  # Σ log pivotes de [0, j)
    pivote = diag_rows[:, 0].copy()
    log_adelante[:, 1] = np.log(pivote)
    for j in range(1, n):
        pivote = diag_rows[:, j] - cuadrados[j - 1] / pivote
        log_adelante[:, j + 1] = log_adelante[:, j] + np.log(pivote)

    log_atras = np.zeros((m, n + 1))  # Σ log pivotes de [j, B)
    pivote = diag_rows[:, -1].copy()
    log_atras[:, n - 1] = np.log(pivote)
    for j in range(n - 2, -1, -1):
        pivote = diag_rows[:, j] - cuadrados[j] / pivote
        log_atras[:, j] = log_atras[:, j + 1] + np.log(pivote)

    filas = np.arange(m)
    return log_adelante[filas, excluded] + log_atras[filas, excluded + 1]
