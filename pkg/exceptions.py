"""
Jerarquía de excepciones del sistema.

Las funciones numéricas lanzan estas excepciones; el orquestador las captura,
las registra indicando la etapa fallida y las traduce a códigos de salida.
"""

from typing import Optional


class PhylodynamicsError(Exception):
    """Error base de todo el sistema."""


class ConfigError(PhylodynamicsError):
    """Configuración o uso inválido (código de salida 2)."""


class NewickError(PhylodynamicsError):
    """Error de sintaxis o de contenido en un texto Newick."""

    def __init__(self, mensaje: str, posicion: Optional[int] = None):
        if posicion is not None:
            mensaje = f"{mensaje} (posición {posicion})"
        super().__init__(mensaje)
        self.posicion = posicion


class GenealogyError(PhylodynamicsError):
    """Genealogía que no cumple los invariantes (edades, topología, empates)."""


class TrajectoryError(PhylodynamicsError):
    """Especificación de trayectoria inválida."""


class SimulationError(PhylodynamicsError):
    """Fallo al simular una genealogía."""


class CellError(PhylodynamicsError):
    """Parámetros inválidos al construir las celdas."""


class LikelihoodError(PhylodynamicsError):
    """Argumentos inválidos para la verosimilitud."""


class StructureError(PhylodynamicsError):
    """Puntos medios o parámetros inválidos para la matriz de estructura."""


class NotPositiveDefiniteError(PhylodynamicsError):
    """Matriz tridiagonal no definida positiva."""

    def __init__(self, indice: int):
        super().__init__(f"Matriz no definida positiva: pivote <= 0 en el índice {indice}")
        self.indice = indice


class ModeFindingError(PhylodynamicsError):
    """Fallo al localizar el modo de la condicional completa."""


class NonConvergenceError(ModeFindingError):
    """Newton-Raphson no convergió en el número máximo de iteraciones."""

    def __init__(self, iteraciones: int, norma_gradiente: float):
        super().__init__(
            f"Newton-Raphson no convergió tras {iteraciones} iteraciones "
            f"(max |gradiente| = {norma_gradiente:.3e})"
        )
        self.iteraciones = iteraciones
        self.norma_gradiente = norma_gradiente


class SingularPrecisionError(ModeFindingError):
    """Todas las exposiciones son nulas: la precisión de Newton es singular."""


class TauExplorationError(PhylodynamicsError):
    """No se encontró un modo interior del marginal de tau."""


class MarginalError(PhylodynamicsError):
    """Evaluación no finita de un marginal latente."""


class McmcError(PhylodynamicsError):
    """Configuración MCMC inválida."""


class McmcAbortError(McmcError):
    """La cadena se abortó por demasiadas actualizaciones fallidas."""
