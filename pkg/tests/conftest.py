"""
Fixtures compartidas por las pruebas.

Los módulos del sistema viven en la raíz del repositorio, como scripts
planos; se añade la raíz a sys.path para importarlos.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

RAIZ = Path(__file__).resolve().parent.parent
if str(RAIZ) not in sys.path:
    sys.path.insert(0, str(RAIZ))

from coalescent import build_cells_cggp  # noqa: E402
from genealogy import extract_coalescent_data, parse_newick  # noqa: E402
from likelihoods import GaussianPseudoLikelihood  # noqa: E402
from simulator import isochronous, simulate  # noqa: E402
from trajectories import scenario  # noqa: E402

# Árboles de ejemplo
ARBOL_DOS_PUNTAS = "(A:1,B:1);"
ARBOL_TRES_PUNTAS = "((A:1,B:1):1,C:2);"
ARBOL_HETEROCRONO = "((A:2,B:1):1,C:3);"
ARBOL_N3_ISOCRONO = "((A:0.5,B:0.5):1,C:1.5);"  # coalescencias en 0.5 y 1.5
ARBOL_UNA_CELDA = "(A:2,B:2);"  # n = 2, coalescencia en 2


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def celdas_n3():
    """Celdas CGGP del árbol isócrono n = 3: A = [1.5, 1.0], y = [1, 1]."""
    return build_cells_cggp(extract_coalescent_data(parse_newick(ARBOL_N3_ISOCRONO)))


@pytest.fixture
def celdas_una():
    """Una sola celda CGGP: A = [2], y = [1]."""
    return build_cells_cggp(extract_coalescent_data(parse_newick(ARBOL_UNA_CELDA)))


@pytest.fixture
def verosimilitud_gaussiana():
    """Verosimilitud gaussiana de referencia con B = 12 celdas irregulares."""
    generador = np.random.default_rng(7)
    B = 12
    medios = np.cumsum(generador.uniform(0.2, 1.0, size=B))
    observaciones = np.cumsum(generador.normal(0.0, 0.3, size=B))
    precisiones = generador.uniform(1.0, 4.0, size=B)
    return GaussianPseudoLikelihood(observaciones, precisiones, medios)


def arbol_simulado(n: int = 100, semilla: int = 1, escenario: str = "constant"):
    return simulate(scenario(escenario), isochronous(n), semilla)


def celdas_simuladas(n: int = 100, semilla: int = 1, escenario: str = "constant"):
    return build_cells_cggp(extract_coalescent_data(arbol_simulado(n, semilla, escenario)))
