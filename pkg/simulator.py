"""
Módulo simulador de genealogías coalescentes.

Este módulo se encarga de:
- Simular genealogías bajo el coalescente (heterócrono) con trayectoria N_e(t)
- Acumular la intensidad integrada C_k / N_e(t) hacia el pasado, actualizando
  k en las edades de muestreo sin reiniciar el umbral exponencial

La simulación es determinista para una semilla dada.
"""

import math
import logging
from typing import List, Sequence, Tuple

import numpy as np

from exceptions import SimulationError
from genealogy import Genealogy, Node
from trajectories import TrajectorySpec


def simulate(
    spec: TrajectorySpec,
    sampling: Sequence[Tuple[float, int]],
    seed: int
) -> Genealogy:
    """
    Simula una genealogía bajo el coalescente con trayectoria spec.

    Con k linajes activos, la siguiente coalescencia ocurre cuando la
    intensidad integrada Λ(t) = ∫ C_k / N_e(u) du alcanza un umbral Exp(1);
    si antes se llega a una edad de muestreo, se descuenta la masa consumida,
    se incorporan las nuevas muestras y se sigue con el umbral restante.
    El par que coalesce se elige uniformemente.

    Args:
        spec: Trayectoria N_e(t).
        sampling: Pares (edad, cantidad); al menos 2 muestras y alguna en edad 0.
        seed: Semilla del generador.

    Returns:
        Genealogy: Puntas t1..tn en el orden del calendario, nodos internos después.

    Raises:
        SimulationError: Si el calendario es inválido o la intensidad restante
            no basta para que coalescan los linajes.
    """
    calendario = _normalizar_calendario(sampling)
    rng = np.random.default_rng(seed)

    edades: List[float] = []
    hijos: List[Tuple[int, ...]] = []
    for edad, cantidad in calendario:
        for _ in range(cantidad):
            edades.append(edad)
            hijos.append(())
    n = len(edades)

    activos: List[int] = []
    siguiente = 0  # Índice del siguiente grupo de muestreo
    t = 0.0
    umbral = 0.0  # Masa exponencial restante hasta la próxima coalescencia

    while siguiente < len(calendario) or len(activos) > 1:
        # Incorporar todas las muestras con edad <= t
        while siguiente < len(calendario) and calendario[siguiente][0] <= t:
            inicio = sum(c for _, c in calendario[:siguiente])
            activos.extend(range(inicio, inicio + calendario[siguiente][1]))
            siguiente += 1

        proxima_muestra = calendario[siguiente][0] if siguiente < len(calendario) else math.inf
        k = len(activos)

        if k < 2:
            t = proxima_muestra
            continue

        if umbral <= 0.0:
            umbral = rng.exponential(1.0)
        c_k = k * (k - 1) / 2.0
        t_evento = spec.inverse_intensity(t, umbral / c_k)

        if math.isinf(t_evento) and math.isinf(proxima_muestra):
            raise SimulationError(
                f"La trayectoria no acumula intensidad suficiente para coalescer {k} linajes"
            )

        if t_evento >= proxima_muestra:
            umbral -= c_k * spec.integrated_intensity(t, proxima_muestra)
            t = proxima_muestra
            continue

        i, j = rng.choice(k, size=2, replace=False)
        a, b = activos[i], activos[j]
        activos = [x for x in activos if x != a and x != b]
        edades.append(t_evento)
        hijos.append((a, b))
        activos.append(len(edades) - 1)
        t = t_evento
        umbral = 0.0

    padres = [None] * len(edades)
    for p, par in enumerate(hijos):
        for h in par:
            padres[h] = p
    nodos = tuple(
        Node(
            label=f"t{i + 1}" if i < n else None,
            age=float(edades[i]),
            parent=padres[i],
            children=hijos[i]
        )
        for i in range(len(edades))
    )
    genealogia = Genealogy(nodes=nodos, root=len(nodos) - 1, n_tips=n)
    logging.debug(f"Genealogía simulada: n = {n}, altura = {genealogia.height:.6g}, semilla = {seed}")
    return genealogia


def _normalizar_calendario(sampling: Sequence[Tuple[float, int]]) -> List[Tuple[float, int]]:
    """Agrupa y ordena el calendario de muestreo; valida sus precondiciones."""
    grupos = {}
    for edad, cantidad in sampling:
        edad = float(edad)
        if edad < 0 or not math.isfinite(edad):
            raise SimulationError(f"Edad de muestreo inválida: {edad}")
        if int(cantidad) != cantidad or cantidad < 0:
            raise SimulationError(f"Cantidad de muestras inválida: {cantidad}")
        if cantidad:
            grupos[edad] = grupos.get(edad, 0) + int(cantidad)
    calendario = sorted(grupos.items())
    if sum(c for _, c in calendario) < 2:
        raise SimulationError("Se necesitan al menos 2 muestras")
    if not calendario or calendario[0][0] != 0.0:
        raise SimulationError("Se necesita al menos una muestra en edad 0")
    return calendario


def isochronous(n: int) -> List[Tuple[float, int]]:
    """Calendario con n muestras en el presente."""
    return [(0.0, n)]
