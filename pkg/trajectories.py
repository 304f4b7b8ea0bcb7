"""
Módulo de trayectorias de tamaño poblacional efectivo.

Este módulo se encarga de:
- Representar trayectorias N_e(t) (constante, exponencial, boom-bust,
  constante por tramos o una función arbitraria)
- Integrar la intensidad 1/N_e(t) entre dos edades
- Invertir la intensidad integrada, necesario para simular coalescencias

Las cuatro trayectorias con nombre se representan como exponenciales por
tramos N_e(t) = a_i * exp(-r_i * t) y tienen forma cerrada; las funciones
arbitrarias se integran por cuadratura adaptativa.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize

import config
from exceptions import TrajectoryError


@dataclass(frozen=True)
class TrajectorySpec:
    """
    Trayectoria N_e(t) para t >= 0.

    Attributes:
        kind: "constant", "exponential", "boom_bust", "piecewise_constant" o "function".
        params: Parámetros del tipo (ver constructores de clase).
        breaks: Inicio de cada tramo exponencial (el primero es 0).
        scales: Factor a_i de cada tramo.
        rates: Tasa r_i de cada tramo, con N_e(t) = a_i * exp(-r_i * t).
        function: Función N_e(t) cuando kind == "function".
    """
    kind: str
    params: Tuple[float, ...]
    breaks: Tuple[float, ...] = ()
    scales: Tuple[float, ...] = ()
    rates: Tuple[float, ...] = ()
    function: Optional[Callable[[float], float]] = field(default=None, compare=False)

    # ------------------------------------------------------------------
    # Constructores
    # ------------------------------------------------------------------

    @classmethod
    def constant(cls, c: float) -> 'TrajectorySpec':
        """N_e(t) = c."""
        if not c > 0:
            raise TrajectoryError(f"El tamaño poblacional debe ser positivo (c = {c})")
        return cls("constant", (float(c),), (0.0,), (float(c),), (0.0,))

    @classmethod
    def exponential(cls, a: float, b: float) -> 'TrajectorySpec':
        """N_e(t) = a * exp(-b * t)."""
        if not a > 0:
            raise TrajectoryError(f"El tamaño poblacional debe ser positivo (a = {a})")
        return cls("exponential", (float(a), float(b)), (0.0,), (float(a),), (float(b),))

    @classmethod
    def boom_bust(cls) -> 'TrajectorySpec':
        """Expansión seguida de colapso: exp(4t) en [0, 0.5], exp(-2t + 3) después."""
        quiebre = config.BOOMBUST_QUIEBRE
        return cls("boom_bust", (), (0.0, quiebre), (1.0, math.exp(3.0)), (-4.0, 2.0))

    @classmethod
    def piecewise_constant(cls, boundaries: Sequence[float], values: Sequence[float]) -> 'TrajectorySpec':
        """
        N_e(t) constante por tramos.

        Args:
            boundaries: Puntos de cambio interiores, estrictamente crecientes y positivos.
            values: len(boundaries) + 1 tamaños positivos.
        """
        limites = [float(b) for b in boundaries]
        valores = [float(v) for v in values]
        if len(valores) != len(limites) + 1:
            raise TrajectoryError(
                f"Se esperaban {len(limites) + 1} valores para {len(limites)} puntos de cambio"
            )
        if any(v <= 0 for v in valores):
            raise TrajectoryError("Todos los tamaños poblacionales deben ser positivos")
        if limites and (limites[0] <= 0 or np.any(np.diff(limites) <= 0)):
            raise TrajectoryError("Los puntos de cambio deben ser positivos y estrictamente crecientes")
        return cls(
            "piecewise_constant",
            tuple(limites) + tuple(valores),
            (0.0,) + tuple(limites),
            tuple(valores),
            (0.0,) * len(valores)
        )

    @classmethod
    def from_function(cls, funcion: Callable[[float], float]) -> 'TrajectorySpec':
        """Trayectoria arbitraria; la intensidad se integra numéricamente."""
        return cls("function", (), function=funcion)

    # ------------------------------------------------------------------
    # Evaluación
    # ------------------------------------------------------------------

    def population_size(self, t) -> np.ndarray:
        """N_e(t), vectorizado."""
        t = np.asarray(t, dtype=float)
        if self.kind == "function":
            valores = np.vectorize(self.function, otypes=[float])(t)
        else:
            tramo = self._tramo(t)
            escalas = np.asarray(self.scales)[tramo]
            tasas = np.asarray(self.rates)[tramo]
            valores = escalas * np.exp(-tasas * t)
        if np.any(~(valores > 0)):
            raise TrajectoryError("La trayectoria produjo tamaños no positivos")
        return valores

    def log_population_size(self, t) -> np.ndarray:
        """log N_e(t), vectorizado."""
        t = np.asarray(t, dtype=float)
        if self.kind == "function":
            return np.log(self.population_size(t))
        tramo = self._tramo(t)
        return np.log(np.asarray(self.scales)[tramo]) - np.asarray(self.rates)[tramo] * t

    def integrated_intensity(self, a: float, b: float) -> float:
        """
        Intensidad integrada ∫_a^b du / N_e(u).

        Args:
            a: Edad inicial (>= 0).
            b: Edad final (>= a, puede ser infinito).

        Returns:
            float: Valor de la integral.
        """
        if b <= a:
            return 0.0
        if self.kind == "function":
            valor, _ = integrate.quad(
                lambda u: 1.0 / self.function(u), a, b,
                epsabs=config.TOLERANCIA_CUADRATURA, limit=200
            )
            return valor

        total = 0.0
        for inicio, fin, escala, tasa in self._tramos_entre(a, b):
            total += _integral_tramo(inicio, fin, escala, tasa)
        return total

    def inverse_intensity(self, a: float, target: float) -> float:
        """
        Edad t tal que ∫_a^t du / N_e(u) = target.

        Returns:
            float: La edad t, o infinito si la intensidad total restante es menor que target.
        """
        if target <= 0:
            return a
        if self.kind == "function":
            return self._invertir_numericamente(a, target)

        restante = target
        for inicio, fin, escala, tasa in self._tramos_entre(a, math.inf):
            masa = _integral_tramo(inicio, fin, escala, tasa)
            if masa >= restante:
                return _invertir_tramo(inicio, restante, escala, tasa)
            restante -= masa
        return math.inf

    # ------------------------------------------------------------------
    # Auxiliares
    # ------------------------------------------------------------------

    def _tramo(self, t: np.ndarray) -> np.ndarray:
        return np.searchsorted(np.asarray(self.breaks), t, side='right') - 1

    def _tramos_entre(self, a: float, b: float):
        """Genera (inicio, fin, escala, tasa) de los tramos que cortan [a, b]."""
        limites = list(self.breaks[1:]) + [math.inf]
        for inicio, fin, escala, tasa in zip(self.breaks, limites, self.scales, self.rates):
            if fin <= a:
                continue
            if inicio >= b:
                break
            yield max(inicio, a), min(fin, b), escala, tasa

    def _invertir_numericamente(self, a: float, target: float) -> float:
        ancho = 1.0
        while self.integrated_intensity(a, a + ancho) < target:
            ancho *= 2.0
            if ancho > 1e12:
                return math.inf
        return optimize.brentq(
            lambda t: self.integrated_intensity(a, t) - target,
            a, a + ancho, xtol=config.TOLERANCIA_CUADRATURA
        )


def _integral_tramo(inicio: float, fin: float, escala: float, tasa: float) -> float:
    """∫ exp(tasa * u) / escala du sobre [inicio, fin]."""
    if tasa == 0.0:
        return (fin - inicio) / escala
    if math.isinf(fin):
        return math.inf if tasa > 0 else -math.exp(tasa * inicio) / (escala * tasa)
    return math.exp(tasa * inicio) * math.expm1(tasa * (fin - inicio)) / (escala * tasa)


def _invertir_tramo(inicio: float, objetivo: float, escala: float, tasa: float) -> float:
    """Edad t en el tramo con ∫_inicio^t exp(tasa * u) / escala du = objetivo."""
    if tasa == 0.0:
        return inicio + objetivo * escala
    argumento = objetivo * escala * tasa * math.exp(-tasa * inicio)
    if argumento <= -1.0:
        return math.inf
    return inicio + math.log1p(argumento) / tasa


def scenario(nombre: str) -> TrajectorySpec:
    """
    Trayectorias de los escenarios de simulación con nombre.

    Args:
        nombre: "constant" (N_e = 1), "exponential" (N_e = 25 exp(-5t)) o
            "boombust" (expansión seguida de colapso).

    Returns:
        TrajectorySpec: La trayectoria del escenario.
    """
    if nombre == "constant":
        return TrajectorySpec.constant(1.0)
    if nombre == "exponential":
        return TrajectorySpec.exponential(25.0, 5.0)
    if nombre == "boombust":
        return TrajectorySpec.boom_bust()
    raise TrajectoryError(f"Escenario desconocido: '{nombre}'")
