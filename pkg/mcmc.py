"""
Muestreador MCMC de referencia para el mismo posterior que INLA.

Cada iteración alterna:
- Gibbs conjugado para tau: Gamma(alpha + rank/2, beta + γᵀSγ/2)
- Metropolis de independencia por bloque para gamma con propuesta
  N(γ*(tau), (tau S + diag(c*))⁻¹), la aproximación gaussiana en el modo

Sirve para validar la salida de INLA; no forma parte del camino rápido.
"""

import math
import time
import logging
from dataclasses import dataclass, field

import numpy as np

import config
from exceptions import ConfigError, McmcAbortError, ModeFindingError
from gmrf import StructureMatrix, structure_for
from inla_grid import TauGrid
from inla_mode import TauPrior, find_mode
from likelihoods import LatentLikelihood
from tridiagonal import tri_backsolve


@dataclass(frozen=True)
class McmcConfig:
    """
    Configuración de la cadena.

    Attributes:
        iterations: Iteraciones totales (incluye burn-in).
        burn_in: Iteraciones descartadas al inicio.
        thin: Se conserva una de cada `thin` iteraciones tras el burn-in.
        seed: Semilla del generador.
        tau_prior: Prior Gamma de tau.
    """
    iterations: int = config.MCMC_ITERACIONES
    burn_in: int = config.MCMC_BURN_IN
    thin: int = config.MCMC_THIN
    seed: int = config.SEMILLA_POR_DEFECTO
    tau_prior: TauPrior = field(default_factory=TauPrior)

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError(f"El número de iteraciones debe ser positivo ({self.iterations})")
        if not 0 <= self.burn_in < self.iterations:
            raise ConfigError(
                f"El burn-in debe estar en [0, iteraciones) (burn-in = {self.burn_in}, iteraciones = {self.iterations})"
            )
        if self.thin < 1:
            raise ConfigError(f"El thinning debe ser >= 1 ({self.thin})")
        if self.kept_draws < 1:
            raise ConfigError("La configuración no conserva ninguna muestra tras el burn-in")

    @property
    def kept_draws(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass(frozen=True, eq=False)
class McmcOutput:
    """
    Muestras conservadas y resúmenes puntuales.

    Attributes:
        gamma_samples: (draws, B).
        tau_samples: (draws,).
        acceptance_rate: Fracción de propuestas de bloque aceptadas.
        ess_tau: Tamaño muestral efectivo de tau.
        times: Punto medio de cada celda.
        median, lower95, upper95, mean: Resúmenes empíricos de gamma.
        mean_natural: Media empírica de exp(gamma).
        failures: Actualizaciones de bloque cuyo modo no se pudo calcular.
    """
    gamma_samples: np.ndarray
    tau_samples: np.ndarray
    acceptance_rate: float
    ess_tau: float
    times: np.ndarray
    median: np.ndarray
    lower95: np.ndarray
    upper95: np.ndarray
    mean: np.ndarray
    mean_natural: np.ndarray
    failures: int


@dataclass(frozen=True, eq=False)
class BlockUpdate:
    gamma: np.ndarray
    accepted: bool
    log_ratio: float
    mode: np.ndarray


def gibbs_tau(gamma, S: StructureMatrix, prior: TauPrior, rng: np.random.Generator) -> float:
    """
    Muestra tau de su condicional completa Gamma(alpha + rank/2, beta + γᵀSγ/2).

    Ejemplo:
        Con γ constante, rank 8 y alpha = beta = 0.001 la media es 4.001 / 0.001.
    """
    forma = prior.alpha + 0.5 * S.rank
    tasa = prior.beta + 0.5 * float(S.quadratic_form(gamma))
    return float(rng.gamma(forma, 1.0 / tasa))


def _log_objetivo(cells: LatentLikelihood, S: StructureMatrix, tau: float, gamma: np.ndarray) -> float:
    """log π(γ | tau, t) sin normalizar."""
    with np.errstate(over='ignore'):
        valor = float(cells.log_likelihood(gamma).value)
    return valor - 0.5 * tau * float(S.quadratic_form(gamma))


def _log_propuesta(S: StructureMatrix, tau: float, modo, gamma: np.ndarray) -> float:
    """log N(γ; γ*, H⁻¹) salvo la constante -(B/2) log 2π, común a ambos lados."""
    diferencia = gamma - modo.gamma_star
    cuadratica = tau * float(S.quadratic_form(diferencia)) + float(np.sum(modo.curvature * diferencia ** 2))
    return 0.5 * modo.precision_factor.log_det - 0.5 * cuadratica


def update_gamma_block(
    cells: LatentLikelihood,
    S: StructureMatrix,
    tau: float,
    current_gamma,
    rng: np.random.Generator,
    init=None
) -> BlockUpdate:
    """
    Paso de Metropolis de independencia para el bloque completo de gamma.

    La propuesta γ' = γ* + L⁻ᵀz, z ~ N(0, I), se acepta con probabilidad
    min(1, π(γ')q(γ) / (π(γ)q(γ'))). Con verosimilitud gaussiana la propuesta
    es la condicional exacta y el cociente es 1.

    Args:
        cells: Verosimilitud latente.
        S: Matriz de estructura.
        tau: Precisión actual.
        current_gamma: Estado actual.
        rng: Generador aleatorio.
        init: Punto de partida de Newton (por defecto el de cells).

    Returns:
        BlockUpdate: Nuevo estado, si se aceptó, el log-cociente y el modo usado.

    Raises:
        ModeFindingError: Si no se puede calcular el modo.
    """
    actual = np.asarray(current_gamma, dtype=float)
    modo = find_mode(cells, S, tau, init=init)
    propuesta = modo.gamma_star + tri_backsolve(modo.precision_factor, rng.standard_normal(S.dim))

    log_cociente = (
        _log_objetivo(cells, S, tau, propuesta) - _log_propuesta(S, tau, modo, propuesta)
        - _log_objetivo(cells, S, tau, actual) + _log_propuesta(S, tau, modo, actual)
    )
    if not math.isfinite(log_cociente):
        log_cociente = -math.inf
    aceptada = log_cociente >= 0 or rng.uniform() < math.exp(log_cociente)
    return BlockUpdate(
        gamma=propuesta if aceptada else actual,
        accepted=bool(aceptada),
        log_ratio=log_cociente,
        mode=modo.gamma_star
    )


def effective_sample_size(x) -> float:
    """
    ESS por el estimador de secuencia positiva inicial.

    Las autocorrelaciones se obtienen por FFT; se suman los pares
    Γ_k = ρ_{2k} + ρ_{2k+1} mientras sean positivos y ESS = n / (2 Σ Γ_k - 1).
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 4:
        return float(n)
    centrada = x - x.mean()
    varianza = float(np.dot(centrada, centrada)) / n
    if varianza <= 0:
        return float(n)

    espectro = np.fft.rfft(centrada, n=2 * n)
    autocov = np.fft.irfft(espectro * np.conj(espectro), n=2 * n)[:n] / n
    rho = autocov / autocov[0]

    suma = 0.0
    for k in range(n // 2):
        par = rho[2 * k] + rho[2 * k + 1]
        if par <= 0:
            break
        suma += par
    tiempo_integrado = max(2.0 * suma - 1.0, 1.0 / n)
    return float(n / tiempo_integrado)


def tau_discrepancy(grid: TauGrid, tau_samples) -> float:
    """
    Variación total entre la marginal INLA de log tau y el histograma MCMC.

    Cada punto de la rejilla representa el intervalo entre los puntos medios
    con sus vecinos (los extremos se extienden a ±inf).
    """
    log_tau = np.log(np.asarray(tau_samples, dtype=float))
    if len(log_tau) == 0:
        raise ValueError("Sin muestras de tau")
    medios = 0.5 * (grid.log_tau_values[:-1] + grid.log_tau_values[1:])
    intervalo = np.searchsorted(medios, log_tau, side='right')
    empirica = np.bincount(intervalo, minlength=len(grid)) / len(log_tau)
    return float(0.5 * np.sum(np.abs(empirica - grid.weights)))


def run_mcmc(cells: LatentLikelihood, mcmc_config: McmcConfig) -> McmcOutput:
    """
    Ejecuta la cadena alternando gibbs_tau y update_gamma_block.

    Args:
        cells: Verosimilitud latente.
        mcmc_config: Iteraciones, burn-in, thinning, semilla y prior.

    Returns:
        McmcOutput: (iterations - burn_in) // thin muestras y sus resúmenes.

    Raises:
        McmcAbortError: Si falla más del 1% de las actualizaciones de bloque.
    """
    rng = np.random.default_rng(mcmc_config.seed)
    S = structure_for(cells.midpoints)
    total = mcmc_config.kept_draws
    limite_fallos = config.MCMC_FRACCION_FALLOS_MAXIMA * mcmc_config.iterations
    aviso = max(1, mcmc_config.iterations // 10)

    muestras_gamma = np.empty((total, cells.dim))
    muestras_tau = np.empty(total)
    gamma = np.array(cells.initial_gamma(), dtype=float)
    modo_previo = None
    aceptadas = 0
    fallos = 0
    guardadas = 0
    inicio = time.perf_counter()

    for i in range(mcmc_config.iterations):
        tau = gibbs_tau(gamma, S, mcmc_config.tau_prior, rng)
        try:
            paso = update_gamma_block(cells, S, tau, gamma, rng, init=modo_previo)
            gamma = paso.gamma
            modo_previo = paso.mode
            aceptadas += paso.accepted
        except ModeFindingError as e:
            fallos += 1
            logging.debug(f"Iteración {i}: fallo en el modo con tau = {tau:.4g}: {e}")
            if fallos > limite_fallos:
                raise McmcAbortError(
                    f"Cadena abortada: {fallos} actualizaciones de bloque fallidas en {i + 1} iteraciones"
                )

        if i >= mcmc_config.burn_in and (i - mcmc_config.burn_in + 1) % mcmc_config.thin == 0:
            muestras_gamma[guardadas] = gamma
            muestras_tau[guardadas] = tau
            guardadas += 1

        if (i + 1) % aviso == 0:
            logging.info(
                f"MCMC {100 * (i + 1) // mcmc_config.iterations}%: "
                f"aceptación {aceptadas / (i + 1):.3f}, {time.perf_counter() - inicio:.1f} s"
            )

    tasa = aceptadas / mcmc_config.iterations
    if tasa < config.MCMC_ACEPTACION_SALUDABLE:
        logging.warning(f"Tasa de aceptación baja: {tasa:.3f}")
    ess = effective_sample_size(muestras_tau)
    logging.info(f"MCMC completado: {guardadas} muestras, aceptación {tasa:.3f}, ESS(tau) = {ess:.1f}")

    inferior, mediana, superior = np.quantile(
        muestras_gamma, [config.CUANTIL_INFERIOR, 0.5, config.CUANTIL_SUPERIOR], axis=0
    )
    with np.errstate(over='ignore'):
        media_natural = np.exp(muestras_gamma).mean(axis=0)

    return McmcOutput(
        gamma_samples=muestras_gamma,
        tau_samples=muestras_tau,
        acceptance_rate=tasa,
        ess_tau=ess,
        times=np.asarray(cells.midpoints, dtype=float),
        median=mediana,
        lower95=inferior,
        upper95=superior,
        mean=muestras_gamma.mean(axis=0),
        mean_natural=media_natural,
        failures=fallos
    )
