"""
Aproximación gaussiana de la condicional completa y marginal de Laplace de tau.

Este módulo se encarga de:
- Localizar el modo gamma*(tau) de Pr(gamma | tau, t) por Newton-Raphson con
  reducción del paso a la mitad
- Construir la precisión tau*S + diag(c) de la aproximación gaussiana
- Evaluar el log-marginal no normalizado de tau

    log π̃(tau | t) = log L(γ*) + log Pr(γ* | tau) + log Pr(tau)
                     + (B/2) log 2π - (1/2) log det(tau S + diag(c))
"""

import math
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

import config
from exceptions import (
    ConfigError,
    ModeFindingError,
    NonConvergenceError,
    NotPositiveDefiniteError,
    SingularPrecisionError,
)
from gmrf import StructureMatrix, gmrf_logdensity
from likelihoods import LatentLikelihood
from tridiagonal import TriFactor, tri_cholesky, tri_solve


@dataclass(frozen=True)
class TauPrior:
    """Prior Gamma(alpha, beta) de tau en convención forma-tasa."""
    alpha: float = config.TAU_PRIOR_ALFA
    beta: float = config.TAU_PRIOR_BETA

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ConfigError(f"El prior de tau necesita alpha, beta > 0 (alpha = {self.alpha}, beta = {self.beta})")

    def logpdf(self, tau: float) -> float:
        return float(stats.gamma.logpdf(tau, a=self.alpha, scale=1.0 / self.beta))


@dataclass(frozen=True, eq=False)
class ModeResult:
    """
    Resultado de Newton-Raphson para un valor de tau.

    Attributes:
        gamma_star: Modo de Pr(gamma | tau, t).
        curvature: Vector c en el modo.
        precision_factor: Factor de tau*S + diag(c).
        log_likelihood: log L(gamma*).
        log_joint_at_mode: log L(gamma*) + log Pr(gamma* | tau).
        iterations: Iteraciones de Newton realizadas.
        converged: Siempre True en los resultados devueltos (la no convergencia lanza).
    """
    gamma_star: np.ndarray
    curvature: np.ndarray
    precision_factor: TriFactor
    log_likelihood: float
    log_joint_at_mode: float
    iterations: int
    converged: bool


@dataclass(frozen=True, eq=False)
class TauPosteriorPoint:
    log_density: float
    mode_result: ModeResult


def _factorizar(S: StructureMatrix, tau: float, curvatura: np.ndarray) -> TriFactor:
    return tri_cholesky(tau * S.diag + curvatura, tau * S.offdiag)


def find_mode(
    cells: LatentLikelihood,
    S: StructureMatrix,
    tau: float,
    init: Optional[np.ndarray] = None
) -> ModeResult:
    """
    Maximiza ψ(γ) = log L(γ) - (tau/2) γᵀSγ por Newton-Raphson.

    Cada paso resuelve (tau S + diag(c(γ))) d = ∇ψ(γ); si ψ no aumenta el paso
    se reduce a la mitad (hasta 30 veces). Converge cuando
    max|∇ψ| < 1e-8·(1 + tau·max S_ii + max c) o cuando el paso de Newton es
    despreciable frente a |γ|.

    Args:
        cells: Verosimilitud latente.
        S: Matriz de estructura.
        tau: Precisión del prior (> 0).
        init: Punto de partida; por defecto γ_j = log(ΣA / Σy).

    Returns:
        ModeResult: Modo, curvatura y factor de la precisión.

    Raises:
        SingularPrecisionError: Si ninguna celda tiene exposición.
        NonConvergenceError: Si no converge en 50 iteraciones.
    """
    if not tau > 0 or not math.isfinite(tau):
        raise ModeFindingError(f"La precisión debe ser positiva y finita (tau = {tau})")
    if cells.dim != S.dim:
        raise ModeFindingError(f"Dimensiones incompatibles: {cells.dim} celdas y estructura {S.dim}")
    if not np.any(cells.informative_mask()):
        raise SingularPrecisionError("Ninguna celda tiene exposición: tau*S + diag(c) es singular")

    gamma = np.array(cells.initial_gamma() if init is None else init, dtype=float)
    evaluacion = cells.log_likelihood(gamma)
    psi = float(evaluacion.value) - 0.5 * tau * float(S.quadratic_form(gamma))

    escala_prior = tau * float(np.max(S.diag)) if S.rank > 0 else 0.0
    for iteracion in range(config.NEWTON_MAX_ITERACIONES + 1):
        gradiente = evaluacion.gradient - tau * S.matvec(gamma)
        norma = float(np.max(np.abs(gradiente)))
        umbral = config.NEWTON_TOLERANCIA_GRADIENTE * (
            1.0 + escala_prior + float(np.max(evaluacion.curvature))
        )
        logging.debug(f"Newton tau={tau:.4g} iteración {iteracion}: ψ={psi:.10g}, max|∇ψ|={norma:.3e}")
        if norma < umbral:
            break

        try:
            factor = _factorizar(S, tau, evaluacion.curvature)
        except NotPositiveDefiniteError as e:
            raise SingularPrecisionError(f"Precisión de Newton singular: {e}")
        paso = tri_solve(factor, gradiente)
        # Con tau grande el gradiente queda en el nivel de redondeo de tau*S*γ
        if np.max(np.abs(paso)) < config.NEWTON_TOLERANCIA_PASO * (1.0 + np.max(np.abs(gamma))):
            break
        if iteracion == config.NEWTON_MAX_ITERACIONES:
            raise NonConvergenceError(iteracion, norma)

        escala = 1.0
        for _ in range(config.NEWTON_MAX_MITADES_PASO + 1):
            candidato = gamma + escala * paso
            with np.errstate(over='ignore'):
                evaluacion_candidato = cells.log_likelihood(candidato)
            psi_candidato = float(evaluacion_candidato.value) - 0.5 * tau * float(S.quadratic_form(candidato))
            if math.isfinite(psi_candidato) and psi_candidato >= psi - 1e-12 * (1.0 + abs(psi)):
                break
            escala *= 0.5
        else:
            raise NonConvergenceError(iteracion, norma)

        gamma, evaluacion, psi = candidato, evaluacion_candidato, psi_candidato

    factor = _factorizar(S, tau, evaluacion.curvature)
    gamma.setflags(write=False)
    return ModeResult(
        gamma_star=gamma,
        curvature=np.asarray(evaluacion.curvature),
        precision_factor=factor,
        log_likelihood=float(evaluacion.value),
        log_joint_at_mode=float(evaluacion.value) + gmrf_logdensity(S, tau, gamma),
        iterations=iteracion,
        converged=True
    )


def log_tau_posterior(
    cells: LatentLikelihood,
    S: StructureMatrix,
    tau_prior: TauPrior,
    tau: float
) -> TauPosteriorPoint:
    """
    Log-marginal no normalizado de tau por aproximación de Laplace.

    Args:
        cells: Verosimilitud latente.
        S: Matriz de estructura.
        tau_prior: Prior Gamma de tau.
        tau: Precisión (> 0).

    Returns:
        TauPosteriorPoint: log π̃(tau | t) (escala de tau) y el modo utilizado.
    """
    modo = find_mode(cells, S, tau)
    log_densidad = (
        modo.log_joint_at_mode
        + tau_prior.logpdf(tau)
        + 0.5 * S.dim * math.log(2.0 * math.pi)
        - 0.5 * modo.precision_factor.log_det
    )
    return TauPosteriorPoint(log_density=log_densidad, mode_result=modo)
