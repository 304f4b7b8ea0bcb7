"""
Archivo de configuración centralizado para el sistema de estimación filodinámica.

Este módulo contiene todas las constantes numéricas y valores por defecto
utilizados por el parser de genealogías, el simulador, el motor INLA,
el muestreador MCMC y la línea de comandos.
"""

# ==============================================================================
# CONFIGURACIÓN DE GENEALOGÍAS
# ==============================================================================

# Las puntas con edad menor que este valor se consideran muestreadas en el presente
TOLERANCIA_EDAD_PUNTA = 1e-8

# Tolerancia para la condición estricta edad(padre) > edad(hijo)
TOLERANCIA_ORDEN_EDADES = 1e-12

# Dígitos significativos al escribir longitudes de rama en Newick
DIGITOS_NEWICK = 12

# ==============================================================================
# CONFIGURACIÓN DEL PRIOR DE PRECISIÓN
# ==============================================================================

# Prior Gamma(alfa, beta) sobre la precisión tau (convención forma-tasa)
TAU_PRIOR_ALFA = 0.001
TAU_PRIOR_BETA = 0.001

# ==============================================================================
# CONFIGURACIÓN DE NEWTON-RAPHSON
# ==============================================================================

# Tolerancia relativa: max|∇ψ| < TOL * (1 + tau * max S_ii + max c)
NEWTON_TOLERANCIA_GRADIENTE = 1e-8
# Paso de Newton despreciable: max|d| < TOL_PASO * (1 + max|γ|)
NEWTON_TOLERANCIA_PASO = 1e-12
NEWTON_MAX_ITERACIONES = 50
NEWTON_MAX_MITADES_PASO = 30

# ==============================================================================
# CONFIGURACIÓN DE LA EXPLORACIÓN DE TAU
# ==============================================================================

# Búsqueda inicial del modo en theta = log(tau)
THETA_INICIAL_MIN = -10.0
THETA_INICIAL_MAX = 10.0
THETA_PASO_BUSQUEDA = 2.0
THETA_LIMITE_EXPANSION = 40.0  # El intervalo nunca se extiende más allá de +-40
THETA_TOLERANCIA_MODO = 1e-6

# Paso de la segunda diferencia centrada usada para estimar sigma_theta
THETA_PASO_HESSIANO = 0.1

# Rejilla: theta_modo +- j * (PASO * sigma_theta)
REJILLA_TAU_PASO = 0.5
REJILLA_TAU_CAIDA_MAXIMA = 5.0
REJILLA_TAU_MAX_PUNTOS_LADO = 35

# ==============================================================================
# CONFIGURACIÓN DE MARGINALES LATENTES
# ==============================================================================

# Estrategias disponibles para los marginales de gamma_i
ESTRATEGIAS = ("gaussian", "laplace")
ESTRATEGIA_POR_DEFECTO = "gaussian"

# Rejilla de la aproximación de Laplace: N puntos en gamma*_i +- ANCHO * sigma_i
LAPLACE_PUNTOS = 25
LAPLACE_ANCHO_SIGMAS = 4.0

# Subintervalos en los que se integra la corrección de Laplace
LAPLACE_SUBINTERVALOS = 160

# Celdas procesadas a la vez en la estrategia laplace (limita memoria)
LAPLACE_CELDAS_POR_BLOQUE = 32

# Tolerancia absoluta de la bisección de cuantiles sobre la mezcla
TOLERANCIA_CUANTIL = 1e-10

# Cuantiles reportados
CUANTIL_INFERIOR = 0.025
CUANTIL_SUPERIOR = 0.975

# ==============================================================================
# CONFIGURACIÓN DEL SIMULADOR
# ==============================================================================

# Tolerancia de la cuadratura para trayectorias sin forma cerrada
TOLERANCIA_CUADRATURA = 1e-10

# Punto de quiebre del escenario boom-bust
BOOMBUST_QUIEBRE = 0.5

# ==============================================================================
# CONFIGURACIÓN DE MCMC
# ==============================================================================

MCMC_ITERACIONES = 1_000_000
MCMC_BURN_IN = 100_000
MCMC_THIN = 100

# Fracción máxima de actualizaciones de bloque fallidas antes de abortar la cadena
MCMC_FRACCION_FALLOS_MAXIMA = 0.01

# Por debajo de esta tasa de aceptación se emite una advertencia
MCMC_ACEPTACION_SALUDABLE = 0.5

# ==============================================================================
# CONFIGURACIÓN DE LA LÍNEA DE COMANDOS
# ==============================================================================

MODELOS = ("cggp", "rggp")
MODELO_POR_DEFECTO = "cggp"
TAMAÑO_REJILLA_POR_DEFECTO = 100

ESCENARIOS = ("constant", "exponential", "boombust", "custom")
ESCENARIO_POR_DEFECTO = "constant"

FORMATOS = ("csv", "json")
FORMATO_POR_DEFECTO = "csv"

SEMILLA_POR_DEFECTO = 1

# Dígitos significativos en las salidas CSV/JSON (ida y vuelta exacta)
DIGITOS_CSV = 17
