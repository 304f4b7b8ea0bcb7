"""
Interfaz de línea de comandos.

Comandos:
    simulate  Simula una genealogía bajo un escenario de N_e(t)
    infer     Inferencia INLA sobre una genealogía Newick
    mcmc      Inferencia MCMC de referencia
    compare   Ejecuta INLA y MCMC sobre la misma genealogía y los compara

La configuración se resuelve en orden: valores por defecto < archivo JSON
(--config) < banderas de la línea de comandos.

Códigos de salida: 0 éxito, 1 fallo en tiempo de ejecución, 2 error de uso o
de configuración.
"""

import sys
import json
import argparse
import logging
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import config
from exceptions import ConfigError, TrajectoryError
from inla import InferenceOptions, TauPrior
from mcmc import McmcConfig
from orchestrator import Orchestrator
from trajectories import TrajectorySpec, scenario
from utils import configurar_logging, parsear_lista_reales, parsear_pares_muestreo

COMANDOS = ("simulate", "infer", "mcmc", "compare")
MUESTRAS_POR_DEFECTO = 100


@dataclass(frozen=True)
class RunConfig:
    """Configuración completa y validada de una ejecución."""
    command: str
    input: Optional[Path] = None
    out: Optional[Path] = None
    model: str = config.MODELO_POR_DEFECTO
    grid_size: int = config.TAMAÑO_REJILLA_POR_DEFECTO
    strategy: str = config.ESTRATEGIA_POR_DEFECTO
    scenario: str = config.ESCENARIO_POR_DEFECTO
    n: Optional[int] = None
    sampling: Optional[Tuple[Tuple[float, int], ...]] = None
    boundaries: Optional[Tuple[float, ...]] = None
    values: Optional[Tuple[float, ...]] = None
    seed: int = config.SEMILLA_POR_DEFECTO
    iterations: int = config.MCMC_ITERACIONES
    burn_in: int = config.MCMC_BURN_IN
    thin: int = config.MCMC_THIN
    tau_alpha: float = config.TAU_PRIOR_ALFA
    tau_beta: float = config.TAU_PRIOR_BETA
    format: str = config.FORMATO_POR_DEFECTO
    natural_scale: bool = False
    verbose: bool = False
    quiet: bool = False

    def __post_init__(self):
        if self.command not in COMANDOS:
            raise ConfigError(f"Comando desconocido: '{self.command}'")
        _validar_opcion("model", self.model, config.MODELOS)
        _validar_opcion("strategy", self.strategy, config.ESTRATEGIAS)
        _validar_opcion("scenario", self.scenario, config.ESCENARIOS)
        _validar_opcion("format", self.format, config.FORMATOS)
        if self.model == "rggp" and self.grid_size < 2:
            raise ConfigError(f"El modelo rggp necesita --grid-size >= 2 (recibido {self.grid_size})")
        if not (self.tau_alpha > 0 and self.tau_beta > 0):
            raise ConfigError("--tau-alpha y --tau-beta deben ser positivos")
        if self.verbose and self.quiet:
            raise ConfigError("--verbose y --quiet son incompatibles")

        if self.command == "simulate":
            self._validar_simulacion()
        else:
            if self.input is None:
                raise ConfigError(f"El comando {self.command} necesita --input")
            if self.out is None:
                raise ConfigError(f"El comando {self.command} necesita --out")
            if self.command == "compare" and self.format != "csv":
                raise ConfigError("El comando compare sólo escribe CSV")
            if self.command in ("mcmc", "compare"):
                self.mcmc_config()

    def _validar_simulacion(self) -> None:
        calendario = self.schedule()
        total = sum(c for _, c in calendario)
        if total < 2:
            raise ConfigError(f"simulate necesita n >= 2 muestras (recibido {total})")
        if not any(edad == 0 and c > 0 for edad, c in calendario):
            raise ConfigError("simulate necesita al menos una muestra en edad 0")
        if any(edad < 0 or c < 0 for edad, c in calendario):
            raise ConfigError("El calendario de muestreo tiene edades o cantidades negativas")
        if self.n is not None and self.sampling is not None and total != self.n:
            raise ConfigError(f"--n = {self.n} no coincide con el calendario de muestreo ({total} muestras)")
        if self.scenario == "custom":
            if not self.values:
                raise ConfigError("El escenario custom necesita --values (y --boundaries si hay más de un tramo)")
            if len(self.values) != len(self.boundaries or ()) + 1:
                raise ConfigError("El escenario custom necesita un valor más que límites")
        self.trajectory()

    def schedule(self) -> List[Tuple[float, int]]:
        """Calendario de muestreo efectivo: --sampling o n muestras en edad 0."""
        if self.sampling is not None:
            return list(self.sampling)
        return [(0.0, MUESTRAS_POR_DEFECTO if self.n is None else self.n)]

    def trajectory(self) -> TrajectorySpec:
        """Trayectoria del escenario; los errores de parámetros se reportan como de configuración."""
        try:
            if self.scenario == "custom":
                return TrajectorySpec.piecewise_constant(self.boundaries or (), self.values)
            return scenario(self.scenario)
        except TrajectoryError as e:
            raise ConfigError(str(e))

    def tau_prior(self) -> TauPrior:
        return TauPrior(alpha=self.tau_alpha, beta=self.tau_beta)

    def inference_options(self) -> InferenceOptions:
        return InferenceOptions(strategy=self.strategy, tau_prior=self.tau_prior())

    def mcmc_config(self) -> McmcConfig:
        return McmcConfig(
            iterations=self.iterations,
            burn_in=self.burn_in,
            thin=self.thin,
            seed=self.seed,
            tau_prior=self.tau_prior()
        )

    @property
    def nivel_logging(self) -> int:
        if self.verbose:
            return logging.DEBUG
        if self.quiet:
            return logging.WARNING
        return logging.INFO


def _validar_opcion(nombre: str, valor: str, opciones: Sequence[str]) -> None:
    if valor not in opciones:
        raise ConfigError(f"Valor inválido para {nombre}: '{valor}' (opciones: {', '.join(opciones)})")


def construir_parser() -> argparse.ArgumentParser:
    """Parser con un subcomando por operación; todas las banderas valen None si faltan."""
    parser = argparse.ArgumentParser(
        prog="phylodyn",
        description="Estimación de N_e(t) a partir de genealogías con INLA y MCMC"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    comun = argparse.ArgumentParser(add_help=False)
    comun.add_argument("--config", type=Path, help="Archivo JSON con valores de las banderas")
    comun.add_argument("--out", type=Path, help="Archivo de salida")
    comun.add_argument("--seed", type=int)
    registro = comun.add_mutually_exclusive_group()
    registro.add_argument("--verbose", action="store_true", default=None)
    registro.add_argument("--quiet", action="store_true", default=None)

    simulate = subparsers.add_parser("simulate", parents=[comun], help="Simula una genealogía")
    simulate.add_argument("--scenario", choices=config.ESCENARIOS)
    simulate.add_argument("--n", type=int)
    simulate.add_argument("--sampling", help="Pares edad:cantidad, ej. 0:50,1.5:50")
    simulate.add_argument("--boundaries", help="Límites del escenario custom, ej. 0.5,1.5")
    simulate.add_argument("--values", help="Valores de N_e del escenario custom, ej. 1,5,1")

    inferencia = argparse.ArgumentParser(add_help=False)
    inferencia.add_argument("--input", type=Path, help="Genealogía en Newick")
    inferencia.add_argument("--model", choices=config.MODELOS)
    inferencia.add_argument("--grid-size", type=int, dest="grid_size")
    inferencia.add_argument("--tau-alpha", type=float, dest="tau_alpha")
    inferencia.add_argument("--tau-beta", type=float, dest="tau_beta")
    inferencia.add_argument("--natural-scale", action="store_true", default=None, dest="natural_scale")

    cadena = argparse.ArgumentParser(add_help=False)
    cadena.add_argument("--iterations", type=int)
    cadena.add_argument("--burn-in", type=int, dest="burn_in")
    cadena.add_argument("--thin", type=int)

    infer = subparsers.add_parser("infer", parents=[comun, inferencia], help="Inferencia INLA")
    infer.add_argument("--strategy", choices=config.ESTRATEGIAS)
    infer.add_argument("--format", choices=config.FORMATOS)

    mcmc = subparsers.add_parser("mcmc", parents=[comun, inferencia, cadena], help="Inferencia MCMC")
    mcmc.add_argument("--format", choices=config.FORMATOS)

    compare = subparsers.add_parser("compare", parents=[comun, inferencia, cadena], help="Compara INLA y MCMC")
    compare.add_argument("--strategy", choices=config.ESTRATEGIAS)
    return parser


def _leer_archivo_config(ruta: Path) -> Dict:
    """Lee el JSON de --config; las claves admiten guiones o guiones bajos."""
    try:
        documento = json.loads(Path(ruta).read_text(encoding='utf-8'))
    except FileNotFoundError:
        raise ConfigError(f"No existe el archivo de configuración: {ruta}")
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Archivo de configuración inválido {ruta}: {e}")
    if not isinstance(documento, dict):
        raise ConfigError("El archivo de configuración debe contener un objeto JSON")

    validos = {f.name for f in fields(RunConfig)} - {"command"}
    valores = {}
    for clave, valor in documento.items():
        nombre = clave.lstrip('-').replace('-', '_')
        if nombre not in validos:
            raise ConfigError(f"Clave desconocida en el archivo de configuración: '{clave}'")
        valores[nombre] = valor
    return valores


def _normalizar_valores(valores: Dict) -> Dict:
    """Convierte textos de banderas y valores JSON a los tipos de RunConfig."""
    resultado = dict(valores)
    for clave in ("input", "out"):
        if resultado.get(clave) is not None:
            resultado[clave] = Path(resultado[clave])
    muestreo = resultado.get("sampling")
    if isinstance(muestreo, str):
        resultado["sampling"] = tuple(parsear_pares_muestreo(muestreo))
    elif muestreo is not None:
        try:
            resultado["sampling"] = tuple((float(e), int(c)) for e, c in muestreo)
        except (TypeError, ValueError):
            raise ConfigError(f"Calendario de muestreo inválido: {muestreo!r}")
    for clave in ("boundaries", "values"):
        lista = resultado.get(clave)
        if isinstance(lista, str):
            resultado[clave] = tuple(parsear_lista_reales(lista, clave))
        elif lista is not None:
            try:
                resultado[clave] = tuple(float(v) for v in lista)
            except (TypeError, ValueError):
                raise ConfigError(f"Lista de números inválida en {clave}: {lista!r}")
    for clave in ("grid_size", "n", "seed", "iterations", "burn_in", "thin"):
        if resultado.get(clave) is not None:
            valor = resultado[clave]
            if isinstance(valor, bool) or not isinstance(valor, (int, float)) or int(valor) != valor:
                raise ConfigError(f"{clave} debe ser un entero (recibido {valor!r})")
            resultado[clave] = int(valor)
    return resultado


def construir_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """
    Lee la línea de comandos y devuelve la configuración fusionada.

    Raises:
        ConfigError: Valores inválidos o archivo de configuración ilegible.
        SystemExit: Errores de sintaxis detectados por argparse (código 2).
    """
    argumentos = vars(construir_parser().parse_args(argv))
    comando = argumentos.pop("command")
    ruta_config = argumentos.pop("config", None)

    valores = _leer_archivo_config(ruta_config) if ruta_config else {}
    valores.update({k: v for k, v in argumentos.items() if v is not None})
    valores = _normalizar_valores(valores)
    try:
        return RunConfig(command=comando, **valores)
    except TypeError as e:
        raise ConfigError(f"Configuración inválida: {e}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Punto de entrada de la línea de comandos.

    Returns:
        int: Código de salida (0, 1 o 2).
    """
    try:
        run_config = construir_config(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else 2
    except ConfigError as e:
        configurar_logging()
        logging.error(f"ERROR DE CONFIGURACIÓN: {e}")
        return 2

    configurar_logging(run_config.nivel_logging)
    return Orchestrator(run_config).ejecutar()


if __name__ == "__main__":
    sys.exit(main())
