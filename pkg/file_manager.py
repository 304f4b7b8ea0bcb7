"""
Módulo para gestionar los archivos de entrada y salida.

Este módulo se encarga de:
- Leer genealogías en formato Newick
- Escribir genealogías simuladas (a archivo o a stdout)
- Escribir los resúmenes posteriores en CSV o JSON
- Escribir los archivos auxiliares de tau y de comparación
- Llevar la cuenta de los archivos escritos
"""

import csv
import io
import json
import sys
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from exceptions import ConfigError
from genealogy import Genealogy, parse_newick, serialize_newick
from utils import formatear_numero


COLUMNAS_RESUMEN = ("time", "median", "lower95", "upper95", "mean")
COLUMNAS_TAU = ("log_tau", "log_density", "weight")
COLUMNAS_MUESTRAS_TAU = ("draw", "tau")
COLUMNAS_COMPARACION = (
    "time", "inla_median", "inla_lo", "inla_hi", "mcmc_median", "mcmc_lo", "mcmc_hi"
)


def ruta_auxiliar(ruta: Path, sufijo: str) -> Path:
    """
    Ruta de un archivo auxiliar junto a la salida principal.

    Ejemplo:
        >>> ruta_auxiliar(Path("res.csv"), "tau.csv")
        PosixPath('res.tau.csv')
    """
    ruta = Path(ruta)
    return ruta.with_name(f"{ruta.stem}.{sufijo}")


class FileManager:
    """
    Clase encargada de leer y escribir los archivos del sistema.

    Todas las salidas numéricas usan 17 dígitos significativos para que cada
    campo se lea de vuelta exactamente, y saltos de línea CRLF (RFC 4180).
    """

    def __init__(self, estadisticas: Optional[Dict] = None):
        """
        Inicializa el gestor de archivos.

        Args:
            estadisticas: Diccionario compartido donde se anotan los archivos escritos.
        """
        self.estadisticas = estadisticas if estadisticas is not None else {}
        self.estadisticas.setdefault('archivos_escritos', [])

    def leer_genealogia(self, ruta: Path) -> Genealogy:
        """
        Lee la primera genealogía de un archivo Newick.

        Raises:
            ConfigError: Si el archivo no existe o no se puede leer como UTF-8.
            NewickError: Si el texto no es Newick válido.
        """
        ruta = Path(ruta)
        if not ruta.is_file():
            raise ConfigError(f"No existe el archivo de entrada: {ruta}")
        try:
            texto = ruta.read_text(encoding='utf-8')
        except (OSError, UnicodeDecodeError) as e:
            raise ConfigError(f"No se pudo leer {ruta}: {e}")
        genealogia = parse_newick(texto.strip())
        logging.info(f"✓ Genealogía leída de {ruta.name}: {genealogia.n_tips} puntas, altura {genealogia.height:.6g}")
        return genealogia

    def escribir_genealogia(self, genealogia: Genealogy, ruta: Optional[Path]) -> None:
        """Escribe la genealogía en Newick; sin ruta la envía a stdout."""
        texto = serialize_newick(genealogia) + "\n"
        if ruta is None:
            sys.stdout.write(texto)
            sys.stdout.flush()
            return
        self._escribir_texto(Path(ruta), texto)

    def escribir_csv(self, ruta: Path, columnas: Sequence[str], filas: Iterable[Sequence]) -> None:
        """
        Escribe un CSV con cabecera; los reales se formatean sin pérdida.

        Args:
            ruta: Archivo de salida.
            columnas: Nombres de la cabecera.
            filas: Filas de valores (enteros o reales).
        """
        buffer = io.StringIO()
        escritor = csv.writer(buffer, lineterminator="\r\n")
        escritor.writerow(columnas)
        for fila in filas:
            escritor.writerow([self._formatear_celda(v) for v in fila])
        self._escribir_texto(Path(ruta), buffer.getvalue())

    def escribir_json(self, ruta: Path, documento: Dict) -> None:
        """Escribe un documento JSON con claves en orden de inserción."""
        texto = json.dumps(documento, indent=2, ensure_ascii=False, allow_nan=True) + "\n"
        self._escribir_texto(Path(ruta), texto)

    def escribir_resumen(self, ruta: Path, columnas: Dict[str, np.ndarray]) -> None:
        """Resumen posterior por celda (columnas time, median, lower95, upper95, mean)."""
        self.escribir_csv(ruta, COLUMNAS_RESUMEN, zip(*(columnas[c] for c in COLUMNAS_RESUMEN)))

    def escribir_rejilla_tau(self, ruta: Path, log_tau, log_densidad, pesos) -> None:
        self.escribir_csv(ruta, COLUMNAS_TAU, zip(log_tau, log_densidad, pesos))

    def escribir_muestras_tau(self, ruta: Path, muestras) -> None:
        self.escribir_csv(ruta, COLUMNAS_MUESTRAS_TAU, enumerate(muestras))

    def escribir_comparacion(self, ruta: Path, columnas: Dict[str, np.ndarray]) -> None:
        self.escribir_csv(ruta, COLUMNAS_COMPARACION, zip(*(columnas[c] for c in COLUMNAS_COMPARACION)))

    @staticmethod
    def _formatear_celda(valor) -> str:
        if isinstance(valor, (bool, np.bool_)):
            return str(bool(valor)).lower()
        if isinstance(valor, (int, np.integer)):
            return str(int(valor))
        return formatear_numero(valor)

    def _escribir_texto(self, ruta: Path, texto: str) -> None:
        try:
            if ruta.parent and not ruta.parent.exists():
                ruta.parent.mkdir(parents=True, exist_ok=True)
            with open(ruta, 'w', encoding='utf-8', newline='') as f:
                f.write(texto)
        except OSError as e:
            raise ConfigError(f"No se pudo escribir {ruta}: {e}")
        self.estadisticas['archivos_escritos'].append(ruta)
        logging.info(f"✓ Archivo escrito: {ruta}")

    @property
    def archivos_escritos(self) -> List[Path]:
        return list(self.estadisticas['archivos_escritos'])
