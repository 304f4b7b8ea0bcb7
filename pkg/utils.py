"""
Módulo de utilidades compartidas.

Contiene funciones auxiliares utilizadas por múltiples módulos del sistema:
configuración de logging, formato numérico y lectura de listas en banderas.
"""

import logging
from typing import List, Tuple

import config
from exceptions import ConfigError


def parsear_pares_muestreo(texto: str) -> List[Tuple[float, int]]:
    """
    Convierte un calendario de muestreo (ej. "0:50,1.5:50") en pares (edad, cantidad).
    
    Args:
        texto: Pares edad:cantidad separados por comas.
    
    Returns:
        List[Tuple[float, int]]: Pares (edad, cantidad) en el orden dado.
    
    Raises:
        ConfigError: Si algún par no tiene el formato edad:cantidad.
    
    Ejemplo:
        >>> parsear_pares_muestreo("0:3, 1.5:2")
        [(0.0, 3), (1.5, 2)]
    """
    pares = []
    for trozo in texto.split(','):
        trozo = trozo.strip()
        if not trozo:
            continue
        partes = trozo.split(':')
        if len(partes) != 2:
            raise ConfigError(f"Par de muestreo inválido '{trozo}' (se esperaba edad:cantidad)")
        try:
            edad = float(partes[0])
            cantidad = int(partes[1])
        except ValueError:
            raise ConfigError(f"Par de muestreo inválido '{trozo}' (se esperaba edad:cantidad)")
        pares.append((edad, cantidad))
    if not pares:
        raise ConfigError("El calendario de muestreo está vacío")
    return pares


def parsear_lista_reales(texto: str, nombre: str) -> List[float]:
    """
    Convierte una lista separada por comas (ej. "0.5,1,2") en reales.
    
    Args:
        texto: Valores separados por comas.
        nombre: Nombre de la bandera, para los mensajes de error.
    
    Returns:
        List[float]: Los valores leídos.
    """
    try:
        return [float(v) for v in texto.split(',') if v.strip()]
    except ValueError:
        raise ConfigError(f"Lista de números inválida en --{nombre}: '{texto}'")


def formatear_numero(valor: float) -> str:
    """
    Formatea un real con los dígitos necesarios para leerlo de vuelta sin pérdida.
    
    Ejemplo:
        >>> formatear_numero(0.1)
        '0.10000000000000001'
    """
    return format(float(valor), f'.{config.DIGITOS_CSV}g')


def formatear_tiempo(segundos: float) -> str:
    """
    Convierte segundos de reloj a un formato legible.
    
    Args:
        segundos: Tiempo de pared en segundos.
    
    Returns:
        str: String formateado con la duración legible.
    
    Ejemplo:
        >>> formatear_tiempo(0.25)
        '0.250 segundo(s)'
        >>> formatear_tiempo(125)
        '2 minuto(s) y 5 segundo(s)'
    """
    if segundos < 60:
        return f"{segundos:.3f} segundo(s)"
    
    minutos = int(segundos // 60)
    segundos_restantes = int(segundos % 60)
    
    if minutos < 60:
        if segundos_restantes > 0:
            return f"{minutos} minuto(s) y {segundos_restantes} segundo(s)"
        return f"{minutos} minuto(s)"
    
    horas = minutos // 60
    minutos_restantes = minutos % 60
    if minutos_restantes > 0:
        return f"{horas} hora(s) y {minutos_restantes} minuto(s)"
    return f"{horas} hora(s)"


def configurar_logging(nivel: int = logging.INFO) -> None:
    """
    Configura el sistema de logging para mostrar información clara.
    
    Establece el formato de los mensajes de log con fecha, nivel y mensaje.
    Los mensajes van a stderr; stdout queda libre para los datos.
    """
    logging.basicConfig(
        level=nivel,
        format='%(asctime)s - %(levelname)s - %(message)s',
        force=True
    )
