"""
Módulo de genealogías.

Este módulo se encarga de:
- Leer genealogías en formato Newick (longitudes de rama obligatorias)
- Validar los invariantes de edades y topología
- Escribir genealogías en Newick con ida y vuelta estable
- Extraer la línea temporal de coalescencias y muestreos

Convención de edades: el tiempo corre hacia atrás desde la punta más
reciente, que tiene edad 0.
"""

import re
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

import config
from exceptions import GenealogyError, NewickError


_NUMERO = re.compile(r'[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?')
_CARACTERES_RESERVADOS = set("()[]:;,' \t\r\n")


@dataclass(frozen=True)
class Node:
    """Nodo de una genealogía: etiqueta opcional, edad, padre e hijos (0 o 2)."""
    label: Optional[str]
    age: float
    parent: Optional[int]
    children: Tuple[int, ...]

    @property
    def is_tip(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class Genealogy:
    """
    Árbol binario enraizado con edades en unidades de tiempo coalescente.

    La construcción valida todos los invariantes: hijos binarios, edades
    estrictamente crecientes hacia la raíz, una única raíz, conectividad
    y punta más reciente en edad 0.
    """
    nodes: Tuple[Node, ...]
    root: int
    n_tips: int

    def __post_init__(self):
        _validar_genealogia(self)

    def tips(self) -> List[int]:
        return [i for i, nodo in enumerate(self.nodes) if nodo.is_tip]

    def internal_nodes(self) -> List[int]:
        return [i for i, nodo in enumerate(self.nodes) if not nodo.is_tip]

    @property
    def height(self) -> float:
        """Edad de la raíz (TMRCA)."""
        return self.nodes[self.root].age

    @property
    def is_isochronous(self) -> bool:
        return all(self.nodes[i].age == 0.0 for i in self.tips())


@dataclass(frozen=True, eq=False)
class CoalescentData:
    """
    Línea temporal de una genealogía.

    Attributes:
        coal_ages: Edades de los n-1 nodos internos, estrictamente crecientes.
        sample_ages: Edades de las n puntas, ordenadas.
        n: Número de muestras.
    """
    coal_ages: np.ndarray
    sample_ages: np.ndarray
    n: int

    def __post_init__(self):
        coal = np.array(self.coal_ages, dtype=float)
        muestras = np.sort(np.array(self.sample_ages, dtype=float))
        coal.setflags(write=False)
        muestras.setflags(write=False)
        object.__setattr__(self, 'coal_ages', coal)
        object.__setattr__(self, 'sample_ages', muestras)
        _validar_linea_temporal(self)

    @property
    def tmrca(self) -> float:
        return float(self.coal_ages[-1])

    @property
    def is_isochronous(self) -> bool:
        return bool(np.all(self.sample_ages == 0.0))

    def lineage_count(self, t) -> np.ndarray:
        """
        Número de linajes k(t) = #{muestras con edad <= t} - #{coalescencias con edad <= t}.

        Args:
            t: Edad o vector de edades.

        Returns:
            np.ndarray: k(t) evaluado en cada edad.
        """
        t = np.asarray(t, dtype=float)
        muestreados = np.searchsorted(self.sample_ages, t, side='right')
        coalescidos = np.searchsorted(self.coal_ages, t, side='right')
        return muestreados - coalescidos

    def lineages_at_coalescences(self) -> np.ndarray:
        """Número de linajes justo antes de cada coalescencia, k(t⁻)."""
        muestreados = np.searchsorted(self.sample_ages, self.coal_ages, side='left')
        coalescidos = np.arange(len(self.coal_ages))
        return muestreados - coalescidos


# ==============================================================================
# LECTURA DE NEWICK
# ==============================================================================

class _NodoCrudo:
    """Nodo intermedio del parser antes de calcular edades."""

    __slots__ = ('padre', 'hijos', 'etiqueta', 'longitud', 'posicion')

    def __init__(self, padre: Optional[int], posicion: int):
        self.padre = padre
        self.hijos: List[int] = []
        self.etiqueta: Optional[str] = None
        self.longitud: Optional[float] = None
        self.posicion = posicion


def parse_newick(text: str) -> Genealogy:
    """
    Lee una genealogía desde un texto Newick.

    Las edades se calculan como profundidad máxima de las puntas menos la
    profundidad de cada nodo; las puntas con edad menor que 1e-8 se fijan en 0.
    Las etiquetas de nodos internos se aceptan y se ignoran.

    Args:
        text: Un único árbol enraizado terminado en ';', con longitud en
            todas las ramas salvo la de la raíz.

    Returns:
        Genealogy: La genealogía validada.

    Raises:
        NewickError: Error de sintaxis (con posición), nodo no binario,
            longitud de rama negativa o ausente.

    Ejemplo:
        >>> g = parse_newick("((A:2,B:1):1,C:3);")
        >>> sorted(n.age for n in g.nodes if not n.is_tip)
        [2.0, 3.0]
    """
    crudos = _leer_nodos_crudos(text)
    _validar_nodos_crudos(crudos, len(text))

    # Los nodos se crean en preorden: el padre siempre tiene índice menor
    profundidad = np.zeros(len(crudos))
    for i in range(1, len(crudos)):
        profundidad[i] = profundidad[crudos[i].padre] + crudos[i].longitud

    es_punta = np.array([not nodo.hijos for nodo in crudos])
    edades = profundidad[es_punta].max() - profundidad
    edades[es_punta & (edades < config.TOLERANCIA_EDAD_PUNTA)] = 0.0

    nodos = tuple(
        Node(
            label=nodo.etiqueta if not nodo.hijos else None,
            age=float(edades[i]),
            parent=nodo.padre,
            children=tuple(nodo.hijos)
        )
        for i, nodo in enumerate(crudos)
    )
    genealogia = Genealogy(nodes=nodos, root=0, n_tips=int(es_punta.sum()))
    logging.debug(f"Newick leído: {genealogia.n_tips} puntas, altura {genealogia.height:.6g}")
    return genealogia


def _leer_nodos_crudos(texto: str) -> List[_NodoCrudo]:
    """Recorre el texto de forma iterativa y construye los nodos en preorden."""
    nodos = [_NodoCrudo(None, 0)]
    actual = 0
    fresco = True  # El nodo actual no tiene aún hijos, etiqueta ni longitud
    i = 0
    terminado = False

    while i < len(texto):
        c = texto[i]

        if c.isspace():
            i += 1
            continue

        if terminado:
            raise NewickError("Texto inesperado después de ';'", i)

        if c == '[':
            cierre = texto.find(']', i)
            if cierre < 0:
                raise NewickError("Comentario sin cerrar", i)
            i = cierre + 1
            continue

        if c == '(':
            if not fresco:
                raise NewickError("'(' inesperado", i)
            nodos.append(_NodoCrudo(actual, i))
            nodos[actual].hijos.append(len(nodos) - 1)
            actual = len(nodos) - 1
            i += 1

        elif c == ',':
            padre = nodos[actual].padre
            if padre is None:
                raise NewickError("',' fuera de un grupo entre paréntesis", i)
            nodos.append(_NodoCrudo(padre, i + 1))
            nodos[padre].hijos.append(len(nodos) - 1)
            actual = len(nodos) - 1
            fresco = True
            i += 1

        elif c == ')':
            padre = nodos[actual].padre
            if padre is None:
                raise NewickError("')' sin '(' correspondiente", i)
            actual = padre
            fresco = False
            i += 1

        elif c == ':':
            if nodos[actual].longitud is not None:
                raise NewickError("Longitud de rama duplicada", i)
            coincidencia = _NUMERO.match(texto, i + 1)
            if not coincidencia:
                raise NewickError("Longitud de rama inválida", i + 1)
            longitud = float(coincidencia.group())
            if longitud < 0:
                raise NewickError(f"Longitud de rama negativa ({longitud})", i + 1)
            nodos[actual].longitud = longitud
            fresco = False
            i = coincidencia.end()

        elif c == ';':
            if actual != 0:
                raise NewickError("Paréntesis sin cerrar antes de ';'", i)
            terminado = True
            i += 1

        else:
            if nodos[actual].etiqueta is not None or nodos[actual].longitud is not None:
                raise NewickError(f"Carácter inesperado '{c}'", i)
            etiqueta, i = _leer_etiqueta(texto, i)
            nodos[actual].etiqueta = etiqueta
            fresco = False

    if not terminado:
        raise NewickError("Falta el ';' final", len(texto))
    return nodos


def _leer_etiqueta(texto: str, inicio: int) -> Tuple[str, int]:
    """Lee una etiqueta entre comillas simples o sin comillas."""
    if texto[inicio] == "'":
        partes = []
        i = inicio + 1
        while i < len(texto):
            if texto[i] == "'":
                if i + 1 < len(texto) and texto[i + 1] == "'":
                    partes.append("'")
                    i += 2
                    continue
                return ''.join(partes), i + 1
            partes.append(texto[i])
            i += 1
        raise NewickError("Etiqueta entre comillas sin cerrar", inicio)

    i = inicio
    while i < len(texto) and texto[i] not in _CARACTERES_RESERVADOS:
        i += 1
    if i == inicio:
        raise NewickError(f"Carácter inesperado '{texto[inicio]}'", inicio)
    return texto[inicio:i], i


def _validar_nodos_crudos(nodos: List[_NodoCrudo], largo: int) -> None:
    """Comprueba aridad y longitudes de rama de los nodos leídos."""
    if not nodos[0].hijos:
        raise NewickError("El árbol necesita al menos 2 puntas", 0)
    for i, nodo in enumerate(nodos):
        if len(nodo.hijos) not in (0, 2):
            raise NewickError(f"Nodo no binario con {len(nodo.hijos)} hijo(s)", nodo.posicion)
        if i > 0 and nodo.longitud is None:
            raise NewickError("Falta la longitud de rama", nodo.posicion)


# ==============================================================================
# ESCRITURA DE NEWICK
# ==============================================================================

def serialize_newick(g: Genealogy) -> str:
    """
    Escribe una genealogía en formato Newick.

    La longitud de cada rama es edad(padre) - edad(hijo), con 12 dígitos
    significativos. El orden de los hijos se conserva.

    Args:
        g: Genealogía válida.

    Returns:
        str: Texto Newick terminado en ';'.

    Ejemplo:
        >>> serialize_newick(parse_newick("(A:1,B:1);"))
        '(A:1,B:1);'
    """
    textos = {}
    for i in _postorden(g):
        nodo = g.nodes[i]
        if nodo.is_tip:
            texto = _escribir_etiqueta(nodo.label)
        else:
            texto = '(' + ','.join(textos.pop(h) for h in nodo.children) + ')'
        if nodo.parent is not None:
            longitud = g.nodes[nodo.parent].age - nodo.age
            texto += ':' + format(longitud, f'.{config.DIGITOS_NEWICK}g')
        textos[i] = texto
    return textos[g.root] + ';'


def _escribir_etiqueta(etiqueta: Optional[str]) -> str:
    if not etiqueta:
        return ''
    if any(c in _CARACTERES_RESERVADOS for c in etiqueta):
        return "'" + etiqueta.replace("'", "''") + "'"
    return etiqueta


def _postorden(g: Genealogy) -> List[int]:
    """Orden de visita hijos-antes-que-padre, sin recursión."""
    orden = []
    pila = [g.root]
    while pila:
        i = pila.pop()
        orden.append(i)
        pila.extend(reversed(g.nodes[i].children))
    return orden[::-1]


# ==============================================================================
# LÍNEA TEMPORAL
# ==============================================================================

def extract_coalescent_data(g: Genealogy) -> CoalescentData:
    """
    Extrae las edades de coalescencia y de muestreo de una genealogía.

    Args:
        g: Genealogía válida.

    Returns:
        CoalescentData: Edades de coalescencia ordenadas y edades de las puntas.

    Raises:
        GenealogyError: Si dos coalescencias tienen exactamente la misma edad
            o si los linajes se agotan antes de la raíz.

    Ejemplo:
        >>> d = extract_coalescent_data(parse_newick("((A:2,B:1):1,C:3);"))
        >>> d.coal_ages.tolist(), d.sample_ages.tolist()
        ([2.0, 3.0], [0.0, 0.0, 1.0])
    """
    coal = np.sort([g.nodes[i].age for i in g.internal_nodes()])
    empates = np.flatnonzero(np.diff(coal) <= 0)
    if len(empates):
        raise GenealogyError(
            f"Genealogía degenerada: dos coalescencias con edad {coal[empates[0]]!r}"
        )
    muestras = np.sort([g.nodes[i].age for i in g.tips()])
    return CoalescentData(coal_ages=coal, sample_ages=muestras, n=g.n_tips)


def _validar_linea_temporal(d: CoalescentData) -> None:
    if d.n < 2:
        raise GenealogyError(f"Se necesitan al menos 2 muestras (n = {d.n})")
    if len(d.sample_ages) != d.n or len(d.coal_ages) != d.n - 1:
        raise GenealogyError(
            f"Se esperaban {d.n} muestras y {d.n - 1} coalescencias; "
            f"hay {len(d.sample_ages)} y {len(d.coal_ages)}"
        )
    if np.any(np.diff(d.coal_ages) <= 0):
        raise GenealogyError("Las edades de coalescencia deben ser estrictamente crecientes")
    if np.any(d.sample_ages < 0):
        raise GenealogyError("Las edades de muestreo deben ser no negativas")
    if d.coal_ages[-1] <= d.sample_ages[-1]:
        raise GenealogyError("La raíz debe ser más antigua que todas las muestras")
    previos = d.lineages_at_coalescences()
    agotados = np.flatnonzero(previos < 2)
    if len(agotados):
        raise GenealogyError(
            f"Los linajes se agotan antes de la raíz (edad {d.coal_ages[agotados[0]]!r})"
        )


def _validar_genealogia(g: Genealogy) -> None:
    nodos = g.nodes
    if not 0 <= g.root < len(nodos) or nodos[g.root].parent is not None:
        raise GenealogyError("La raíz no puede tener padre")
    raices = [i for i, nodo in enumerate(nodos) if nodo.parent is None]
    if len(raices) != 1:
        raise GenealogyError(f"Se esperaba exactamente una raíz; hay {len(raices)}")

    for i, nodo in enumerate(nodos):
        if len(nodo.children) not in (0, 2):
            raise GenealogyError(f"El nodo {i} tiene {len(nodo.children)} hijo(s)")
        if nodo.age < 0:
            raise GenealogyError(f"El nodo {i} tiene edad negativa")
        for h in nodo.children:
            if nodos[h].parent != i:
                raise GenealogyError(f"El nodo {h} no apunta a su padre {i}")
            if nodo.age - nodos[h].age <= config.TOLERANCIA_ORDEN_EDADES:
                raise GenealogyError(
                    f"edad(padre) debe ser mayor que edad(hijo) en la rama {i} -> {h}"
                )

    visitados = 0
    pila = [g.root]
    while pila:
        i = pila.pop()
        visitados += 1
        if visitados > len(nodos):
            raise GenealogyError("La genealogía contiene un ciclo")
        pila.extend(nodos[i].children)
    if visitados != len(nodos):
        raise GenealogyError("La genealogía no es conexa")

    puntas = [nodo for nodo in nodos if nodo.is_tip]
    if len(puntas) != g.n_tips or g.n_tips < 2:
        raise GenealogyError(f"Número de puntas inválido ({len(puntas)}, declarado {g.n_tips})")
    if min(nodo.age for nodo in puntas) > config.TOLERANCIA_EDAD_PUNTA:
        raise GenealogyError("La punta más reciente debe tener edad 0")
