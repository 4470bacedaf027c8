"""
Tabla de anotaciones de test por arista del modelo.

Formato de archivo, una línea por comando emitido:

    <Plantilla>.<arista> ::= <texto>
    Svc.prefix ::= LISTEN %{svc$(svc.id)_port}

Varias líneas con la misma clave forman una sola emisión, en orden de
archivo. `$(var)` se interpola contra el estado origen del paso y
`%{simbolo}` queda como placeholder para la concretización.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from src.core import data_path
from src.core.errors import AnnotationSyntaxError, UnresolvedInterpolation
from src.model.semantics import declared_edges
from src.model.state import Process, SystemState

logger = logging.getLogger(__name__)

TEMPLATES = ("Orc", "Svc", "SocketTimeout")
HOOKS = ("prefix", "postfix")

_LINE = re.compile(r"^(?P<template>[A-Za-z]+)\.(?P<edge>[A-Za-z_0-9]+)\s*::=\s?(?P<text>.*)$")
_INTERPOLATION = re.compile(r"\$\(([^)]*)\)")


@dataclass
class AnnotationTable:
    """(plantilla, arista) -> líneas; más prefix/postfix por plantilla."""

    entries: Dict[Tuple[str, str], List[str]] = field(default_factory=dict)
    prefix: Dict[str, List[str]] = field(default_factory=dict)
    postfix: Dict[str, List[str]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def lines_for(self, template: str, edge_id: str) -> List[str]:
        return self.entries.get((template, edge_id), [])

    def is_empty(self) -> bool:
        return not self.entries and not self.prefix and not self.postfix


def parse_annotations(text: str) -> AnnotationTable:
    """
    Parsea una tabla de anotaciones.

    Raises:
        AnnotationSyntaxError: Línea mal formada, plantilla o arista no declarada
    """
    table = AnnotationTable()
    declared = declared_edges()
    for number, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        match = _LINE.match(raw.strip())
        if match is None:
            raise AnnotationSyntaxError(f"línea {number}: se esperaba '<Plantilla>.<arista> ::= <texto>'")
        template, edge, text_line = match.group("template"), match.group("edge"), match.group("text")
        if template not in TEMPLATES:
            raise AnnotationSyntaxError(f"línea {number}: plantilla desconocida {template!r}")
        if edge in HOOKS:
            getattr(table, edge).setdefault(template, []).append(text_line)
            continue
        if edge not in declared[template]:
            raise AnnotationSyntaxError(f"línea {number}: arista {template}.{edge} no declarada")
        table.entries.setdefault((template, edge), []).append(text_line)
    return table


def load_annotations(source: Union[str, Path] = "curated") -> AnnotationTable:
    """Carga una tabla desde un archivo o por nombre (data/annotations/<nombre>.ann)."""
    path = Path(source)
    if not path.exists():
        path = data_path("annotations", f"{source}.ann")
    if not path.exists():
        raise AnnotationSyntaxError(f"no existe la tabla de anotaciones {source!r}")
    table = parse_annotations(path.read_text(encoding="utf-8"))
    logger.debug(f"Tabla {path.name}: {len(table)} aristas anotadas")
    return table


# ============================================================================
# INTERPOLACIÓN
# ============================================================================

def _variable(state: SystemState, owner: Process, name: str) -> str:
    v = state.orc_vars
    if name == "step":
        return str(state.step)
    if name.startswith("orc."):
        attr = name[len("orc."):]
        if attr in ("i", "offerer", "requester", "involved"):
            return str(getattr(v, attr))
        if attr == "votes_pending":
            return str(v.votes_pending)
        if attr in ("conf.choice", "conf.action") and v.conf is not None:
            return getattr(v.conf, attr.split(".")[1]).name
    if name.startswith("svc.") and owner.kind == "svc":
        j = owner.index
        attr = name[len("svc."):]
        if attr == "id":
            return str(j)
        if attr == "d1":
            return state.svc_d1[j].name
        cfg = state.svc_cfg[j]
        if attr in ("cfg.choice", "cfg.action") and cfg is not None:
            return getattr(cfg, attr.split(".")[1]).name
    raise UnresolvedInterpolation(f"variable sin valor en {owner}: $({name})")


def interpolate(text: str, state: SystemState, owner: Process) -> str:
    """
    Sustituye cada $(var) por su valor en state.

    Raises:
        UnresolvedInterpolation: Variable desconocida o sin valor para el dueño
    """
    return _INTERPOLATION.sub(lambda m: _variable(state, owner, m.group(1).strip()), text)


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "TEMPLATES",
    "AnnotationTable",
    "parse_annotations",
    "load_annotations",
    "interpolate",
]
