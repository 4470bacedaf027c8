"""
Bindings y concretización de tests abstractos.

Archivo de bindings (también usado para los comportamientos de servicio):

    svc0_action[0] = "euro"
    svc0_offer[0] = NULL
    !coffee = "offer payload"

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, Optional, Union

from src.core import data_path
from src.core.errors import BindingsSyntaxError, UnboundPlaceholder
from src.runtime.conformance import ConformanceScript, parse_script, quote
from src.testgen.generator import PLACEHOLDER, AbstractTest

logger = logging.getLogger(__name__)

_BINDING = re.compile(r'^(?P<key>[^\s=]+)\s*=\s*(?P<value>NULL|"(?:[^"\\]|\\.)*")\s*(?:#.*)?$')
_ESCAPE = re.compile(r"\\(.)")


@dataclass
class Bindings:
    """Símbolo -> literal (None = NULL)."""

    values: Dict[str, Optional[str]] = field(default_factory=dict)

    def __contains__(self, symbol: str) -> bool:
        return self.lookup(symbol) is not _MISSING

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[str]:
        return iter(self.values)

    def lookup(self, symbol: str):
        """Busca `nombre[k]` y, si falta, el símbolo sin índice `nombre`."""
        if symbol in self.values:
            return self.values[symbol]
        base = symbol.split("[", 1)[0]
        if base != symbol and base in self.values:
            return self.values[base]
        return _MISSING

    def merged(self, other: "Bindings") -> "Bindings":
        """Copia con los valores de other encima."""
        return Bindings({**self.values, **other.values})

    def to_text(self) -> str:
        return "".join(
            f"{k} = {'NULL' if v is None else quote(v)}\n" for k, v in self.values.items()
        )


_MISSING = object()


def parse_bindings(text: str) -> Bindings:
    """
    Parsea `simbolo = "literal"` o `simbolo = NULL`, una por línea.

    Raises:
        BindingsSyntaxError: Línea mal formada, clave duplicada o literal con '%{'
    """
    bindings = Bindings()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        match = _BINDING.match(line)
        if match is None:
            raise BindingsSyntaxError(f"línea {number}: se esperaba 'simbolo = \"literal\"' o 'simbolo = NULL'")
        key, value = match.group("key"), match.group("value")
        if key in bindings.values:
            raise BindingsSyntaxError(f"línea {number}: símbolo duplicado {key!r}")
        literal = None if value == "NULL" else _ESCAPE.sub(r"\1", value[1:-1])
        if literal is not None and "%{" in literal:
            raise BindingsSyntaxError(f"línea {number}: un literal no puede contener '%{{'")
        bindings.values[key] = literal
    return bindings


def load_bindings(source: Union[str, Path]) -> Bindings:
    """Carga bindings desde un archivo o por nombre (data/bindings/<nombre>.bind)."""
    path = Path(source)
    if not path.exists():
        path = data_path("bindings", f"{source}.bind")
    if not path.exists():
        raise BindingsSyntaxError(f"no existe el archivo de bindings {source!r}")
    return parse_bindings(path.read_text(encoding="utf-8"))


# ============================================================================
# CONCRETIZACIÓN
# ============================================================================

def concretize_text(text: str, bindings: Bindings) -> str:
    """
    Sustitución textual de cada %{simbolo} por su literal entrecomillado o NULL.

    Raises:
        UnboundPlaceholder: Con la lista de símbolos sin valor
    """
    missing = [m.group(1) for m in PLACEHOLDER.finditer(text) if m.group(1) not in bindings]
    if missing:
        raise UnboundPlaceholder(missing)

    def repl(match: "re.Match") -> str:
        value = bindings.lookup(match.group(1))
        return "NULL" if value is None else quote(value)

    return PLACEHOLDER.sub(repl, text)


def concretize(test: AbstractTest, bindings: Bindings) -> ConformanceScript:
    """
    Convierte un test abstracto en un script de conformidad ejecutable.

    Args:
        test: Test abstracto (emit_abstract_test)
        bindings: Valores de todos sus placeholders

    Returns:
        ConformanceScript sin placeholders

    Raises:
        UnboundPlaceholder: Si falta algún símbolo
    """
    script = parse_script(concretize_text(test.to_text(), bindings))
    logger.info(f"✓ Test concretizado: {len(test.placeholders)} placeholders sustituidos")
    return script


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "Bindings",
    "parse_bindings",
    "load_bindings",
    "concretize_text",
    "concretize",
]
