"""
Autómatas de contrato: la orquestación que ejecuta el orquestador en vivo.

Formato de archivo:

    # alice paga, bob sirve café
    rank 2
    initial q0
    final q2
    q0 -> q1 : (!euro,-)
    q1 -> q2 : (?coffee,!coffee)
    q2 -> q2 : (!euro,-)

Cada etiqueta es un request (un ?a, resto -), un offer (un !a, resto -)
o un match (un ?a y un !a de la misma acción, resto -).

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

from src.core import data_path
from src.core.errors import IllegalLabel, ParseError

logger = logging.getLogger(__name__)

IDLE = "-"
STOP_LABEL = "STOP"

_ENTRY = re.compile(r"^[?!][A-Za-z_][A-Za-z0-9_]*$")
_STATE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_TRANSITION = re.compile(r"^(?P<src>\S+)\s*->\s*(?P<dst>\S+)\s*:\s*(?P<label>\(.*\))$")


@dataclass(frozen=True)
class Label:
    """Vector de acciones de un paso del contrato."""

    entries: Tuple[str, ...]

    @classmethod
    def parse(cls, text: str) -> "Label":
        text = text.strip()
        if not (text.startswith("(") and text.endswith(")")):
            raise ParseError(f"etiqueta sin paréntesis: {text!r}")
        entries = tuple(e.strip() for e in text[1:-1].split(","))
        for e in entries:
            if e != IDLE and not _ENTRY.match(e):
                raise ParseError(f"acción mal formada {e!r} en {text}")
        label = cls(entries)
        label.shape  # valida
        return label

    @property
    def requests(self) -> List[int]:
        return [k for k, e in enumerate(self.entries) if e.startswith("?")]

    @property
    def offers(self) -> List[int]:
        return [k for k, e in enumerate(self.entries) if e.startswith("!")]

    @property
    def shape(self) -> str:
        """request | offer | match."""
        requests, offers = self.requests, self.offers
        if len(requests) == 1 and not offers:
            return "request"
        if len(offers) == 1 and not requests:
            return "offer"
        if len(requests) == 1 and len(offers) == 1:
            if self.entries[requests[0]][1:] != self.entries[offers[0]][1:]:
                raise IllegalLabel(f"match entre acciones distintas: {self}")
            return "match"
        raise IllegalLabel(f"la etiqueta {self} no es request, offer ni match")

    @property
    def action(self) -> str:
        k = (self.offers or self.requests)[0]
        return self.entries[k][1:]

    @property
    def offerer(self) -> Optional[int]:
        return self.offers[0] if self.offers else None

    @property
    def requester(self) -> Optional[int]:
        return self.requests[0] if self.requests else None

    @property
    def involved(self) -> FrozenSet[int]:
        return frozenset(k for k, e in enumerate(self.entries) if e != IDLE)

    def __str__(self) -> str:
        return "(" + ",".join(self.entries) + ")"


@dataclass(frozen=True)
class ContractTransition:
    source: str
    label: Label
    target: str


@dataclass
class ContractAutomaton:
    rank: int
    initial: str
    finals: FrozenSet[str]
    transitions: List[ContractTransition] = field(default_factory=list)

    @property
    def states(self) -> FrozenSet[str]:
        found = {self.initial} | set(self.finals)
        for t in self.transitions:
            found.update((t.source, t.target))
        return frozenset(found)

    def outgoing(self, state: str) -> List[ContractTransition]:
        """Transiciones salientes en orden de archivo."""
        return [t for t in self.transitions if t.source == state]

    def candidates(self, state: str) -> List[str]:
        """Etiquetas elegibles en state; STOP al final si el estado es final."""
        labels = [str(t.label) for t in self.outgoing(state)]
        if state in self.finals:
            labels.append(STOP_LABEL)
        return labels

    def involved(self, state: str) -> FrozenSet[int]:
        """Servicios con acción no ociosa en alguna transición saliente."""
        out: set = set()
        for t in self.outgoing(state):
            out |= t.label.involved
        return frozenset(out)

    def accepts(self, labels: List[str]) -> bool:
        """True si la secuencia de etiquetas lleva del inicial a un estado final."""
        current = {self.initial}
        for text in labels:
            current = {t.target for s in current for t in self.outgoing(s) if str(t.label) == text}
            if not current:
                return False
        return bool(current & self.finals)


def parse_contract(text: str) -> ContractAutomaton:
    """
    Parsea y valida un contrato.

    Raises:
        ParseError: Estructura inválida o aridad incorrecta
        IllegalLabel: Etiqueta que no es request, offer ni match
    """
    rank: Optional[int] = None
    initial: Optional[str] = None
    finals: Dict[str, None] = {}
    transitions: List[ContractTransition] = []

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if keyword == "rank":
                if rank is not None or not rest.isdigit() or int(rest) < 1:
                    raise ParseError(f"rank inválido o repetido: {rest!r}")
                rank = int(rest)
            elif keyword == "initial":
                if initial is not None or not _STATE.match(rest):
                    raise ParseError(f"initial inválido o repetido: {rest!r}")
                initial = rest
            elif keyword == "final":
                names = rest.split()
                if not names or not all(_STATE.match(n) for n in names):
                    raise ParseError(f"final inválido: {rest!r}")
                finals.update(dict.fromkeys(names))
            else:
                match = _TRANSITION.match(line)
                if match is None:
                    raise ParseError(f"se esperaba '<origen> -> <destino> : (<acciones>)': {line!r}")
                src, dst = match.group("src"), match.group("dst")
                if not (_STATE.match(src) and _STATE.match(dst)):
                    raise ParseError(f"nombre de estado inválido en {line!r}")
                transitions.append(ContractTransition(src, Label.parse(match.group("label")), dst))
        except IllegalLabel as e:
            raise IllegalLabel(f"línea {number}: {e}") from None
        except ParseError as e:
            raise ParseError(f"línea {number}: {e}") from None

    if rank is None:
        raise ParseError("falta la línea 'rank'")
    if initial is None:
        raise ParseError("falta la línea 'initial'")
    for t in transitions:
        if len(t.label.entries) != rank:
            raise ParseError(f"la etiqueta {t.label} no tiene aridad {rank}")
    return ContractAutomaton(rank, initial, frozenset(finals), transitions)


def load_contract(source: Union[str, Path]) -> ContractAutomaton:
    """Carga un contrato desde un archivo o por nombre (data/contracts/<nombre>.contract)."""
    path = Path(source)
    if not path.exists():
        path = data_path("contracts", f"{source}.contract")
    if not path.exists():
        raise ParseError(f"no existe el contrato {source!r}")
    contract = parse_contract(path.read_text(encoding="utf-8"))
    logger.debug(f"Contrato {path.name}: rank {contract.rank}, {len(contract.transitions)} transiciones")
    return contract


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "IDLE",
    "STOP_LABEL",
    "Label",
    "ContractTransition",
    "ContractAutomaton",
    "parse_contract",
    "load_contract",
]
