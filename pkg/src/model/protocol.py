"""
Vocabulario del protocolo de orquestación.

Constantes de mensaje, configuraciones (choice/action), marcadores de steps y
el tipo Buffer: una cola FIFO acotada e inmutable. Toda operación devuelve un
buffer nuevo; los estados del sistema se guardan en conjuntos hash.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple, Tuple

from src.core.errors import BufferEmpty, BufferFull, IllegalMessage, InvalidParams


class MessageConst(IntEnum):
    """Mensajes abstractos intercambiados en el modelo."""

    NIL = 0
    ORC_CHECK = 1
    ACK = 2
    ERROR = 3
    ORC_CHOICE = 4
    CHOICES = 5
    SERVICE_CHOICE = 6
    SKIP = 7
    ORC_STOP = 8
    ACTION = 9
    NOPAYLOAD = 10
    REQUEST = 11
    OFFER = 12
    TYPEOFFER = 13
    TYPEMATCH = 14
    ADDRESS = 15
    PORT = 16
    # Etiquetas de configuración enviadas en el chequeo
    DICTATORIAL = 17
    MAJORITARIAN = 18
    CENTRALISED = 19
    DISTRIBUTED = 20


class ChoiceKind(IntEnum):
    DICTATORIAL = 0
    MAJORITARIAN = 1


class ActionKind(IntEnum):
    CENTRALISED = 0
    DISTRIBUTED = 1


_CHOICE_SHORT = {"DICT": ChoiceKind.DICTATORIAL, "MAJ": ChoiceKind.MAJORITARIAN}
_ACTION_SHORT = {"CENT": ActionKind.CENTRALISED, "DIST": ActionKind.DISTRIBUTED}


class Configuration(NamedTuple):
    """Combinación de mecanismo de elección y modo de acción."""

    choice: ChoiceKind
    action: ActionKind

    @property
    def choice_tag(self) -> MessageConst:
        return MessageConst[self.choice.name]

    @property
    def action_tag(self) -> MessageConst:
        return MessageConst[self.action.name]

    @classmethod
    def parse(cls, text: str) -> "Configuration":
        """
        Parsea 'MAJ/DIST' (también acepta nombres largos).

        Raises:
            InvalidParams: Si el texto no nombra una configuración válida
        """
        try:
            choice, action = (p.strip().upper() for p in text.split("/"))
        except ValueError:
            raise InvalidParams(f"configuración inválida: {text!r}") from None
        # DICTATORIAL y CENTRALISED valen 0: no encadenar con `or`
        choice_kind = _CHOICE_SHORT.get(choice, ChoiceKind.__members__.get(choice))
        action_kind = _ACTION_SHORT.get(action, ActionKind.__members__.get(action))
        if choice_kind is None or action_kind is None:
            raise InvalidParams(f"configuración inválida: {text!r}")
        return cls(choice_kind, action_kind)

    @classmethod
    def all(cls) -> Tuple["Configuration", ...]:
        return tuple(cls(c, a) for c in ChoiceKind for a in ActionKind)

    def __str__(self) -> str:
        choice = "DICT" if self.choice is ChoiceKind.DICTATORIAL else "MAJ"
        action = "CENT" if self.action is ActionKind.CENTRALISED else "DIST"
        return f"{choice}/{action}"


class StepMarker(IntEnum):
    """Marcadores de fase escritos en el log de steps."""

    UNSET = 0
    ORC_CHECK = 1
    CENTRALISED_OFFER = 2
    CENTRALISED_MATCH = 3
    DISTRIBUTED_OFFER = 4
    DISTRIBUTED_MATCH = 5
    DICTATORIAL_CHOICE = 6
    MAJORITARIAN_CHOICE = 7
    ORC_STOP = 8


class Occupancy(NamedTuple):
    len: int
    available: int
    is_full: bool
    is_empty: bool


@dataclass(frozen=True, slots=True)
class Buffer:
    """Cola FIFO acotada con semántica de valor."""

    cells: Tuple[MessageConst, ...]
    capacity: int

    @classmethod
    def empty(cls, capacity: int) -> "Buffer":
        return cls((), capacity)

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def head(self) -> MessageConst:
        return self.cells[0] if self.cells else MessageConst.NIL

    @property
    def available(self) -> int:
        return self.capacity - len(self.cells)

    def __str__(self) -> str:
        return "[" + ",".join(m.name for m in self.cells) + "]"


def enqueue(b: Buffer, m: MessageConst) -> Buffer:
    """
    Añade m como elemento más reciente.

    Raises:
        IllegalMessage: Si m es NIL
        BufferFull: Si el buffer no tiene espacio
    """
    if m is MessageConst.NIL:
        raise IllegalMessage("NIL no se puede encolar")
    if len(b.cells) >= b.capacity:
        raise BufferFull(f"buffer lleno (capacidad {b.capacity})")
    return Buffer(b.cells + (m,), b.capacity)


def dequeue(b: Buffer) -> Tuple[MessageConst, Buffer]:
    """
    Extrae el elemento más antiguo.

    Raises:
        BufferEmpty: Si el buffer está vacío
    """
    if not b.cells:
        raise BufferEmpty("buffer vacío")
    return b.cells[0], Buffer(b.cells[1:], b.capacity)


def occupancy(b: Buffer) -> Occupancy:
    n = len(b.cells)
    available = b.capacity - n
    return Occupancy(n, available, available == 0, n == 0)


def config_compatible(s: Configuration, o: Configuration) -> bool:
    return s.choice == o.choice and s.action == o.action


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "MessageConst",
    "ChoiceKind",
    "ActionKind",
    "Configuration",
    "StepMarker",
    "Occupancy",
    "Buffer",
    "enqueue",
    "dequeue",
    "occupancy",
    "config_compatible",
]
