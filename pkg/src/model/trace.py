"""
Trazas del modelo: secuencias de instancias disparadas.

Formato de texto, una línea por instancia:

    <seq> <proceso> <arista> [params=k=v,...] [marker=svc0:ORC_CHECK] [t=1.2345]

Las líneas que empiezan por '#' son comentarios. Toda traza se puede
reproducir con replay() contra enabled()/fire().

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from src.core.errors import NotEnabled, TraceFormatError
from src.model.params import SystemParams
from src.model.semantics import enabled, fire, initial_state, same_instance
from src.model.state import ParamValue, Process, SystemState, TransitionInstance, owner_name

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TraceStep:
    instance: TransitionInstance
    state: SystemState
    time: Optional[float] = None


@dataclass
class Trace:
    """Estado inicial más los pasos disparados (cada uno con su estado destino)."""

    initial: SystemState
    steps: List[TraceStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def final(self) -> SystemState:
        return self.steps[-1].state if self.steps else self.initial

    @property
    def states(self) -> List[SystemState]:
        return [self.initial] + [s.state for s in self.steps]

    @property
    def instances(self) -> List[TransitionInstance]:
        return [s.instance for s in self.steps]

    def append(self, instance: TransitionInstance, state: SystemState, time: Optional[float] = None) -> None:
        self.steps.append(TraceStep(instance, state, time))

    def source_of(self, position: int) -> SystemState:
        """Estado desde el que se disparó el paso position."""
        return self.initial if position == 0 else self.steps[position - 1].state


# ============================================================================
# FORMATO DE TEXTO
# ============================================================================

def _new_markers(before: SystemState, after: SystemState) -> List[str]:
    return [f"{owner_name(o)}:{m.name}" for o, m in after.steps[len(before.steps):]]


def format_trace(trace: Trace, header: Sequence[str] = ()) -> str:
    """Serializa la traza (con comentarios de cabecera opcionales)."""
    lines = [f"# {h}" for h in header]
    previous = trace.initial
    for seq, step in enumerate(trace.steps):
        parts = [str(seq), str(step.instance.process), step.instance.edge_id]
        if step.instance.nondet_params:
            parts.append("params=" + ",".join(f"{k}={v}" for k, v in step.instance.nondet_params))
        markers = _new_markers(previous, step.state)
        if markers:
            parts.append("marker=" + ",".join(markers))
        if step.time is not None:
            parts.append(f"t={step.time:.4f}")
        lines.append(" ".join(parts))
        previous = step.state
    return "\n".join(lines) + "\n"


TraceEntry = Tuple[Process, str, Tuple[Tuple[str, ParamValue], ...]]


def _param_value(text: str) -> ParamValue:
    return int(text) if text.lstrip("-").isdigit() else text


def parse_trace(text: str) -> List[TraceEntry]:
    """
    Parsea el formato de texto a entradas (proceso, arista, params).

    Raises:
        TraceFormatError: Línea mal formada o secuencia no consecutiva
    """
    entries: List[TraceEntry] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) < 3:
            raise TraceFormatError(f"línea {number}: se esperaba '<seq> <proceso> <arista>'")
        if not fields[0].isdigit() or int(fields[0]) != len(entries):
            raise TraceFormatError(f"línea {number}: número de secuencia {fields[0]!r} inesperado")
        try:
            process = Process.parse(fields[1])
        except ValueError as e:
            raise TraceFormatError(f"línea {number}: {e}") from None
        params: Tuple[Tuple[str, ParamValue], ...] = ()
        for extra in fields[3:]:
            if extra.startswith("params="):
                pairs = []
                for item in extra[len("params="):].split(","):
                    key, sep, value = item.partition("=")
                    if not sep:
                        raise TraceFormatError(f"línea {number}: parámetro mal formado {item!r}")
                    pairs.append((key, _param_value(value)))
                params = tuple(pairs)
            elif not extra.startswith(("marker=", "t=")):
                raise TraceFormatError(f"línea {number}: campo desconocido {extra!r}")
        entries.append((process, fields[2], params))
    return entries


# ============================================================================
# REPLAY
# ============================================================================

def replay(
    params: SystemParams,
    entries: Sequence[TraceEntry],
    steps_capacity: int = 0,
    start: Optional[SystemState] = None,
) -> Trace:
    """
    Reproduce entradas contra la semántica, comprobando que cada una esté habilitada.

    Args:
        params: Parámetros del sistema
        entries: (proceso, arista, params) en orden
        steps_capacity: Capacidad del log de steps del estado inicial
        start: Estado inicial alternativo

    Returns:
        Traza reconstruida con todos los estados

    Raises:
        NotEnabled: Si alguna entrada no está habilitada en su estado origen
    """
    state = start if start is not None else initial_state(params, steps_capacity)
    trace = Trace(state)
    for seq, (process, edge_id, nondet) in enumerate(entries):
        wanted = TransitionInstance(process, edge_id, tuple(nondet))
        match = next((t for t in enabled(state, params) if same_instance(t, wanted)), None)
        if match is None:
            raise NotEnabled(f"paso {seq}: {wanted} no está habilitado en {state.describe()}")
        state = fire(state, match)
        trace.append(match, state)
    return trace


def replay_trace(params: SystemParams, trace: Trace) -> Trace:
    """Reproduce una traza ya construida desde su propio estado inicial."""
    entries = [(i.process, i.edge_id, i.nondet_params) for i in trace.instances]
    return replay(params, entries, start=trace.initial)


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "TraceStep",
    "Trace",
    "TraceEntry",
    "format_trace",
    "parse_trace",
    "replay",
    "replay_trace",
]
