"""
Servicio de referencia: lado servicio del protocolo sobre TCP.

Atiende una única sesión de orquestación siguiendo el autómata del servicio
del modelo. El comportamiento indica qué payload responder a cada acción:

    !euro = NULL                 # oferente de euro, responde con payload nulo
    ?coffee = "request payload"  # solicitante de coffee
    votes = "(!euro,-);STOP"     # votos guionados en elecciones mayoritarias

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import asyncio
import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from src.core import CONNECT_RETRY, SOCKET_DEADLINE, data_path
from src.core.errors import BindingsSyntaxError, PeerClosed, ProtocolViolation
from src.model.protocol import ActionKind, ChoiceKind, Configuration, MessageConst
from src.model.state import SvcLocation
from src.runtime.contract import STOP_LABEL
from src.runtime.frames import (
    Listener,
    Payload,
    close_writer,
    connect,
    drain_unread,
    read_frame,
    render,
    write_frame,
)
from src.testgen.concretize import parse_bindings

logger = logging.getLogger(__name__)

M = MessageConst
S = SvcLocation

_CONFIG_TAGS = {m.name: m for m in (M.DICTATORIAL, M.MAJORITARIAN, M.CENTRALISED, M.DISTRIBUTED)}


# ============================================================================
# COMPORTAMIENTO
# ============================================================================

@dataclass
class Behaviour:
    offers: Dict[str, Payload] = field(default_factory=dict)
    requests: Dict[str, Payload] = field(default_factory=dict)
    votes: List[str] = field(default_factory=list)

    def role(self, action: str) -> str:
        if action in self.offers:
            return "offer"
        if action in self.requests:
            return "request"
        raise ProtocolViolation(f"acción desconocida para este servicio: {action!r}")


def parse_behaviour(text: str) -> Behaviour:
    """
    Parsea un comportamiento (sintaxis de bindings).

    Raises:
        BindingsSyntaxError: Clave desconocida o acción a la vez ofrecida y pedida
    """
    behaviour = Behaviour()
    for key, value in parse_bindings(text).values.items():
        if key == "votes":
            behaviour.votes = [v for v in (value or "").split(";") if v]
        elif key.startswith("!") and len(key) > 1:
            behaviour.offers[key[1:]] = value
        elif key.startswith("?") and len(key) > 1:
            behaviour.requests[key[1:]] = value
        else:
            raise BindingsSyntaxError(f"clave de comportamiento desconocida: {key!r}")
    both = set(behaviour.offers) & set(behaviour.requests)
    if both:
        raise BindingsSyntaxError(f"acciones ofrecidas y pedidas a la vez: {sorted(both)}")
    return behaviour


def load_behaviour(source: Union[str, Path]) -> Behaviour:
    """Carga un comportamiento desde un archivo o por nombre (data/behaviours/<nombre>.beh)."""
    path = Path(source)
    if not path.exists():
        path = data_path("behaviours", f"{source}.beh")
    if not path.exists():
        raise BindingsSyntaxError(f"no existe el comportamiento {source!r}")
    return parse_behaviour(path.read_text(encoding="utf-8"))


# ============================================================================
# REPORTE
# ============================================================================

TranscriptEntry = Tuple[str, str, MessageConst, Payload]


@dataclass
class ServiceReport:
    config: Configuration
    port: int = 0
    status: str = "pending"  # terminated | error | aborted
    transcript: List[TranscriptEntry] = field(default_factory=list)
    final_location: SvcLocation = S.Ready
    unread: int = 0

    def events(self) -> List[Tuple[str, str, MessageConst]]:
        """Transcript sin payloads, en el formato de replay_service_projection."""
        return [(d, c, m) for d, c, m, _ in self.transcript]

    def to_record(self) -> Dict[str, object]:
        return {
            "config": str(self.config),
            "port": self.port,
            "status": self.status,
            "final_location": self.final_location.name,
            "messages": len(self.transcript),
            "unread": self.unread,
        }


# ============================================================================
# SESIÓN
# ============================================================================

class _Session:
    def __init__(self, reader, writer, behaviour: Behaviour, config: Configuration,
                 host: str, deadline: float, connect_window: float, report: ServiceReport):
        self.reader = reader
        self.writer = writer
        self.behaviour = behaviour
        self.votes = deque(behaviour.votes)
        self.config = config
        self.host = host
        self.deadline = deadline
        self.connect_window = connect_window
        self.report = report

    def _log(self, direction: str, channel: str, message: MessageConst, payload: Payload) -> None:
        self.report.transcript.append((direction, channel, message, payload))
        logger.debug(f"   [{self.report.port}] {direction} {channel} {message.name} {render(payload)}")

    async def recv(self, message: Optional[MessageConst] = None, reader=None, channel: str = "orc") -> Payload:
        payload = await read_frame(reader or self.reader, self.deadline)
        if message is not None:
            self._log("in", channel, message, payload)
        return payload

    async def expect(self, message: MessageConst, reader=None, channel: str = "orc") -> None:
        payload = await self.recv(None, reader, channel)
        if payload != message.name:
            raise ProtocolViolation(f"se esperaba {message.name}, llegó {render(payload)}")
        self._log("in", channel, message, payload)

    async def send(self, message: MessageConst, payload: Payload, writer=None, channel: str = "orc") -> None:
        await write_frame(writer or self.writer, payload)
        self._log("out", channel, message, payload)

    def vote(self, candidates: Sequence[str]) -> str:
        while self.votes:
            label = self.votes.popleft()
            if label in candidates:
                return label
        return STOP_LABEL if STOP_LABEL in candidates else min(candidates)

    async def run(self) -> S:
        loc = S.Ready
        action = ""
        while True:
            if loc is S.Ready:
                try:
                    frame = await self.recv()
                except PeerClosed:
                    logger.info("El orquestador cerró la sesión sin ORC_STOP")
                    self.report.status = "aborted"
                    return loc
                if frame == M.ORC_CHECK.name:
                    self._log("in", "orc", M.ORC_CHECK, frame)
                    loc = S.CheckingConfig
                elif frame == M.ORC_CHOICE.name:
                    self._log("in", "orc", M.ORC_CHOICE, frame)
                    if self.config.choice is ChoiceKind.MAJORITARIAN:
                        loc = S.AwaitChoicePayload
                elif frame == M.ORC_STOP.name:
                    self._log("in", "orc", M.ORC_STOP, frame)
                    return S.Terminated
                elif frame is None:
                    raise ProtocolViolation("trama nula en Ready")
                else:
                    action = frame
                    self._log("in", "orc", M.ACTION, frame)
                    loc = S.AwaitActionKind

            elif loc is S.CheckingConfig:
                tags = []
                for _ in range(2):
                    frame = await self.recv()
                    if frame not in _CONFIG_TAGS:
                        raise ProtocolViolation(f"etiqueta de configuración inválida: {render(frame)}")
                    self._log("in", "orc", _CONFIG_TAGS[frame], frame)
                    tags.append(_CONFIG_TAGS[frame])
                received = (tags[0], tags[1])
                if received == (self.config.choice_tag, self.config.action_tag):
                    await self.send(M.ACK, M.ACK.name)
                    loc = S.Ready
                else:
                    logger.warning(f"✗ Configuración incompatible: {tags[0].name}/{tags[1].name} vs {self.config}")
                    await self.send(M.ERROR, M.ERROR.name)
                    return S.Error

            elif loc is S.AwaitChoicePayload:
                frame = await self.recv()
                if frame == M.SKIP.name:
                    self._log("in", "orc", M.SKIP, frame)
                    loc = S.Ready
                elif frame is None:
                    raise ProtocolViolation("trama nula en lugar de CHOICES")
                else:
                    self._log("in", "orc", M.CHOICES, frame)
                    await self.send(M.SERVICE_CHOICE, self.vote(frame.split(";")))
                    loc = S.Ready

            elif loc is S.AwaitActionKind:
                loc = await self._action(action)

    async def _action(self, action: str) -> S:
        role = self.behaviour.role(action)
        frame = await self.recv()
        if self.config.action is ActionKind.CENTRALISED:
            if role == "offer":
                self._log("in", "orc", M.NOPAYLOAD if frame is None else M.REQUEST, frame)
                await self.send(M.OFFER, self.behaviour.offers[action])
                return S.Ready
            if frame is not None:
                raise ProtocolViolation(f"el solicitante esperaba SKIP nulo, llegó {render(frame)}")
            self._log("in", "orc", M.SKIP, frame)
            await self.send(M.REQUEST, self.behaviour.requests[action])
            await self.recv(M.OFFER)
            return S.Ready

        if role == "offer":
            if frame == M.TYPEOFFER.name:
                self._log("in", "orc", M.TYPEOFFER, frame)
                if await self.recv(M.NOPAYLOAD) is not None:
                    raise ProtocolViolation("se esperaba NOPAYLOAD nulo tras TYPEOFFER")
                await self.send(M.OFFER, self.behaviour.offers[action])
                return S.Ready
            if frame != M.TYPEMATCH.name:
                raise ProtocolViolation(f"se esperaba TYPEOFFER o TYPEMATCH, llegó {render(frame)}")
            self._log("in", "orc", M.TYPEMATCH, frame)
            await self._serve_peer(action)
            return S.Ready

        if frame is None or ":" not in frame:
            raise ProtocolViolation(f"se esperaba ADDRESS host:puerto, llegó {render(frame)}")
        self._log("in", "orc", M.ADDRESS, frame)
        host, _, _ = frame.rpartition(":")
        port = await self.recv(M.PORT)
        if port is None or not port.isdigit():
            raise ProtocolViolation(f"puerto inválido: {render(port)}")
        reader, writer = await connect(host, int(port), self.connect_window)
        try:
            await self.send(M.REQUEST, self.behaviour.requests[action], writer, "peer")
            await self.recv(M.OFFER, reader, "peer")
            await self.send(M.ACK, M.ACK.name, writer, "peer")
        finally:
            await close_writer(writer)
        await self.send(M.ACK, M.ACK.name)
        return S.Ready

    async def _serve_peer(self, action: str) -> None:
        listener = await Listener.open(self.host, 0)
        try:
            await self.send(M.PORT, str(listener.port))
            reader, writer = await listener.accept(self.deadline)
            await self.recv(M.REQUEST, reader, "peer")
            await self.send(M.OFFER, self.behaviour.offers[action], writer, "peer")
            await self.expect(M.ACK, reader, "peer")
            await close_writer(writer)
        finally:
            await listener.close()


async def run_service(
    port: int,
    behaviour: Behaviour,
    config: Configuration,
    host: str = "127.0.0.1",
    deadline: float = SOCKET_DEADLINE,
    accept_deadline: Optional[float] = None,
    connect_window: float = CONNECT_RETRY,
    on_listening: Optional[Callable[[int], None]] = None,
) -> ServiceReport:
    """
    Atiende una sesión de orquestación en host:port.

    Args:
        port: Puerto de escucha (0 = efímero)
        behaviour: Payloads por acción y votos guionados
        config: Configuración del servicio
        accept_deadline: Espera máxima por el orquestador (None = sin límite)
        on_listening: Callback con el puerto real una vez en escucha

    Returns:
        ServiceReport con el transcript de mensajes

    Raises:
        ProtocolViolation: Trama inesperada
        PeerTimeout: Sin tráfico dentro del plazo
    """
    listener = await Listener.open(host, port)
    report = ServiceReport(config, port=listener.port)
    if on_listening is not None:
        on_listening(listener.port)
    logger.info(f"Servicio {config} escuchando en {host}:{listener.port}")
    try:
        reader, writer = await listener.accept(accept_deadline)
        session = _Session(reader, writer, behaviour, config, host, deadline, connect_window, report)
        try:
            report.final_location = await session.run()
            if report.status == "pending":
                report.status = "terminated" if report.final_location is S.Terminated else "error"
            if writer.can_write_eof():
                writer.write_eof()
            report.unread = await drain_unread(reader, deadline)
        finally:
            await close_writer(writer)
    finally:
        await listener.close()
    logger.info(f"✓ Servicio en {report.port}: {report.status} tras {len(report.transcript)} mensajes")
    return report


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "Behaviour",
    "parse_behaviour",
    "load_behaviour",
    "TranscriptEntry",
    "ServiceReport",
    "run_service",
]
