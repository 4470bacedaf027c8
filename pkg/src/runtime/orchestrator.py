"""
Orquestador de referencia sobre conexiones TCP reales.

Conecta con cada servicio, ejecuta el chequeo de configuración y recorre el
contrato: resuelve las elecciones (dictatorial o mayoritaria), ejecuta las
acciones (centralizadas o distribuidas) y termina con ORC_STOP.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import asyncio
import logging
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core import CONNECT_RETRY, SOCKET_DEADLINE
from src.core.errors import HandshakeMismatch, InvalidRuntimeArgument, ProtocolViolation
from src.model.protocol import ActionKind, ChoiceKind, Configuration, MessageConst
from src.runtime.contract import STOP_LABEL, ContractAutomaton, Label
from src.runtime.frames import Payload, close_writer, connect, drain_unread, read_frame, render, write_frame

logger = logging.getLogger(__name__)

M = MessageConst


@dataclass(frozen=True)
class Endpoint:
    host: str
    port: int

    @classmethod
    def parse(cls, text: str) -> "Endpoint":
        host, sep, port = text.strip().rpartition(":")
        if not sep or not port.isdigit():
            raise InvalidRuntimeArgument(f"endpoint inválido {text!r}: se esperaba host:puerto")
        return cls(host or "127.0.0.1", int(port))

    def __str__(self) -> str:
        return f"{self.host}:{self.port}"


# ============================================================================
# POLÍTICA DE ELECCIÓN
# ============================================================================

class ChoicePolicy:
    """
    Decisión del orquestador dictatorial.

    scripted: consume etiquetas en orden; agotado el guion elige STOP si
    está disponible y si no, uniforme con semilla.
    uniform: uniforme con semilla sobre los candidatos.
    """

    def __init__(self, script: Optional[Sequence[str]] = None, seed: int = 0):
        self.scripted = script is not None
        self._script = deque(script or ())
        self._rng = np.random.Generator(np.random.Philox(seed))

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "ChoicePolicy":
        """'uniform' o 'scripted:<l1>|<l2>|...'."""
        text = text.strip()
        if text == "uniform":
            return cls(None, seed)
        if text.startswith("scripted:"):
            labels = [l.strip() for l in text[len("scripted:"):].split("|") if l.strip()]
            return cls(labels, seed)
        raise InvalidRuntimeArgument(f"política desconocida {text!r}: use 'uniform' o 'scripted:<l1>|<l2>'")

    def choose(self, candidates: Sequence[str]) -> str:
        while self._script:
            label = self._script.popleft()
            if label in candidates:
                return label
            logger.warning(f"Etiqueta guionada {label} no está entre {list(candidates)}; se descarta")
        if self.scripted and STOP_LABEL in candidates:
            return STOP_LABEL
        return candidates[int(self._rng.integers(len(candidates)))]


def majority(votes: Sequence[str]) -> str:
    """Etiqueta más votada; empates hacia la lexicográficamente menor."""
    counts = Counter(votes)
    best = max(counts.values())
    return min(label for label, c in counts.items() if c == best)


# ============================================================================
# REPORTE
# ============================================================================

@dataclass(frozen=True)
class ChoiceRecord:
    state: str
    candidates: Tuple[str, ...]
    chosen: str
    votes: Tuple[str, ...] = ()


@dataclass(frozen=True)
class PeerSession:
    requester: int
    offerer: int
    address: str


@dataclass
class OrchestrationReport:
    config: Configuration
    labels: List[str] = field(default_factory=list)
    choices: List[ChoiceRecord] = field(default_factory=list)
    peer_sessions: List[PeerSession] = field(default_factory=list)
    payloads: List[Tuple[str, Payload, Payload]] = field(default_factory=list)
    unread: Dict[int, int] = field(default_factory=dict)
    final_state: Optional[str] = None
    stopped: bool = False
    duration: float = 0.0

    def to_record(self) -> Dict[str, object]:
        return {
            "config": str(self.config),
            "labels": " ".join(self.labels) or "-",
            "choices": " ".join(c.chosen for c in self.choices) or "-",
            "peer_sessions": len(self.peer_sessions),
            "final_state": self.final_state,
            "stopped": self.stopped,
            "unread": ",".join(f"{j}:{n}" for j, n in sorted(self.unread.items())),
            "duration": f"{self.duration:.3f}",
        }


# ============================================================================
# ENLACE CON UN SERVICIO
# ============================================================================

class _Link:
    def __init__(self, index: int, endpoint: Endpoint, reader, writer, deadline: float):
        self.index = index
        self.endpoint = endpoint
        self.reader = reader
        self.writer = writer
        self.deadline = deadline

    async def send(self, payload: Payload) -> None:
        logger.debug(f"   orc -> svc{self.index}: {render(payload)}")
        await write_frame(self.writer, payload)

    async def recv(self) -> Payload:
        payload = await read_frame(self.reader, self.deadline)
        logger.debug(f"   svc{self.index} -> orc: {render(payload)}")
        return payload

    async def expect(self, *tokens: str) -> str:
        payload = await self.recv()
        if payload not in tokens:
            raise ProtocolViolation(
                f"svc{self.index}: se esperaba {' o '.join(tokens)}, llegó {render(payload)}"
            )
        return payload


class _Orchestration:
    def __init__(
        self,
        contract: ContractAutomaton,
        links: List[_Link],
        config: Configuration,
        policy: ChoicePolicy,
    ):
        self.contract = contract
        self.links = links
        self.config = config
        self.policy = policy
        self.report = OrchestrationReport(config)

    async def handshake(self) -> None:
        for link in self.links:
            await link.send(M.ORC_CHECK.name)
            await link.send(self.config.choice_tag.name)
            await link.send(self.config.action_tag.name)
            reply = await link.expect(M.ACK.name, M.ERROR.name)
            if reply == M.ERROR.name:
                raise HandshakeMismatch(link.index)
            logger.info(f"✓ svc{link.index} acepta la configuración {self.config}")

    async def choose(self, state: str, candidates: List[str]) -> str:
        for link in self.links:
            await link.send(M.ORC_CHOICE.name)
        if self.config.choice is ChoiceKind.DICTATORIAL:
            chosen = self.policy.choose(candidates)
            self.report.choices.append(ChoiceRecord(state, tuple(candidates), chosen))
            return chosen

        involved = self.contract.involved(state)
        serialized = ";".join(candidates)
        for link in self.links:
            await link.send(serialized if link.index in involved else M.SKIP.name)
        votes = []
        for link in self.links:
            if link.index not in involved:
                continue
            vote = await link.recv()
            if vote not in candidates:
                raise ProtocolViolation(f"svc{link.index} votó {render(vote)}, que no es candidato")
            votes.append(vote)
        chosen = majority(votes)
        self.report.choices.append(ChoiceRecord(state, tuple(candidates), chosen, tuple(votes)))
        logger.info(f"   Votación en {state}: {votes} -> {chosen}")
        return chosen

    async def execute(self, label: Label) -> None:
        shape = label.shape
        action = label.action
        centralised = self.config.action is ActionKind.CENTRALISED
        if shape == "request":
            raise ProtocolViolation(f"la etiqueta {label} es un request sin match: no es ejecutable")

        if shape == "offer":
            offerer = self.links[label.offerer]
            await offerer.send(action)
            if not centralised:
                await offerer.send(M.TYPEOFFER.name)
            await offerer.send(None)
            offer = await offerer.recv()
            self.report.payloads.append((str(label), None, offer))
            return

        requester = self.links[label.requester]
        offerer = self.links[label.offerer]
        if centralised:
            await requester.send(action)
            await requester.send(None)
            request = await requester.recv()
            await offerer.send(action)
            await offerer.send(request)
            offer = await offerer.recv()
            await requester.send(offer)
            self.report.payloads.append((str(label), request, offer))
            return

        await offerer.send(action)
        await requester.send(action)
        await offerer.send(M.TYPEMATCH.name)
        port = await offerer.recv()
        if port is None or not port.isdigit():
            raise ProtocolViolation(f"svc{offerer.index} anunció un puerto inválido: {render(port)}")
        address = f"{offerer.endpoint.host}:{port}"
        await requester.send(address)
        await requester.send(port)
        await requester.expect(M.ACK.name)
        self.report.peer_sessions.append(PeerSession(requester.index, offerer.index, address))

    async def run(self) -> None:
        await self.handshake()
        state = self.contract.initial
        while True:
            candidates = self.contract.candidates(state)
            if not candidates:
                raise ProtocolViolation(f"el estado {state} no es final y no tiene salidas")
            chosen = candidates[0] if len(candidates) == 1 else await self.choose(state, candidates)
            if chosen == STOP_LABEL:
                break
            transition = next(t for t in self.contract.outgoing(state) if str(t.label) == chosen)
            logger.info(f"   {state} --{chosen}--> {transition.target}")
            await self.execute(transition.label)
            self.report.labels.append(chosen)
            state = transition.target
        for link in self.links:
            await link.send(M.ORC_STOP.name)
        self.report.final_state = state
        self.report.stopped = True


async def run_orchestrator(
    contract: ContractAutomaton,
    endpoints: Sequence[Endpoint],
    config: Configuration,
    policy: Optional[ChoicePolicy] = None,
    seed: int = 0,
    deadline: float = SOCKET_DEADLINE,
    connect_window: float = CONNECT_RETRY,
) -> OrchestrationReport:
    """
    Ejecuta una sesión de orquestación completa.

    Args:
        contract: Orquestación a ejecutar (rank == número de endpoints)
        endpoints: Dirección de cada servicio, en el orden del contrato
        config: Configuración (elección, acción) del orquestador
        policy: Política dictatorial (por defecto uniforme con seed)
        deadline: Plazo por lectura en segundos

    Returns:
        OrchestrationReport con etiquetas, elecciones y bytes sin leer

    Raises:
        HandshakeMismatch: Un servicio respondió ERROR; la orquestación no empieza
        ProtocolViolation: Trama inesperada
        PeerTimeout: Un servicio no respondió a tiempo
    """
    if contract.rank != len(endpoints):
        raise InvalidRuntimeArgument(f"el contrato tiene rank {contract.rank} y hay {len(endpoints)} endpoints")
    policy = policy or ChoicePolicy(None, seed)
    started = time.perf_counter()
    links: List[_Link] = []
    logger.info(f"Orquestando {len(endpoints)} servicios con {config}")
    try:
        for j, endpoint in enumerate(endpoints):
            reader, writer = await connect(endpoint.host, endpoint.port, connect_window)
            links.append(_Link(j, endpoint, reader, writer, deadline))
        orchestration = _Orchestration(contract, links, config, policy)
        await orchestration.run()
        report = orchestration.report
        for link in links:
            if link.writer.can_write_eof():
                link.writer.write_eof()
        drained = await asyncio.gather(*(drain_unread(link.reader, deadline) for link in links))
        report.unread = {link.index: n for link, n in zip(links, drained)}
        report.duration = time.perf_counter() - started
        logger.info(f"✓ Orquestación terminada: {len(report.labels)} etiquetas, estado final {report.final_state}")
        return report
    except Exception as e:
        logger.error(f"✗ Orquestación abortada: {e}")
        raise
    finally:
        for link in links:
            await close_writer(link.writer)


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "Endpoint",
    "ChoicePolicy",
    "majority",
    "ChoiceRecord",
    "PeerSession",
    "OrchestrationReport",
    "run_orchestrator",
]
