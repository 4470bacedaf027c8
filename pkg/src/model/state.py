"""
Tipos del sistema compuesto: ubicaciones, estado inmutable e instancias de
transición.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

from dataclasses import dataclass, replace
from enum import Enum, IntEnum
from typing import NamedTuple, Optional, Tuple, Union

from src.model.protocol import Buffer, Configuration, MessageConst, StepMarker


# ============================================================================
# UBICACIONES
# ============================================================================

class DelayClass(Enum):
    COMMITTED = "committed"
    WRITE = "write"
    READ = "read"
    TIMEOUT_FIRE = "timeout_fire"


class OrcLocation(IntEnum):
    Initial = 0
    CheckCompatibility = 1
    AwaitCheckReply = 2
    Start = 3
    NoChoice = 4
    AfterChoice = 5
    BroadcastChoice = 6
    SelectInvolved = 7
    SendChoices = 8
    AwaitVotes = 9
    ActionSelect = 10
    CentralisedOffer = 11
    CentralisedOfferPayload = 12
    AwaitOffer = 13
    CentralisedMatch = 14
    CentralisedMatchSkip = 15
    CentralisedMatchAwaitRequest = 16
    CentralisedMatchForward = 17
    CentralisedMatchForwardRequest = 18
    CentralisedMatchAwaitOffer = 19
    CentralisedMatchReturnOffer = 20
    DistributedOffer = 21
    DistributedOfferType = 22
    DistributedOfferPayload = 23
    DistributedSetup = 24
    DistributedSetupRequester = 25
    DistributedSetupType = 26
    AwaitPort = 27
    ForwardAddress = 28
    ForwardPort = 29
    AwaitAck = 30
    Stop = 31
    Terminated = 32
    Error = 33
    Timeout = 34


class SvcLocation(IntEnum):
    Ready = 0
    CheckingConfig = 1
    ReplyAck = 2
    ReplyError = 3
    AwaitChoicePayload = 4
    Voting = 5
    AwaitActionKind = 6
    Offering = 7
    Requesting = 8
    CentralisedRequesterAwaitOffer = 9
    DistOffererAwaitNoPayload = 10
    DistOffering = 11
    DistOffererSendPort = 12
    DistOffererAwaitRequest = 13
    DistOffererReplyOffer = 14
    Done = 15
    DistRequesterAwaitPort = 16
    DistRequesterSendRequest = 17
    DistRequesterAwaitOffer = 18
    DistRequesterAckPeer = 19
    DistRequesterAckOrc = 20
    Terminated = 21
    Error = 22
    Timeout = 23


class TimerLocation(IntEnum):
    Idle = 0
    Timeout = 1


_C, _W, _R = DelayClass.COMMITTED, DelayClass.WRITE, DelayClass.READ

# Clase base de cada ubicación; None = sin aristas salientes
ORC_LOCATION_CLASS = {
    OrcLocation.Initial: _C,
    OrcLocation.CheckCompatibility: _W,
    OrcLocation.AwaitCheckReply: _R,
    OrcLocation.Start: _C,
    OrcLocation.NoChoice: _C,
    OrcLocation.AfterChoice: _C,
    OrcLocation.BroadcastChoice: _W,
    OrcLocation.SelectInvolved: _C,
    OrcLocation.SendChoices: _W,
    OrcLocation.AwaitVotes: _R,
    OrcLocation.ActionSelect: _C,
    OrcLocation.CentralisedOffer: _W,
    OrcLocation.CentralisedOfferPayload: _W,
    OrcLocation.AwaitOffer: _R,
    OrcLocation.CentralisedMatch: _W,
    OrcLocation.CentralisedMatchSkip: _W,
    OrcLocation.CentralisedMatchAwaitRequest: _R,
    OrcLocation.CentralisedMatchForward: _W,
    OrcLocation.CentralisedMatchForwardRequest: _W,
    OrcLocation.CentralisedMatchAwaitOffer: _R,
    OrcLocation.CentralisedMatchReturnOffer: _W,
    OrcLocation.DistributedOffer: _W,
    OrcLocation.DistributedOfferType: _W,
    OrcLocation.DistributedOfferPayload: _W,
    OrcLocation.DistributedSetup: _W,
    OrcLocation.DistributedSetupRequester: _W,
    OrcLocation.DistributedSetupType: _W,
    OrcLocation.AwaitPort: _R,
    OrcLocation.ForwardAddress: _W,
    OrcLocation.ForwardPort: _W,
    OrcLocation.AwaitAck: _R,
    OrcLocation.Stop: _W,
    OrcLocation.Terminated: None,
    OrcLocation.Error: None,
    OrcLocation.Timeout: None,
}

SVC_LOCATION_CLASS = {
    SvcLocation.Ready: _R,
    SvcLocation.CheckingConfig: _R,
    SvcLocation.ReplyAck: _W,
    SvcLocation.ReplyError: _W,
    SvcLocation.AwaitChoicePayload: _R,
    SvcLocation.Voting: _W,
    SvcLocation.AwaitActionKind: _R,
    SvcLocation.Offering: _W,
    SvcLocation.Requesting: _W,
    SvcLocation.CentralisedRequesterAwaitOffer: _R,
    SvcLocation.DistOffererAwaitNoPayload: _R,
    SvcLocation.DistOffering: _W,
    SvcLocation.DistOffererSendPort: _W,
    SvcLocation.DistOffererAwaitRequest: _R,
    SvcLocation.DistOffererReplyOffer: _W,
    SvcLocation.Done: _R,
    SvcLocation.DistRequesterAwaitPort: _R,
    SvcLocation.DistRequesterSendRequest: _W,
    SvcLocation.DistRequesterAwaitOffer: _R,
    SvcLocation.DistRequesterAckPeer: _W,
    SvcLocation.DistRequesterAckOrc: _W,
    SvcLocation.Terminated: None,
    SvcLocation.Error: None,
    SvcLocation.Timeout: None,
}


# ============================================================================
# PROCESOS E INSTANCIAS
# ============================================================================

class Process(NamedTuple):
    """Proceso que actúa: orquestador, servicio j o SocketTimeout j."""

    kind: str
    index: int = -1

    @classmethod
    def orc(cls) -> "Process":
        return cls("orc", -1)

    @classmethod
    def svc(cls, j: int) -> "Process":
        return cls("svc", j)

    @classmethod
    def timer(cls, j: int) -> "Process":
        return cls("st", j)

    @classmethod
    def parse(cls, text: str) -> "Process":
        if text == "orc":
            return cls.orc()
        for kind in ("svc", "st"):
            if text.startswith(kind) and text[len(kind):].isdigit():
                return cls(kind, int(text[len(kind):]))
        raise ValueError(f"proceso desconocido: {text!r}")

    @property
    def template(self) -> str:
        return {"orc": "Orc", "svc": "Svc", "st": "SocketTimeout"}[self.kind]

    def __str__(self) -> str:
        return "orc" if self.kind == "orc" else f"{self.kind}{self.index}"


ParamValue = Union[int, str]


@dataclass(frozen=True, slots=True)
class TransitionInstance:
    """Un paso disparable con sus parámetros no deterministas resueltos."""

    process: Process
    edge_id: str
    nondet_params: Tuple[Tuple[str, ParamValue], ...] = ()
    weight: int = 1
    delay_class: DelayClass = DelayClass.COMMITTED

    def param(self, name: str) -> ParamValue:
        for key, value in self.nondet_params:
            if key == name:
                return value
        raise KeyError(name)

    def __str__(self) -> str:
        extra = ""
        if self.nondet_params:
            extra = " params=" + ",".join(f"{k}={v}" for k, v in self.nondet_params)
        return f"{self.process} {self.edge_id}{extra}"


# ============================================================================
# ESTADO
# ============================================================================

class OrcVars(NamedTuple):
    conf: Optional[Configuration] = None
    i: int = 0
    offerer: int = 0
    requester: int = 0
    involved: int = 0
    # Servicios cuyo voto aún se espera (bitmask)
    awaited: int = 0

    @property
    def votes_pending(self) -> int:
        return bin(self.awaited).count("1")


# Dueño de una entrada del log de steps: -1 = orquestador, j = servicio j
ORC_OWNER = -1
StepEntry = Tuple[int, StepMarker]


@dataclass(frozen=True, slots=True)
class SystemState:
    """Instantánea inmutable y hashable del sistema completo."""

    orc_loc: OrcLocation
    orc_vars: OrcVars
    svc_locs: Tuple[SvcLocation, ...]
    svc_d1: Tuple[MessageConst, ...]
    svc_cfg: Tuple[Optional[Configuration], ...]
    orc2services: Tuple[Buffer, ...]
    services2orc: Tuple[Buffer, ...]
    requester2offerer: Buffer
    offerer2requester: Buffer
    timer_locs: Tuple[TimerLocation, ...]
    clocks: Tuple[int, ...]
    steps: Tuple[StepEntry, ...] = ()
    steps_capacity: int = 0

    @property
    def n_services(self) -> int:
        return len(self.svc_locs)

    @property
    def step(self) -> int:
        return len(self.steps)

    def step_at(self, k: int) -> StepEntry:
        if k < len(self.steps):
            return self.steps[k]
        return (ORC_OWNER, StepMarker.UNSET)

    def buffers(self) -> Tuple[Buffer, ...]:
        return self.orc2services + self.services2orc + (self.requester2offerer, self.offerer2requester)

    def all_empty(self) -> bool:
        return all(not b.cells for b in self.buffers())

    def all_terminated(self) -> bool:
        return self.orc_loc is OrcLocation.Terminated and all(
            loc is SvcLocation.Terminated for loc in self.svc_locs
        )

    def any_timeout(self) -> bool:
        return (
            self.orc_loc is OrcLocation.Timeout
            or any(loc is SvcLocation.Timeout for loc in self.svc_locs)
            or any(loc is TimerLocation.Timeout for loc in self.timer_locs)
        )

    def with_clocks(self, clocks: Tuple[int, ...]) -> "SystemState":
        return replace(self, clocks=clocks)

    def describe(self) -> str:
        """Resumen legible en una línea."""
        svcs = " ".join(
            f"svc{j}={loc.name}/{self.svc_d1[j].name}" for j, loc in enumerate(self.svc_locs)
        )
        bufs = " ".join(f"o2s{j}={b}" for j, b in enumerate(self.orc2services))
        back = " ".join(f"s2o{j}={b}" for j, b in enumerate(self.services2orc))
        return (
            f"orc={self.orc_loc.name} i={self.orc_vars.i} {svcs} {bufs} {back} "
            f"r2o={self.requester2offerer} o2r={self.offerer2requester}"
        )


def owner_name(owner: int) -> str:
    return "orc" if owner == ORC_OWNER else f"svc{owner}"


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "DelayClass",
    "OrcLocation",
    "SvcLocation",
    "TimerLocation",
    "ORC_LOCATION_CLASS",
    "SVC_LOCATION_CLASS",
    "Process",
    "ParamValue",
    "TransitionInstance",
    "OrcVars",
    "ORC_OWNER",
    "StepEntry",
    "SystemState",
    "owner_name",
]
