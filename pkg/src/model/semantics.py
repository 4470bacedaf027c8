"""
Motor de semántica del sistema compuesto.

Orquestador, N servicios y N autómatas SocketTimeout sobre buffers FIFO
compartidos. Calcula las transiciones habilitadas (con prioridad de
ubicaciones committed y las variantes del modelo) y las aplica de forma
determinista. Todas las funciones son puras: ningún estado se muta.

FASES DEL PROTOCOLO:
====================

    Initial ──initialize──► CheckCompatibility ◄─┐ (i+1 < N)
                                  │ send_check    │
                                  ▼               │
                            AwaitCheckReply ──────┘──► Start ◄──────────────┐
                                  │ ERROR               │                     │
                                  ▼                 choice / nochoice         │
                                Error        ┌──────────┴──────────┐          │
                                             ▼                     ▼          │
                                      BroadcastChoice          NoChoice       │
                                       (DICT│MAJ)                 │          │
                                             ▼                     │          │
                                        AfterChoice ──action──► ActionSelect ─┘
                                             │ stop                │
                                             ▼                     ▼
                                           Stop ──► Terminated   offer / match

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import logging
from dataclasses import replace
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple

from src.core import STEPS_CAPACITY
from src.core.errors import NotEnabled
from src.model.params import SystemParams, TimeoutMode, Variant
from src.model.protocol import (
    ActionKind,
    Buffer,
    ChoiceKind,
    Configuration,
    MessageConst,
    StepMarker,
    dequeue,
    enqueue,
)
from src.model.state import (
    ORC_LOCATION_CLASS,
    SVC_LOCATION_CLASS,
    DelayClass,
    OrcLocation,
    OrcVars,
    Process,
    SvcLocation,
    SystemState,
    TimerLocation,
    TransitionInstance,
)

logger = logging.getLogger(__name__)

M = MessageConst
O = OrcLocation
S = SvcLocation
_C, _W, _R = DelayClass.COMMITTED, DelayClass.WRITE, DelayClass.READ


# ============================================================================
# AUTÓMATA DEL SERVICIO (declarativo)
# ============================================================================

class SvcEdge(NamedTuple):
    edge_id: str
    source: SvcLocation
    kind: str          # recv | send | check
    channel: str       # in | out | r2o | o2r
    message: MessageConst
    target: SvcLocation
    marker: StepMarker = StepMarker.UNSET
    choice: Optional[ChoiceKind] = None


SVC_EDGES: Tuple[SvcEdge, ...] = (
    # Ready: despacho según la cabeza del buffer de entrada
    SvcEdge("recv_check", S.Ready, "recv", "in", M.ORC_CHECK, S.CheckingConfig),
    SvcEdge("recv_choice_dictatorial", S.Ready, "recv", "in", M.ORC_CHOICE, S.Ready,
            StepMarker.DICTATORIAL_CHOICE, ChoiceKind.DICTATORIAL),
    SvcEdge("recv_choice_majoritarian", S.Ready, "recv", "in", M.ORC_CHOICE, S.AwaitChoicePayload,
            choice=ChoiceKind.MAJORITARIAN),
    SvcEdge("recv_stop", S.Ready, "recv", "in", M.ORC_STOP, S.Terminated, StepMarker.ORC_STOP),
    SvcEdge("recv_action", S.Ready, "recv", "in", M.ACTION, S.AwaitActionKind),
    # Chequeo de configuración
    SvcEdge("recv_config_match", S.CheckingConfig, "check", "in", M.NIL, S.ReplyAck),
    SvcEdge("recv_config_mismatch", S.CheckingConfig, "check", "in", M.NIL, S.ReplyError),
    SvcEdge("send_ack", S.ReplyAck, "send", "out", M.ACK, S.Ready, StepMarker.ORC_CHECK),
    SvcEdge("send_error", S.ReplyError, "send", "out", M.ERROR, S.Error),
    # Elección mayoritaria
    SvcEdge("recv_choices", S.AwaitChoicePayload, "recv", "in", M.CHOICES, S.Voting),
    SvcEdge("recv_choice_skip", S.AwaitChoicePayload, "recv", "in", M.SKIP, S.Ready),
    SvcEdge("send_vote", S.Voting, "send", "out", M.SERVICE_CHOICE, S.Ready,
            StepMarker.MAJORITARIAN_CHOICE),
    # Tipo de acción
    SvcEdge("recv_nopayload", S.AwaitActionKind, "recv", "in", M.NOPAYLOAD, S.Offering),
    SvcEdge("recv_request", S.AwaitActionKind, "recv", "in", M.REQUEST, S.Offering),
    SvcEdge("recv_skip", S.AwaitActionKind, "recv", "in", M.SKIP, S.Requesting),
    SvcEdge("recv_typeoffer", S.AwaitActionKind, "recv", "in", M.TYPEOFFER, S.DistOffererAwaitNoPayload),
    SvcEdge("recv_typematch", S.AwaitActionKind, "recv", "in", M.TYPEMATCH, S.DistOffererSendPort),
    SvcEdge("recv_address", S.AwaitActionKind, "recv", "in", M.ADDRESS, S.DistRequesterAwaitPort),
    # Centralizado
    SvcEdge("send_offer", S.Offering, "send", "out", M.OFFER, S.Ready, StepMarker.CENTRALISED_OFFER),
    SvcEdge("send_request", S.Requesting, "send", "out", M.REQUEST, S.CentralisedRequesterAwaitOffer,
            StepMarker.CENTRALISED_MATCH),
    SvcEdge("recv_offer", S.CentralisedRequesterAwaitOffer, "recv", "in", M.OFFER, S.Ready),
    # Distribuido, oferente
    SvcEdge("recv_nopayload_dist", S.DistOffererAwaitNoPayload, "recv", "in", M.NOPAYLOAD, S.DistOffering),
    SvcEdge("send_offer_dist", S.DistOffering, "send", "out", M.OFFER, S.Ready,
            StepMarker.DISTRIBUTED_OFFER),
    SvcEdge("send_port", S.DistOffererSendPort, "send", "out", M.PORT, S.DistOffererAwaitRequest),
    SvcEdge("recv_peer_request", S.DistOffererAwaitRequest, "recv", "r2o", M.REQUEST,
            S.DistOffererReplyOffer),
    SvcEdge("send_peer_offer", S.DistOffererReplyOffer, "send", "o2r", M.OFFER, S.Done,
            StepMarker.DISTRIBUTED_OFFER),
    SvcEdge("recv_peer_ack", S.Done, "recv", "r2o", M.ACK, S.Ready),
    # Distribuido, solicitante
    SvcEdge("recv_port", S.DistRequesterAwaitPort, "recv", "in", M.PORT, S.DistRequesterSendRequest),
    SvcEdge("send_peer_request", S.DistRequesterSendRequest, "send", "r2o", M.REQUEST,
            S.DistRequesterAwaitOffer, StepMarker.DISTRIBUTED_MATCH),
    SvcEdge("recv_peer_offer", S.DistRequesterAwaitOffer, "recv", "o2r", M.OFFER, S.DistRequesterAckPeer),
    SvcEdge("send_peer_ack", S.DistRequesterAckPeer, "send", "r2o", M.ACK, S.DistRequesterAckOrc),
    SvcEdge("send_ack_orc", S.DistRequesterAckOrc, "send", "out", M.ACK, S.Ready),
)

_SVC_EDGES_BY_SOURCE: Dict[SvcLocation, Tuple[SvcEdge, ...]] = {
    loc: tuple(e for e in SVC_EDGES if e.source is loc) for loc in SvcLocation
}
_SVC_EDGE_INDEX: Dict[Tuple[SvcLocation, str], SvcEdge] = {(e.source, e.edge_id): e for e in SVC_EDGES}

# Ubicaciones que participan en la sesión entre pares
_PEER_LOCATIONS = frozenset({
    S.DistOffererAwaitRequest, S.DistOffererReplyOffer, S.Done,
    S.DistRequesterSendRequest, S.DistRequesterAwaitOffer, S.DistRequesterAckPeer,
})


# ============================================================================
# AUTÓMATA DEL ORQUESTADOR
# ============================================================================

class OrcStep(NamedTuple):
    """Paso lineal: un envío o recepción hacia el oferente o el solicitante."""

    edge_id: str
    kind: str      # send | recv
    role: str      # offerer | requester
    message: MessageConst
    target: OrcLocation


_ORC_STEPS: Dict[OrcLocation, OrcStep] = {
    O.CentralisedOffer: OrcStep("send_offer_action", "send", "offerer", M.ACTION, O.CentralisedOfferPayload),
    O.CentralisedOfferPayload: OrcStep("send_offer_nopayload", "send", "offerer", M.NOPAYLOAD, O.AwaitOffer),
    O.AwaitOffer: OrcStep("recv_offer", "recv", "offerer", M.OFFER, O.Start),
    O.CentralisedMatch: OrcStep("send_match_action", "send", "requester", M.ACTION, O.CentralisedMatchSkip),
    O.CentralisedMatchSkip: OrcStep("send_match_skip", "send", "requester", M.SKIP,
                                    O.CentralisedMatchAwaitRequest),
    O.CentralisedMatchAwaitRequest: OrcStep("recv_request", "recv", "requester", M.REQUEST,
                                            O.CentralisedMatchForward),
    O.CentralisedMatchForward: OrcStep("forward_action", "send", "offerer", M.ACTION,
                                       O.CentralisedMatchForwardRequest),
    O.CentralisedMatchForwardRequest: OrcStep("forward_request", "send", "offerer", M.REQUEST,
                                              O.CentralisedMatchAwaitOffer),
    O.CentralisedMatchAwaitOffer: OrcStep("recv_match_offer", "recv", "offerer", M.OFFER,
                                          O.CentralisedMatchReturnOffer),
    O.CentralisedMatchReturnOffer: OrcStep("return_offer", "send", "requester", M.OFFER, O.Start),
    O.DistributedOffer: OrcStep("send_dist_offer_action", "send", "offerer", M.ACTION, O.DistributedOfferType),
    O.DistributedOfferType: OrcStep("send_typeoffer", "send", "offerer", M.TYPEOFFER, O.DistributedOfferPayload),
    O.DistributedOfferPayload: OrcStep("send_dist_nopayload", "send", "offerer", M.NOPAYLOAD, O.AwaitOffer),
    O.DistributedSetup: OrcStep("send_setup_action_offerer", "send", "offerer", M.ACTION,
                                O.DistributedSetupRequester),
    O.DistributedSetupRequester: OrcStep("send_setup_action_requester", "send", "requester", M.ACTION,
                                         O.DistributedSetupType),
    O.DistributedSetupType: OrcStep("send_typematch", "send", "offerer", M.TYPEMATCH, O.AwaitPort),
    O.AwaitPort: OrcStep("recv_port", "recv", "offerer", M.PORT, O.ForwardAddress),
    O.ForwardAddress: OrcStep("forward_address", "send", "requester", M.ADDRESS, O.ForwardPort),
    O.ForwardPort: OrcStep("forward_port", "send", "requester", M.PORT, O.AwaitAck),
    O.AwaitAck: OrcStep("recv_match_ack", "recv", "requester", M.ACK, O.Start),
}

ORC_EDGE_IDS: Tuple[str, ...] = (
    "initialize", "send_check", "recv_check_ack", "recv_check_error",
    "choose_choice", "choose_nochoice", "choose_action", "choose_stop",
    "after_choice_action", "after_choice_stop",
    "send_orc_choice", "select_involved", "send_choices", "send_choice_skip", "recv_vote",
    "select_offer", "select_match", "send_stop",
) + tuple(step.edge_id for step in _ORC_STEPS.values())

TIMEOUT_EDGE = "timeout_fire"


def declared_edges() -> Dict[str, FrozenSet[str]]:
    """Aristas declaradas por plantilla (para cobertura)."""
    return {
        "Orc": frozenset(ORC_EDGE_IDS),
        "Svc": frozenset(e.edge_id for e in SVC_EDGES),
        "SocketTimeout": frozenset({TIMEOUT_EDGE}),
    }


# ============================================================================
# UTILIDADES
# ============================================================================

def _set(items: tuple, index: int, value) -> tuple:
    return items[:index] + (value,) + items[index + 1:]


def _effective(base: Optional[DelayClass], committed_sends: bool) -> Optional[DelayClass]:
    if committed_sends and base is _W:
        return _C
    return base


def _full_mask(n: int) -> int:
    return (1 << n) - 1


def _lowest_bit(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def _channel(state: SystemState, j: int, channel: str) -> Buffer:
    if channel == "in":
        return state.orc2services[j]
    if channel == "out":
        return state.services2orc[j]
    if channel == "r2o":
        return state.requester2offerer
    return state.offerer2requester


def _with_channel(state: SystemState, j: int, channel: str, buffer: Buffer) -> SystemState:
    if channel == "in":
        return replace(state, orc2services=_set(state.orc2services, j, buffer))
    if channel == "out":
        return replace(state, services2orc=_set(state.services2orc, j, buffer))
    if channel == "r2o":
        return replace(state, requester2offerer=buffer)
    return replace(state, offerer2requester=buffer)


_CHOICE_BY_TAG = {M.DICTATORIAL: ChoiceKind.DICTATORIAL, M.MAJORITARIAN: ChoiceKind.MAJORITARIAN}
_ACTION_BY_TAG = {M.CENTRALISED: ActionKind.CENTRALISED, M.DISTRIBUTED: ActionKind.DISTRIBUTED}


def _config_from_tags(choice_tag: MessageConst, action_tag: MessageConst) -> Optional[Configuration]:
    choice = _CHOICE_BY_TAG.get(choice_tag)
    action = _ACTION_BY_TAG.get(action_tag)
    if choice is None or action is None:
        return None
    return Configuration(choice, action)


def _record(state: SystemState, owner: int, marker: StepMarker) -> SystemState:
    if marker is StepMarker.UNSET or len(state.steps) >= state.steps_capacity:
        return state
    return replace(state, steps=state.steps + ((owner, marker),))


def _reset_clocks(state: SystemState, touched: Iterable[int]) -> SystemState:
    clocks = state.clocks
    changed = False
    for j in touched:
        if clocks[j] != 0:
            clocks = _set(clocks, j, 0)
            changed = True
    return replace(state, clocks=clocks) if changed else state


# ============================================================================
# ESTADO INICIAL
# ============================================================================

def initial_state(params: SystemParams, steps_capacity: int = STEPS_CAPACITY) -> SystemState:
    """
    Construye el estado inicial.

    Args:
        params: Parámetros validados
        steps_capacity: Capacidad del log de steps (0 desactiva la instrumentación)

    Returns:
        Orquestador en Initial, servicios en Ready, buffers vacíos
    """
    n = params.n_services
    q = params.queue_size
    if params.config_mode.nondeterministic:
        cfgs: Tuple[Optional[Configuration], ...] = (None,) * n
    else:
        cfgs = tuple(params.config_mode.per_service)
    return SystemState(
        orc_loc=O.Initial,
        orc_vars=OrcVars(),
        svc_locs=(S.Ready,) * n,
        svc_d1=(M.NIL,) * n,
        svc_cfg=cfgs,
        orc2services=(Buffer.empty(q),) * n,
        services2orc=(Buffer.empty(q),) * n,
        requester2offerer=Buffer.empty(1),
        offerer2requester=Buffer.empty(1),
        timer_locs=(TimerLocation.Idle,) * n,
        clocks=(0,) * n,
        steps=(),
        steps_capacity=max(0, steps_capacity),
    )


# ============================================================================
# TRANSICIONES HABILITADAS
# ============================================================================

def _orc_instances(state: SystemState, params: SystemParams, cls: DelayClass) -> List[TransitionInstance]:
    loc = state.orc_loc
    v = state.orc_vars
    n = state.n_services
    orc = Process.orc()

    def inst(edge_id: str, nondet: tuple = (), weight: int = 1) -> TransitionInstance:
        return TransitionInstance(orc, edge_id, nondet, weight, cls)

    if loc is O.Initial:
        mode = params.config_mode
        confs = Configuration.all() if mode.nondeterministic else (mode.orc,)
        return [inst("initialize", (("conf", str(c)),)) for c in confs]

    if loc is O.CheckCompatibility:
        return [inst("send_check")] if state.orc2services[v.i].available >= 3 else []

    if loc is O.AwaitCheckReply:
        head = state.services2orc[v.i].head
        if head is M.ACK:
            return [inst("recv_check_ack")]
        if head is M.ERROR:
            return [inst("recv_check_error")]
        return []

    if loc is O.Start:
        out = []
        if params.p_choice > 0:
            out.append(inst("choose_choice", weight=params.p_choice))
        if params.p_nochoice > 0:
            out.append(inst("choose_nochoice", weight=params.p_nochoice))
        return out

    if loc is O.NoChoice or loc is O.AfterChoice:
        prefix = "choose" if loc is O.NoChoice else "after_choice"
        out = []
        if params.p_action > 0:
            out.append(inst(f"{prefix}_action", weight=params.p_action))
        if params.p_stop > 0:
            out.append(inst(f"{prefix}_stop", weight=params.p_stop))
        return out

    if loc is O.BroadcastChoice:
        return [inst("send_orc_choice")] if state.orc2services[v.i].available > 0 else []

    if loc is O.SelectInvolved:
        full = _full_mask(n)
        wait_all = params.variant is Variant.WAIT_ALL_CHOICES
        return [
            inst("select_involved", (("involved", mask), ("awaited", full if wait_all else mask)))
            for mask in range(1, full + 1)
        ]

    if loc is O.SendChoices:
        if state.orc2services[v.i].available == 0:
            return []
        return [inst("send_choices" if v.involved >> v.i & 1 else "send_choice_skip")]

    if loc is O.AwaitVotes:
        return [inst("recv_vote")] if state.services2orc[v.i].head is M.SERVICE_CHOICE else []

    if loc is O.ActionSelect:
        out = []
        if params.p_offer > 0:
            out.extend(inst("select_offer", (("offerer", k),), params.p_offer) for k in range(n))
        if params.p_match > 0:
            out.extend(inst("select_match", (("requester", i),), params.p_match) for i in range(n - 1))
        return out

    if loc is O.Stop:
        return [inst("send_stop")] if state.orc2services[v.i].available > 0 else []

    step = _ORC_STEPS.get(loc)
    if step is None:
        return []
    j = v.offerer if step.role == "offerer" else v.requester
    if step.kind == "send":
        return [inst(step.edge_id)] if state.orc2services[j].available > 0 else []
    return [inst(step.edge_id)] if state.services2orc[j].head is step.message else []


def _svc_edge_enabled(state: SystemState, j: int, edge: SvcEdge) -> bool:
    if edge.choice is not None:
        cfg = state.svc_cfg[j]
        if cfg is None or cfg.choice is not edge.choice:
            return False
    buf = _channel(state, j, edge.channel)
    if edge.kind == "recv":
        return buf.head is edge.message
    if edge.kind == "send":
        return buf.available > 0
    # check: dos mensajes de configuración en la cabeza
    if len(buf.cells) < 2:
        return False
    received = _config_from_tags(buf.cells[0], buf.cells[1])
    compatible = received is not None and received == state.svc_cfg[j]
    return compatible == (edge.edge_id == "recv_config_match")


def _svc_instances(state: SystemState, j: int, cls: DelayClass) -> List[TransitionInstance]:
    proc = Process.svc(j)
    return [
        TransitionInstance(proc, edge.edge_id, (), 1, cls)
        for edge in _SVC_EDGES_BY_SOURCE[state.svc_locs[j]]
        if _svc_edge_enabled(state, j, edge)
    ]


def enabled(state: SystemState, params: SystemParams) -> List[TransitionInstance]:
    """
    Todas las instancias disparables en el estado.

    Si algún proceso está en una ubicación committed, sólo se devuelven
    instancias de procesos committed. Las ramas probabilísticas aparecen
    como una instancia por rama con su peso.

    Args:
        state: Estado actual
        params: Parámetros del sistema

    Returns:
        Lista de instancias (vacía = candidato a deadlock)
    """
    committed_sends = params.variant is Variant.COMMITTED_SENDS
    orc_cls = _effective(ORC_LOCATION_CLASS[state.orc_loc], committed_sends)
    svc_cls = [_effective(SVC_LOCATION_CLASS[loc], committed_sends) for loc in state.svc_locs]
    any_committed = orc_cls is _C or any(c is _C for c in svc_cls)

    out: List[TransitionInstance] = []
    if orc_cls is not None and (not any_committed or orc_cls is _C):
        out.extend(_orc_instances(state, params, orc_cls))
    for j, cls in enumerate(svc_cls):
        if cls is not None and (not any_committed or cls is _C):
            out.extend(_svc_instances(state, j, cls))
    if (
        params.timeout_mode is TimeoutMode.NONDET
        and not any_committed
        and all(t is TimerLocation.Idle for t in state.timer_locs)
    ):
        # Solo los servicios que no terminaron mantienen su temporizador armado
        out.extend(
            TransitionInstance(Process.timer(j), TIMEOUT_EDGE, (), 1, DelayClass.TIMEOUT_FIRE)
            for j in range(state.n_services)
            if state.svc_locs[j] is not S.Terminated
        )
    return out


def is_deadlock(state: SystemState, params: SystemParams) -> bool:
    return not enabled(state, params)


def is_committed(state: SystemState, params: SystemParams) -> bool:
    """True si algún proceso está en una ubicación committed."""
    committed_sends = params.variant is Variant.COMMITTED_SENDS
    if _effective(ORC_LOCATION_CLASS[state.orc_loc], committed_sends) is _C:
        return True
    return any(_effective(SVC_LOCATION_CLASS[loc], committed_sends) is _C for loc in state.svc_locs)


# ============================================================================
# APLICACIÓN DE TRANSICIONES
# ============================================================================

def _not_enabled(t: TransitionInstance, state: SystemState) -> NotEnabled:
    return NotEnabled(f"{t} no está habilitada en {state.describe()}")


def same_instance(a: TransitionInstance, b: TransitionInstance) -> bool:
    """Igualdad por proceso, arista y parámetros (ignora peso y clase)."""
    return a.process == b.process and a.edge_id == b.edge_id and a.nondet_params == b.nondet_params


def _apply_orc(state: SystemState, t: TransitionInstance) -> Tuple[SystemState, Set[int]]:
    loc = state.orc_loc
    v = state.orc_vars
    n = state.n_services
    eid = t.edge_id

    def send(j: int, *messages: MessageConst) -> SystemState:
        buf = state.orc2services[j]
        if buf.available < len(messages):
            raise _not_enabled(t, state)
        for m in messages:
            buf = enqueue(buf, m)
        return replace(state, orc2services=_set(state.orc2services, j, buf))

    def recv(j: int, expected: MessageConst) -> SystemState:
        buf = state.services2orc[j]
        if buf.head is not expected:
            raise _not_enabled(t, state)
        _, buf = dequeue(buf)
        return replace(state, services2orc=_set(state.services2orc, j, buf))

    def goto(s: SystemState, target: OrcLocation, **vars_) -> SystemState:
        return replace(s, orc_loc=target, orc_vars=s.orc_vars._replace(**vars_) if vars_ else s.orc_vars)

    if loc is O.Initial and eid == "initialize":
        conf = Configuration.parse(str(t.param("conf")))
        s = state
        if any(c is None for c in state.svc_cfg):
            s = replace(s, svc_cfg=(conf,) * n)
        return goto(s, O.CheckCompatibility, conf=conf, i=0), set()

    if loc is O.CheckCompatibility and eid == "send_check":
        conf = v.conf
        s = send(v.i, M.ORC_CHECK, conf.choice_tag, conf.action_tag)
        return goto(s, O.AwaitCheckReply), {v.i}

    if loc is O.AwaitCheckReply and eid == "recv_check_ack":
        s = recv(v.i, M.ACK)
        if v.i + 1 < n:
            return goto(s, O.CheckCompatibility, i=v.i + 1), {v.i}
        return goto(s, O.Start, i=0), {v.i}

    if loc is O.AwaitCheckReply and eid == "recv_check_error":
        return goto(recv(v.i, M.ERROR), O.Error), {v.i}

    if loc is O.Start and eid == "choose_choice":
        return goto(state, O.BroadcastChoice, i=0), set()
    if loc is O.Start and eid == "choose_nochoice":
        return goto(state, O.NoChoice), set()
    if (loc is O.NoChoice and eid == "choose_action") or (loc is O.AfterChoice and eid == "after_choice_action"):
        return goto(state, O.ActionSelect), set()
    if (loc is O.NoChoice and eid == "choose_stop") or (loc is O.AfterChoice and eid == "after_choice_stop"):
        return goto(state, O.Stop, i=0), set()

    if loc is O.BroadcastChoice and eid == "send_orc_choice":
        s = send(v.i, M.ORC_CHOICE)
        if v.i + 1 < n:
            return goto(s, O.BroadcastChoice, i=v.i + 1), {v.i}
        if v.conf.choice is ChoiceKind.DICTATORIAL:
            return goto(s, O.AfterChoice, i=0), {v.i}
        return goto(s, O.SelectInvolved, i=0), {v.i}

    if loc is O.SelectInvolved and eid == "select_involved":
        involved = int(t.param("involved"))
        awaited = int(t.param("awaited"))
        if not 0 < involved <= _full_mask(n) or awaited & ~_full_mask(n) or not awaited:
            raise _not_enabled(t, state)
        return goto(state, O.SendChoices, i=0, involved=involved, awaited=awaited), set()

    if loc is O.SendChoices and eid in ("send_choices", "send_choice_skip"):
        is_involved = bool(v.involved >> v.i & 1)
        if is_involved != (eid == "send_choices"):
            raise _not_enabled(t, state)
        s = send(v.i, M.CHOICES if is_involved else M.SKIP)
        if v.i + 1 < n:
            return goto(s, O.SendChoices, i=v.i + 1), {v.i}
        return goto(s, O.AwaitVotes, i=_lowest_bit(v.awaited)), {v.i}

    if loc is O.AwaitVotes and eid == "recv_vote":
        s = recv(v.i, M.SERVICE_CHOICE)
        awaited = v.awaited & ~(1 << v.i)
        if awaited:
            return goto(s, O.AwaitVotes, i=_lowest_bit(awaited), awaited=awaited), {v.i}
        return goto(s, O.AfterChoice, i=0, involved=0, awaited=0), {v.i}

    if loc is O.ActionSelect and eid == "select_offer":
        k = int(t.param("offerer"))
        if not 0 <= k < n:
            raise _not_enabled(t, state)
        centralised = v.conf.action_tag is M.CENTRALISED
        return goto(state, O.CentralisedOffer if centralised else O.DistributedOffer, offerer=k), set()

    if loc is O.ActionSelect and eid == "select_match":
        r = int(t.param("requester"))
        if not 0 <= r < n - 1:
            raise _not_enabled(t, state)
        centralised = v.conf.action_tag is M.CENTRALISED
        target = O.CentralisedMatch if centralised else O.DistributedSetup
        return goto(state, target, requester=r, offerer=r + 1), set()

    if loc is O.Stop and eid == "send_stop":
        s = send(v.i, M.ORC_STOP)
        if v.i + 1 < n:
            return goto(s, O.Stop, i=v.i + 1), {v.i}
        return goto(s, O.Terminated, i=0), {v.i}

    step = _ORC_STEPS.get(loc)
    if step is None or step.edge_id != eid:
        raise _not_enabled(t, state)
    j = v.offerer if step.role == "offerer" else v.requester
    s = send(j, step.message) if step.kind == "send" else recv(j, step.message)
    if step.target is O.Start:
        return goto(s, O.Start, offerer=0, requester=0), {j}
    return goto(s, step.target), {j}


def _apply_svc(state: SystemState, t: TransitionInstance) -> Tuple[SystemState, Set[int]]:
    j = t.process.index
    if not 0 <= j < state.n_services:
        raise _not_enabled(t, state)
    edge = _SVC_EDGE_INDEX.get((state.svc_locs[j], t.edge_id))
    if edge is None or not _svc_edge_enabled(state, j, edge):
        raise _not_enabled(t, state)

    buf = _channel(state, j, edge.channel)
    d1 = state.svc_d1[j]
    if edge.kind == "send":
        buf = enqueue(buf, edge.message)
    elif edge.kind == "recv":
        d1, buf = dequeue(buf)
    else:
        _, buf = dequeue(buf)
        d1, buf = dequeue(buf)

    s = _with_channel(state, j, edge.channel, buf)
    s = replace(s, svc_locs=_set(s.svc_locs, j, edge.target), svc_d1=_set(s.svc_d1, j, d1))
    s = _record(s, j, edge.marker)

    touched = {j}
    if edge.channel in ("r2o", "o2r"):
        touched.update(k for k, loc in enumerate(state.svc_locs) if k != j and loc in _PEER_LOCATIONS)
    return s, touched


def _apply_timeout(state: SystemState, t: TransitionInstance) -> Tuple[SystemState, Set[int]]:
    j = t.process.index
    if t.edge_id != TIMEOUT_EDGE or not 0 <= j < state.n_services:
        raise _not_enabled(t, state)
    if any(loc is not TimerLocation.Idle for loc in state.timer_locs):
        raise _not_enabled(t, state)
    orc_loc = state.orc_loc if state.orc_loc is O.Terminated else O.Timeout
    svc_locs = tuple(loc if loc is S.Terminated else S.Timeout for loc in state.svc_locs)
    return replace(
        state,
        orc_loc=orc_loc,
        svc_locs=svc_locs,
        timer_locs=(TimerLocation.Timeout,) * state.n_services,
    ), set()


def fire_with_effects(
    state: SystemState,
    t: TransitionInstance,
    params: Optional[SystemParams] = None,
) -> Tuple[SystemState, FrozenSet[int]]:
    """
    Como fire(), devolviendo además los servicios cuyo reloj se reinicia.
    """
    if params is not None and not any(same_instance(t, e) for e in enabled(state, params)):
        raise _not_enabled(t, state)
    kind = t.process.kind
    if kind == "orc":
        s, touched = _apply_orc(state, t)
    elif kind == "svc":
        s, touched = _apply_svc(state, t)
    elif kind == "st":
        s, touched = _apply_timeout(state, t)
    else:
        raise _not_enabled(t, state)
    return _reset_clocks(s, touched), frozenset(touched)


def fire(state: SystemState, t: TransitionInstance, params: Optional[SystemParams] = None) -> SystemState:
    """
    Sucesor determinista de state por t.

    Con params se comprueba la pertenencia a enabled(state, params); sin
    params se comprueban la ubicación de origen y la guarda de la arista.

    Raises:
        NotEnabled: Si t no es disparable
    """
    return fire_with_effects(state, t, params)[0]


# ============================================================================
# PROYECCIÓN DE UN SERVICIO
# ============================================================================

def replay_service_projection(
    events: Sequence[Tuple[str, str, MessageConst]],
    cfg: Configuration,
) -> SvcLocation:
    """
    Reproduce la secuencia observada por un servicio sobre su autómata.

    Args:
        events: Tuplas (dirección 'in'|'out', canal 'orc'|'peer', mensaje)
        cfg: Configuración del servicio

    Returns:
        Ubicación final alcanzada

    Raises:
        NotEnabled: Si algún evento no corresponde a una arista del autómata
    """
    loc = S.Ready
    pending: List[MessageConst] = []
    for position, (direction, channel, message) in enumerate(events):
        if loc is S.CheckingConfig:
            if direction != "in" or channel != "orc":
                raise NotEnabled(f"evento {position}: se esperaba la configuración")
            pending.append(message)
            if len(pending) < 2:
                continue
            received = _config_from_tags(pending[0], pending[1])
            loc = S.ReplyAck if received == cfg else S.ReplyError
            pending = []
            continue

        for edge in _SVC_EDGES_BY_SOURCE[loc]:
            if edge.kind == "check":
                continue
            if edge.choice is not None and edge.choice is not cfg.choice:
                continue
            wire = "orc" if edge.channel in ("in", "out") else "peer"
            expected_dir = "in" if edge.kind == "recv" else "out"
            if wire == channel and expected_dir == direction and edge.message is message:
                loc = edge.target
                break
        else:
            raise NotEnabled(
                f"evento {position} ({direction} {channel} {message.name}) no aceptado en {loc.name}"
            )
    return loc


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "SvcEdge",
    "SVC_EDGES",
    "ORC_EDGE_IDS",
    "TIMEOUT_EDGE",
    "declared_edges",
    "initial_state",
    "enabled",
    "is_deadlock",
    "is_committed",
    "fire",
    "fire_with_effects",
    "same_instance",
    "replay_service_projection",
]
