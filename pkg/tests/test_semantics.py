"""Tests del motor de semántica: habilitadas, fire, prioridades y variantes."""

import pytest

from src.core.errors import NotEnabled
from src.model.protocol import Configuration, MessageConst, StepMarker
from src.model.semantics import (
    SVC_EDGES,
    declared_edges,
    enabled,
    fire,
    fire_with_effects,
    initial_state,
    is_committed,
    is_deadlock,
    replay_service_projection,
)
from src.model.state import (
    ORC_OWNER,
    DelayClass,
    OrcLocation,
    Process,
    SvcLocation,
    TimerLocation,
    TransitionInstance,
)
from src.verification.checker import StateGraph

M = MessageConst


def _ejecutar_hasta_parar(params, limite=200):
    """Prefiere no elegir y parar; si no, la primera instancia habilitada."""
    state = initial_state(params)
    pasos = []
    for _ in range(limite):
        instancias = enabled(state, params)
        if not instancias:
            return state, pasos
        t = next((t for t in instancias if t.edge_id in ("choose_nochoice", "choose_stop")), instancias[0])
        state = fire(state, t, params)
        pasos.append(t)
    raise AssertionError("la ejecución no terminó")


def _avanzar_hasta(params, destino, preferidas, limite=100):
    """Camina por las aristas preferidas hasta que el orquestador llega a destino."""
    state = initial_state(params)
    for _ in range(limite):
        if state.orc_loc is destino:
            return state
        instancias = enabled(state, params)
        t = next((t for t in instancias if t.edge_id in preferidas), instancias[0])
        state = fire(state, t)
    raise AssertionError(f"no se alcanzó {destino.name}")


def _estados(params):
    graph = StateGraph(params)
    graph.explore()
    return graph.states


def test_estado_inicial(hacer_params):
    s = initial_state(hacer_params())
    assert s.orc_loc is OrcLocation.Initial
    assert s.svc_locs == (SvcLocation.Ready, SvcLocation.Ready)
    assert s.all_empty()
    assert s.orc2services[0].capacity == 3
    assert s.requester2offerer.capacity == 1
    assert s.svc_cfg == (Configuration.parse("DICT/CENT"),) * 2


def test_estado_inicial_no_determinista_sin_configuracion(hacer_params):
    params = hacer_params(config_mode="nondeterministic")
    s = initial_state(params)
    assert s.svc_cfg == (None, None)
    iniciales = enabled(s, params)
    assert sorted(t.param("conf") for t in iniciales) == ["DICT/CENT", "DICT/DIST", "MAJ/CENT", "MAJ/DIST"]
    s = fire(s, next(t for t in iniciales if t.param("conf") == "MAJ/DIST"))
    assert s.svc_cfg == (Configuration.parse("MAJ/DIST"),) * 2
    assert s.orc_vars.conf == Configuration.parse("MAJ/DIST")


def test_ejecucion_que_para_tras_el_chequeo(hacer_params):
    params = hacer_params()
    final, pasos = _ejecutar_hasta_parar(params)
    assert len(pasos) == 17
    assert final.all_terminated()
    assert final.all_empty()
    assert final.steps == (
        (0, StepMarker.ORC_CHECK),
        (1, StepMarker.ORC_CHECK),
        (0, StepMarker.ORC_STOP),
        (1, StepMarker.ORC_STOP),
    )
    assert is_deadlock(final, params)


def test_send_check_encola_tres_mensajes(hacer_params):
    params = hacer_params()
    s = fire(initial_state(params), enabled(initial_state(params), params)[0])
    s = fire(s, enabled(s, params)[0])
    assert s.orc_loc is OrcLocation.AwaitCheckReply
    assert s.orc2services[0].cells == (M.ORC_CHECK, M.DICTATORIAL, M.CENTRALISED)


def test_send_check_requiere_tres_celdas(hacer_params):
    params = hacer_params(queue_size=2)
    s = fire(initial_state(params), enabled(initial_state(params), params)[0])
    assert s.orc_loc is OrcLocation.CheckCompatibility
    assert enabled(s, params) == []


def test_configuracion_incompatible_lleva_a_error(hacer_params):
    params = hacer_params(config_mode="fixed:DICT/CENT;DICT/CENT,MAJ/CENT")
    estados = _estados(params)
    assert any(s.orc_loc is OrcLocation.Error and s.svc_locs[1] is SvcLocation.Error for s in estados)
    assert not any(s.orc_loc is OrcLocation.Start for s in estados)


def test_fire_de_instancia_no_habilitada(hacer_params):
    params = hacer_params()
    s = initial_state(params)
    t = TransitionInstance(Process.svc(0), "recv_check")
    with pytest.raises(NotEnabled):
        fire(s, t, params)
    with pytest.raises(NotEnabled):
        fire(s, t)
    with pytest.raises(NotEnabled):
        fire(s, TransitionInstance(Process.orc(), "send_stop"))


def test_fire_no_muta_el_estado(hacer_params):
    params = hacer_params()
    s = initial_state(params)
    copia = initial_state(params)
    fire(s, enabled(s, params)[0])
    assert s == copia


def test_ubicaciones_committed_tienen_prioridad(hacer_params):
    params = hacer_params(variant="committed_sends")
    for s in _estados(params):
        if is_committed(s, params):
            assert all(t.delay_class is DelayClass.COMMITTED for t in enabled(s, params))


def test_buffers_nunca_exceden_su_capacidad(hacer_params):
    for s in _estados(hacer_params()):
        assert all(len(b) <= b.capacity for b in s.buffers())


def test_sin_timeout_no_hay_estados_de_timeout(hacer_params):
    assert not any(s.any_timeout() for s in _estados(hacer_params()))


def test_timeout_lleva_a_todos_a_timeout(hacer_params):
    params = hacer_params(timeout_mode="nondet")
    s = initial_state(params)
    assert not any(t.process.kind == "st" for t in enabled(s, params))
    s = fire(s, enabled(s, params)[0])
    timers = [t for t in enabled(s, params) if t.process.kind == "st"]
    assert [t.process.index for t in timers] == [0, 1]
    s = fire(s, timers[1], params)
    assert s.orc_loc is OrcLocation.Timeout
    assert s.svc_locs == (SvcLocation.Timeout, SvcLocation.Timeout)
    assert s.timer_locs == (TimerLocation.Timeout, TimerLocation.Timeout)
    assert s.any_timeout()
    assert enabled(s, params) == []


def test_timeout_respeta_procesos_terminados(hacer_params):
    params = hacer_params(timeout_mode="nondet")
    for s in _estados(params):
        if s.any_timeout():
            assert s.orc_loc in (OrcLocation.Timeout, OrcLocation.Terminated)
            assert all(loc in (SvcLocation.Timeout, SvcLocation.Terminated) for loc in s.svc_locs)


def test_temporizadores_desarmados_al_terminar(hacer_params):
    params = hacer_params(timeout_mode="nondet")
    terminados = 0
    for s in _estados(params):
        timers = {t.process.index for t in enabled(s, params) if t.process.kind == "st"}
        assert all(s.svc_locs[j] is not SvcLocation.Terminated for j in timers)
        if s.all_terminated():
            terminados += 1
            assert enabled(s, params) == []
    assert terminados > 0


def test_seleccion_de_involucrados_mayoritaria(hacer_params):
    params = hacer_params(config_mode="fixed:MAJ/CENT;MAJ/CENT,MAJ/CENT")
    estado = _avanzar_hasta(params, OrcLocation.SelectInvolved, {"choose_choice"})
    instancias = enabled(estado, params)
    assert sorted(t.param("involved") for t in instancias) == [1, 2, 3]
    assert all(t.param("awaited") == t.param("involved") for t in instancias)


def test_variante_que_espera_todos_los_votos(hacer_params):
    params = hacer_params(config_mode="fixed:MAJ/CENT;MAJ/CENT,MAJ/CENT", variant="wait_all_choices")
    estado = _avanzar_hasta(params, OrcLocation.SelectInvolved, {"choose_choice"})
    assert {t.param("awaited") for t in enabled(estado, params)} == {3}


def test_match_usa_servicios_adyacentes(hacer_params):
    params = hacer_params(n_services=3, p_offer=0, config_mode="fixed:DICT/CENT;DICT/CENT,DICT/CENT,DICT/CENT")
    estado = _avanzar_hasta(params, OrcLocation.ActionSelect, {"choose_nochoice", "choose_action"})
    instancias = enabled(estado, params)
    assert [t.param("requester") for t in instancias] == [0, 1]
    s = fire(estado, instancias[1])
    assert s.orc_loc is OrcLocation.CentralisedMatch
    assert (s.orc_vars.requester, s.orc_vars.offerer) == (1, 2)


def test_fire_with_effects_informa_relojes_reiniciados(hacer_params):
    params = hacer_params()
    s = fire(initial_state(params), enabled(initial_state(params), params)[0])
    _, tocados = fire_with_effects(s, enabled(s, params)[0])
    assert tocados == frozenset({0})


def test_aristas_declaradas():
    aristas = declared_edges()
    assert set(aristas) == {"Orc", "Svc", "SocketTimeout"}
    assert aristas["SocketTimeout"] == frozenset({"timeout_fire"})
    assert {"initialize", "send_check", "select_match", "recv_match_ack"} <= aristas["Orc"]
    assert aristas["Svc"] == frozenset(e.edge_id for e in SVC_EDGES)


def test_marcadores_del_orquestador_nunca_aparecen(hacer_params):
    final, _ = _ejecutar_hasta_parar(hacer_params())
    assert all(owner != ORC_OWNER for owner, _ in final.steps)


# ============================================================================
# PROYECCIÓN DE UN SERVICIO
# ============================================================================

def test_proyeccion_de_oferente_centralizado():
    eventos = [
        ("in", "orc", M.ORC_CHECK), ("in", "orc", M.DICTATORIAL), ("in", "orc", M.CENTRALISED),
        ("out", "orc", M.ACK),
        ("in", "orc", M.ACTION), ("in", "orc", M.NOPAYLOAD), ("out", "orc", M.OFFER),
        ("in", "orc", M.ORC_STOP),
    ]
    assert replay_service_projection(eventos, Configuration.parse("DICT/CENT")) is SvcLocation.Terminated


def test_proyeccion_con_configuracion_incompatible():
    eventos = [
        ("in", "orc", M.ORC_CHECK), ("in", "orc", M.DICTATORIAL), ("in", "orc", M.CENTRALISED),
        ("out", "orc", M.ERROR),
    ]
    assert replay_service_projection(eventos, Configuration.parse("MAJ/CENT")) is SvcLocation.Error


def test_proyeccion_de_solicitante_distribuido():
    eventos = [
        ("in", "orc", M.ACTION), ("in", "orc", M.ADDRESS), ("in", "orc", M.PORT),
        ("out", "peer", M.REQUEST), ("in", "peer", M.OFFER), ("out", "peer", M.ACK),
        ("out", "orc", M.ACK),
    ]
    assert replay_service_projection(eventos, Configuration.parse("DICT/DIST")) is SvcLocation.Ready


def test_proyeccion_rechaza_evento_fuera_de_orden():
    with pytest.raises(NotEnabled):
        replay_service_projection([("out", "orc", M.OFFER)], Configuration.parse("DICT/CENT"))
