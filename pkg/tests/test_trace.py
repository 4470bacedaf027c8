"""Tests del formato de trazas y del replay contra la semántica."""

import pytest

from src.core.errors import NotEnabled, TraceFormatError
from src.model.semantics import enabled, fire, initial_state
from src.model.state import Process
from src.model.trace import Trace, format_trace, parse_trace, replay, replay_trace


def _traza_hasta_parar(params):
    state = initial_state(params)
    trace = Trace(state)
    while True:
        instancias = enabled(state, params)
        if not instancias:
            return trace
        t = next((t for t in instancias if t.edge_id in ("choose_nochoice", "choose_stop")), instancias[0])
        state = fire(state, t)
        trace.append(t, state)


def test_estructura_de_la_traza(hacer_params):
    trace = _traza_hasta_parar(hacer_params())
    assert len(trace) == 17
    assert len(trace.states) == 18
    assert trace.source_of(0) == trace.initial
    assert trace.source_of(5) == trace.steps[4].state
    assert trace.final.all_terminated()


def test_formato_de_lineas(hacer_params):
    texto = format_trace(_traza_hasta_parar(hacer_params()), header=["query: prueba"])
    lineas = texto.splitlines()
    assert lineas[0] == "# query: prueba"
    assert lineas[1] == "0 orc initialize params=conf=DICT/CENT"
    assert "4 svc0 send_ack marker=svc0:ORC_CHECK" in lineas


def test_formato_y_replay_reconstruyen_los_estados(hacer_params):
    params = hacer_params()
    trace = _traza_hasta_parar(params)
    entradas = parse_trace(format_trace(trace))
    assert entradas[0] == (Process.orc(), "initialize", (("conf", "DICT/CENT"),))
    reproducida = replay(params, entradas, steps_capacity=32)
    assert reproducida.states == trace.states


def test_replay_trace_desde_su_estado_inicial(hacer_params):
    params = hacer_params()
    trace = _traza_hasta_parar(params)
    assert replay_trace(params, trace).final == trace.final


def test_replay_rechaza_pasos_no_habilitados(hacer_params):
    params = hacer_params()
    with pytest.raises(NotEnabled):
        replay(params, [(Process.svc(0), "recv_check", ())])
    with pytest.raises(NotEnabled):
        replay(params, [(Process.orc(), "initialize", (("conf", "MAJ/CENT"),))])


def test_tiempos_en_la_traza(hacer_params):
    params = hacer_params()
    s = initial_state(params)
    t = enabled(s, params)[0]
    trace = Trace(s)
    trace.append(t, fire(s, t), 0.25)
    assert format_trace(trace).strip().endswith("t=0.2500")
    assert parse_trace(format_trace(trace))[0][1] == "initialize"


@pytest.mark.parametrize("texto", [
    "0 orc\n",
    "1 orc initialize\n",
    "0 orc initialize\n0 svc0 recv_check\n",
    "0 bob initialize\n",
    "0 orc initialize params=conf\n",
    "0 orc initialize color=rojo\n",
])
def test_trazas_mal_formadas(texto):
    with pytest.raises(TraceFormatError):
        parse_trace(texto)
