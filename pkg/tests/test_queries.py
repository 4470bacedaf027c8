"""Tests del lenguaje de queries y de la evaluación de predicados."""

import pytest

from src.core import data_path
from src.core.errors import MalformedPredicate, QuerySyntaxError, StepsQuerySyntaxError
from src.model.predicates import eval_expression, eval_predicate
from src.model.protocol import StepMarker
from src.model.queries import (
    AlwaysEventually,
    ExistsGlobally,
    ExpectedMax,
    Invariant,
    LeadsTo,
    Probability,
    Reach,
    parse_expression,
    parse_predicate,
    parse_query,
    parse_steps_query,
    query_steps_capacity,
    read_query_file,
    steps_predicate,
)
from src.model.semantics import enabled, fire, initial_state
from src.model.state import ORC_OWNER


@pytest.mark.parametrize("texto,tipo", [
    ("A[] (!deadlock || allTerminated())", Invariant),
    ("E<> svc(0).Error", Reach),
    ("E[] (allEmpty() && !anyTimeout())", ExistsGlobally),
    ("A<> allTerminated()", AlwaysEventually),
    ("orc.Stop --> (allTerminated() || anyTimeout())", LeadsTo),
    ("Pr[<=500](<> exists i: isFull(i))", Probability),
    ("E[<=500;100](max: sum j: occ(j))", ExpectedMax),
])
def test_parsear_operadores(texto, tipo):
    assert isinstance(parse_query(texto), tipo)


def test_parametros_de_queries_estadisticas():
    q = parse_query("Pr[<=250](<> anyTimeout())")
    assert q.horizon == 250
    q = parse_query("E[<=500;100](max: sum j: occ(j))")
    assert (q.horizon, q.runs) == (500, 100)


@pytest.mark.parametrize("texto", [
    "A[] (!deadlock || allTerminated())",
    "E<> !(allEmpty() && anyTimeout())",
    "A[] !anyTimeout()",
])
def test_negacion_se_muestra_como_se_escribe(texto):
    assert str(parse_query(texto)) == texto


def test_nombres_que_empiezan_como_operadores():
    q = parse_query("A[] (orc.AwaitVotes -> !svc(0).Error)")
    assert isinstance(q, Invariant)
    q = parse_query("E<> orc.AwaitAck")
    assert isinstance(q, Reach)


def test_todos_los_archivos_de_queries_parsean():
    archivos = sorted(data_path("queries").glob("*.q"))
    assert archivos
    for archivo in archivos:
        for linea in read_query_file(archivo):
            parse_query(linea)


@pytest.mark.parametrize("texto", [
    "A[] (",
    "A[] orc.NoExiste",
    "E<> svc(0).d1 == NOEXISTE",
    "steps[0] == svc0:ORC_CHECK",
    "E<> steps[0] == bob:ORC_CHECK",
    "B[] true",
])
def test_queries_mal_formadas(texto):
    with pytest.raises(QuerySyntaxError):
        parse_query(texto)


def test_capacidad_de_steps_de_una_query():
    assert query_steps_capacity(parse_query("E<> steps[3] == svc0:ORC_STOP")) == 4
    assert query_steps_capacity(parse_query("A[] true")) == 0
    assert query_steps_capacity(parse_query("E[<=10;2](max: N)")) == 0


def test_parsear_steps_query():
    constraints = parse_steps_query(
        "# comentario\nsteps[0] == svc0:ORC_CHECK\nsteps[1] == orc:ORC_STOP\n"
    )
    assert constraints == [(0, 0, StepMarker.ORC_CHECK), (1, ORC_OWNER, StepMarker.ORC_STOP)]


def test_steps_query_con_indices_no_consecutivos():
    with pytest.raises(StepsQuerySyntaxError):
        parse_steps_query("steps[0] == svc0:ORC_CHECK\nsteps[2] == svc1:ORC_CHECK\n")


def test_steps_query_con_linea_que_no_es_steps():
    with pytest.raises(StepsQuerySyntaxError):
        parse_steps_query("allEmpty()\n")
    with pytest.raises(StepsQuerySyntaxError):
        parse_steps_query("steps[0] == svc0:NADA\n")


def test_archivos_de_steps_distribuidos():
    for archivo in sorted(data_path("steps").glob("*.steps")):
        constraints = parse_steps_query(archivo.read_text(encoding="utf-8"))
        assert [k for k, _, _ in constraints] == list(range(len(constraints)))
    dict_cent = parse_steps_query(data_path("steps", "dict-cent.steps").read_text(encoding="utf-8"))
    assert len(dict_cent) == 12


# ============================================================================
# EVALUACIÓN
# ============================================================================

def test_predicados_en_el_estado_inicial(hacer_params):
    params = hacer_params()
    s = initial_state(params)
    assert eval_predicate(s, parse_predicate("orc.Initial"))
    assert eval_predicate(s, parse_predicate("forall i: svc(i).Ready"))
    assert eval_predicate(s, parse_predicate("svc(1).d1 == NIL"))
    assert not eval_predicate(s, parse_predicate("svc(1).d1 != NIL"))
    assert not eval_predicate(s, parse_predicate("exists i: isFull(i)"))
    assert eval_predicate(s, parse_predicate("allEmpty() && !anyTimeout()"))
    assert eval_predicate(s, parse_predicate("st(0).Idle"))
    assert eval_predicate(s, parse_predicate("exists i: (i == N - 1 && svc(i).Ready)"))
    assert not eval_predicate(s, parse_predicate("deadlock"), params)


def test_deadlock_requiere_parametros(hacer_params):
    s = initial_state(hacer_params())
    with pytest.raises(MalformedPredicate):
        eval_predicate(s, parse_predicate("deadlock"))


def test_indice_fuera_de_rango(hacer_params):
    s = initial_state(hacer_params())
    with pytest.raises(MalformedPredicate):
        eval_predicate(s, parse_predicate("svc(2).Ready"))
    with pytest.raises(MalformedPredicate):
        eval_predicate(s, parse_predicate("isFull(N)"))


def test_implicacion_y_disyuncion(hacer_params):
    s = initial_state(hacer_params())
    assert eval_predicate(s, parse_predicate("orc.Stop -> false"))
    assert eval_predicate(s, parse_predicate("orc.Stop or orc.Initial"))
    assert not eval_predicate(s, parse_predicate("not orc.Initial"))


def test_expresiones_de_ocupacion(hacer_params):
    params = hacer_params()
    s = initial_state(params)
    suma = parse_expression("sum j: occ(j)")
    assert eval_expression(s, suma) == 0
    assert eval_expression(s, parse_expression("[allEmpty()] + N * 2")) == 5
    s = fire(s, enabled(s, params)[0])
    s = fire(s, enabled(s, params)[0])
    assert eval_expression(s, suma) == 3
    assert eval_expression(s, parse_expression("occ(0) - occ_back(0)")) == 3
    assert eval_predicate(s, parse_predicate("isFull(0)"))


def test_predicado_de_steps(hacer_params):
    s = initial_state(hacer_params())
    vacio = steps_predicate([])
    assert eval_predicate(s, vacio)
    pred = steps_predicate([(0, 0, StepMarker.ORC_CHECK), (1, 1, StepMarker.ORC_CHECK)])
    assert not eval_predicate(s, pred)
    assert eval_predicate(s, parse_predicate("steps[0] == orc:UNSET"))
