"""Compara los veredictos del checker con el oráculo explícito de tests/oracle.py."""

import pytest

from src.model.params import load_params
from src.verification.checker import check
from src.model.queries import parse_query
from tests import oracle as o


def _consultas():
    """Pares (consulta textual, veredicto del oráculo como función)."""
    return [
        ("A[] (!deadlock || allTerminated())",
         lambda m: m.invariant(lambda s, d: not d or o.all_terminated(s, d))),
        ("A[] (allTerminated() -> allEmpty())",
         lambda m: m.invariant(lambda s, d: not o.all_terminated(s, d) or o.all_empty(s, d))),
        ("E[] (allEmpty() && !anyTimeout())",
         lambda m: m.exists_globally(o.all_empty)),
        ("orc.Stop --> (allTerminated() || anyTimeout())",
         lambda m: m.leads_to(o.orc_at("run", tag="stop"), o.all_terminated)),
        ("A<> (allTerminated() || anyTimeout() || deadlock)",
         lambda m: m.always_eventually(lambda s, d: o.all_terminated(s, d) or d)),
        ("E<> allTerminated()",
         lambda m: m.reach(o.all_terminated)),
        ("E<> svc(0).Error",
         lambda m: m.reach(o.svc_at(0, "Error"))),
        ("E<> orc.Error",
         lambda m: m.reach(o.orc_at("error"))),
        ("A[] !orc.Start",
         lambda m: m.invariant(lambda s, d: not o.orc_at("start")(s, d))),
        ("E[] true",
         lambda m: m.exists_globally(lambda s, d: True)),
        ("A<> true",
         lambda m: m.always_eventually(lambda s, d: True)),
    ]


CONSULTAS = _consultas()

ESCENARIOS = {
    "dict-cent-n2": {"config_mode": "fixed:DICT/CENT;DICT/CENT,DICT/CENT"},
    "dict-cent-n2-q2": {"config_mode": "fixed:DICT/CENT;DICT/CENT,DICT/CENT", "queue_size": "2"},
    "dict-cent-n1": {"n_services": "1", "config_mode": "fixed:DICT/CENT;DICT/CENT"},
    "incompatible": {"config_mode": "fixed:DICT/CENT;DICT/CENT,MAJ/CENT"},
    "svc0-incompatible": {"config_mode": "fixed:DICT/CENT;DICT/DIST,DICT/CENT"},
    "solo-ofertas": {},
}


@pytest.fixture(scope="module", params=sorted(ESCENARIOS))
def escenario(request):
    if request.param == "solo-ofertas":
        params = load_params("oracle-offers")
    else:
        params = load_params("oracle-dict-cent", ESCENARIOS[request.param])
    return params, o.Oracle(params)


@pytest.mark.parametrize("texto,esperado", CONSULTAS, ids=[c for c, _ in CONSULTAS])
def test_checker_coincide_con_el_oraculo(escenario, texto, esperado):
    params, modelo = escenario
    veredicto = check(params, parse_query(texto))
    assert veredicto.holds == esperado(modelo), texto


def test_el_oraculo_cubre_las_cuatro_configuraciones():
    params = load_params("oracle-offers")
    modelo = o.Oracle(params)
    confs = {s[0][1] for s in modelo.succ if s[0][1] is not None}
    assert len(confs) == 4
    assert modelo.reach(o.all_terminated)


def test_el_oraculo_rechaza_la_eleccion_mayoritaria():
    params = load_params("oracle-offers", {"config_mode": "fixed:MAJ/CENT;MAJ/CENT", "p_choice": "1"})
    with pytest.raises(o.Unsupported):
        o.Oracle(params)
