"""Tests de la tabla de anotaciones y la interpolación $(...)."""

import pytest

from src.core.errors import AnnotationSyntaxError, UnresolvedInterpolation
from src.model.semantics import enabled, fire, initial_state
from src.model.state import Process
from src.testgen.annotations import interpolate, load_annotations, parse_annotations


def test_tabla_curada(tabla_curada):
    assert not tabla_curada.is_empty()
    assert tabla_curada.prefix["Svc"] == ["LISTEN %{svc$(svc.id)_port}", "ACCEPT"]
    assert tabla_curada.postfix["Svc"] == ["CLOSE"]
    assert tabla_curada.lines_for("Svc", "send_ack") == ['SEND "ACK"']
    assert tabla_curada.lines_for("Svc", "recv_check_ack") == []


def test_lineas_en_orden_de_aparicion():
    tabla = parse_annotations(
        "# comentario\n"
        "Svc.recv_check ::= RECV -> msg\n"
        "\n"
        "Svc.recv_check ::= ASSERT msg == \"ORC_CHECK\"\n"
        "Orc.prefix ::= COMMENT inicio\n"
    )
    assert len(tabla) == 1
    assert tabla.lines_for("Svc", "recv_check") == ["RECV -> msg", 'ASSERT msg == "ORC_CHECK"']
    assert tabla.prefix == {"Orc": ["COMMENT inicio"]}


@pytest.mark.parametrize(
    "texto",
    [
        "Svc.recv_check RECV -> msg",
        "Foo.recv_check ::= RECV -> msg",
        "Svc.no_existe ::= RECV -> msg",
        "Orc.recv_check ::= RECV -> msg",
    ],
)
def test_anotaciones_invalidas(texto):
    with pytest.raises(AnnotationSyntaxError):
        parse_annotations(texto)


def test_tabla_inexistente():
    with pytest.raises(AnnotationSyntaxError):
        load_annotations("no-existe")


def test_interpolacion_de_variables(hacer_params):
    params = hacer_params()
    s = initial_state(params)
    assert interpolate("svc$(svc.id)_port", s, Process.svc(1)) == "svc1_port"
    assert interpolate("$( svc.cfg.action )", s, Process.svc(0)) == "CENTRALISED"
    assert interpolate("paso $(step)", s, Process.orc()) == "paso 0"
    s = fire(s, enabled(s, params)[0])
    assert interpolate("$(orc.conf.choice) $(orc.i)", s, Process.orc()) == "DICTATORIAL 0"
    assert interpolate("sin variables", s, Process.orc()) == "sin variables"


def test_interpolacion_sin_valor(hacer_params):
    s = initial_state(hacer_params(config_mode="nondeterministic"))
    with pytest.raises(UnresolvedInterpolation):
        interpolate("$(orc.conf.choice)", s, Process.orc())
    with pytest.raises(UnresolvedInterpolation):
        interpolate("$(svc.cfg.choice)", s, Process.svc(0))
    with pytest.raises(UnresolvedInterpolation):
        interpolate("$(svc.id)", s, Process.orc())
    with pytest.raises(UnresolvedInterpolation):
        interpolate("$(desconocida)", s, Process.svc(0))
