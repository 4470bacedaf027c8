"""Tests de bindings y concretización de tests abstractos."""

import pytest

from src.core.errors import BindingsSyntaxError, ScriptError, UnboundPlaceholder
from src.testgen.concretize import Bindings, concretize, concretize_text, load_bindings, parse_bindings
from src.testgen.generator import AbstractTest, emit_abstract_test


def test_parseo_de_bindings():
    b = parse_bindings(
        '# comentario\n'
        'host = "127.0.0.1"\n'
        'vacio = NULL   # sin carga\n'
        'cita = "dijo \\"hola\\""\n'
    )
    assert b.values == {"host": "127.0.0.1", "vacio": None, "cita": 'dijo "hola"'}
    assert parse_bindings(b.to_text()).values == b.values


@pytest.mark.parametrize(
    "texto",
    [
        'a = "1"\na = "2"\n',
        "a = 1\n",
        'a "1"\n',
        'a = "%{b}"\n',
    ],
)
def test_bindings_invalidos(texto):
    with pytest.raises(BindingsSyntaxError):
        parse_bindings(texto)


def test_busqueda_con_y_sin_indice():
    b = Bindings({"svc0_offer": None, "svc0_action[1]": "coffee"})
    assert "svc0_offer[7]" in b
    assert b.lookup("svc0_offer[7]") is None
    assert b.lookup("svc0_action[1]") == "coffee"
    assert "svc0_action[0]" not in b
    assert "svc0_action" not in b


def test_merged_sobrescribe():
    b = Bindings({"a": "1", "b": "2"}).merged(Bindings({"b": "3"}))
    assert b.values == {"a": "1", "b": "3"}


def test_sustitucion_textual():
    b = Bindings({"x": 'a"b', "y": None})
    assert concretize_text("SEND %{x}", b) == 'SEND "a\\"b"'
    assert concretize_text("ASSERT msg == %{y[2]}", b) == "ASSERT msg == NULL"


def test_placeholders_sin_valor():
    with pytest.raises(UnboundPlaceholder) as info:
        concretize_text("SEND %{z[1]} %{w} %{z[1]}", Bindings({}))
    assert info.value.missing == ["w", "z[1]"]


def test_concretizacion_del_cafe(testigo_cafe, tabla_curada):
    test = emit_abstract_test(testigo_cafe, tabla_curada)
    script = concretize(test, load_bindings("cafe-dict-cent"))
    assert set(script.endpoints) == {"orc", "svc0", "svc1"}
    assert set(script.runnable) == {"svc0", "svc1"}
    texto = script.to_text()
    assert "%{" not in texto
    assert 'svc0: ASSERT msg == "euro"' in texto
    assert 'svc1: ASSERT msg == "coffee"' in texto
    assert 'svc0: SEND NULL' in texto
    assert script.endpoints["svc0"][0].port == 7401


def test_concretizacion_incompleta(testigo_cafe, tabla_curada):
    test = emit_abstract_test(testigo_cafe, tabla_curada)
    incompletos = Bindings({k: v for k, v in load_bindings("cafe-dict-cent").values.items() if k != "svc1_port"})
    with pytest.raises(UnboundPlaceholder) as info:
        concretize(test, incompletos)
    assert info.value.missing == ["svc1_port"]


def test_script_invalido_tras_concretizar():
    test = AbstractTest.from_text("svc0: ASSERT msg == %{x}\n")
    with pytest.raises(ScriptError):
        concretize(test, Bindings({"x": "1"}))


def test_bindings_inexistentes():
    with pytest.raises(BindingsSyntaxError):
        load_bindings("no-existe")
