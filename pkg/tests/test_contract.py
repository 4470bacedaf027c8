"""Tests de etiquetas y autómatas de contrato."""

import pytest

from src.core.errors import IllegalLabel, ParseError
from src.runtime.contract import STOP_LABEL, Label, load_contract, parse_contract


@pytest.mark.parametrize(
    "texto,forma,oferente,solicitante",
    [
        ("(!euro,-)", "offer", 0, None),
        ("(-,?tea)", "request", None, 1),
        ("(?coffee,!coffee)", "match", 1, 0),
    ],
)
def test_formas_de_etiqueta(texto, forma, oferente, solicitante):
    label = Label.parse(texto)
    assert label.shape == forma
    assert label.offerer == oferente
    assert label.requester == solicitante
    assert str(label) == texto


@pytest.mark.parametrize("texto", ["(?coffee,!tea)", "(!a,!b)", "(-,-)", "(?a,?a)"])
def test_etiquetas_ilegales(texto):
    with pytest.raises(IllegalLabel):
        Label.parse(texto)


@pytest.mark.parametrize("texto", ["!euro,-", "(euro,-)", "(!1a,-)"])
def test_etiquetas_mal_formadas(texto):
    with pytest.raises(ParseError):
        Label.parse(texto)


def test_contrato_del_cafe(contrato_cafe):
    assert contrato_cafe.rank == 2
    assert contrato_cafe.initial == "q0"
    assert contrato_cafe.finals == frozenset({"q2"})
    assert contrato_cafe.states == frozenset({"q0", "q1", "q2"})
    assert contrato_cafe.candidates("q0") == ["(!euro,-)"]
    assert contrato_cafe.candidates("q2") == ["(!euro,-)", STOP_LABEL]
    assert contrato_cafe.involved("q1") == frozenset({0, 1})
    assert contrato_cafe.involved("q0") == frozenset({0})


def test_lenguaje_del_cafe(contrato_cafe):
    assert contrato_cafe.accepts(["(!euro,-)", "(?coffee,!coffee)"])
    assert contrato_cafe.accepts(["(!euro,-)", "(?coffee,!coffee)", "(!euro,-)", "(!euro,-)"])
    assert not contrato_cafe.accepts(["(!euro,-)"])
    assert not contrato_cafe.accepts(["(?coffee,!coffee)"])
    assert not contrato_cafe.accepts([])


def test_contrato_solo_ofertas():
    contract = load_contract("offers-only")
    assert contract.rank == 1
    assert contract.candidates("q0") == ["(!ping)", STOP_LABEL]
    assert contract.accepts([])


@pytest.mark.parametrize(
    "texto",
    [
        "initial q0\nq0 -> q0 : (!a)\n",
        "rank 1\nq0 -> q0 : (!a)\n",
        "rank 0\ninitial q0\n",
        "rank 1\nrank 1\ninitial q0\n",
        "rank 2\ninitial q0\nq0 -> q0 : (!a)\n",
        "rank 1\ninitial q0\nq0 => q0 : (!a)\n",
        "rank 1\ninitial q0\nq0 -> q0 : (?a)(!a)\n",
    ],
)
def test_contratos_invalidos(texto):
    with pytest.raises(ParseError):
        parse_contract(texto)


def test_error_de_etiqueta_conserva_la_linea():
    with pytest.raises(IllegalLabel, match="línea 3"):
        parse_contract("rank 2\ninitial q0\nq0 -> q0 : (!a,!b)\n")


def test_contrato_inexistente():
    with pytest.raises(ParseError):
        load_contract("no-existe")
