"""Tests del vocabulario del protocolo y del Buffer acotado."""

import pytest

from src.core.errors import BufferEmpty, BufferFull, IllegalMessage, InvalidParams
from src.model.protocol import (
    ActionKind,
    Buffer,
    ChoiceKind,
    Configuration,
    MessageConst,
    config_compatible,
    dequeue,
    enqueue,
    occupancy,
)

M = MessageConst


def test_enqueue_respeta_orden_fifo():
    b = enqueue(enqueue(Buffer.empty(3), M.ORC_CHECK), M.DICTATORIAL)
    m, b = dequeue(b)
    assert m is M.ORC_CHECK
    m, b = dequeue(b)
    assert m is M.DICTATORIAL
    assert len(b) == 0


def test_enqueue_no_muta_el_original():
    original = Buffer.empty(2)
    nuevo = enqueue(original, M.ACK)
    assert len(original) == 0
    assert nuevo.cells == (M.ACK,)


def test_enqueue_en_buffer_lleno_falla():
    b = enqueue(Buffer.empty(1), M.ACK)
    with pytest.raises(BufferFull):
        enqueue(b, M.ERROR)


def test_enqueue_nil_es_ilegal():
    with pytest.raises(IllegalMessage):
        enqueue(Buffer.empty(2), M.NIL)


def test_dequeue_en_buffer_vacio_falla():
    with pytest.raises(BufferEmpty):
        dequeue(Buffer.empty(2))


def test_occupancy_y_cabeza():
    b = Buffer.empty(3)
    assert occupancy(b) == (0, 3, False, True)
    assert b.head is M.NIL
    b = enqueue(enqueue(enqueue(b, M.ACTION), M.NOPAYLOAD), M.ORC_STOP)
    assert occupancy(b) == (3, 0, True, False)
    assert b.head is M.ACTION
    assert str(b) == "[ACTION,NOPAYLOAD,ORC_STOP]"


def test_buffers_iguales_tienen_el_mismo_hash():
    a = enqueue(Buffer.empty(2), M.ACK)
    b = enqueue(Buffer.empty(2), M.ACK)
    assert a == b
    assert len({a, b}) == 1


@pytest.mark.parametrize("texto,esperado", [
    ("DICT/CENT", Configuration(ChoiceKind.DICTATORIAL, ActionKind.CENTRALISED)),
    ("maj/dist", Configuration(ChoiceKind.MAJORITARIAN, ActionKind.DISTRIBUTED)),
    ("MAJORITARIAN/CENTRALISED", Configuration(ChoiceKind.MAJORITARIAN, ActionKind.CENTRALISED)),
])
def test_parsear_configuracion(texto, esperado):
    assert Configuration.parse(texto) == esperado


@pytest.mark.parametrize("texto", ["DICT", "DICT/FOO", "X/CENT", "DICT/CENT/MAJ"])
def test_configuracion_invalida(texto):
    with pytest.raises(InvalidParams):
        Configuration.parse(texto)


def test_configuraciones_y_etiquetas():
    todas = Configuration.all()
    assert len(todas) == 4
    assert [str(c) for c in todas] == ["DICT/CENT", "DICT/DIST", "MAJ/CENT", "MAJ/DIST"]
    c = Configuration.parse("MAJ/DIST")
    assert c.choice_tag is M.MAJORITARIAN
    assert c.action_tag is M.DISTRIBUTED


def test_compatibilidad_exige_igualdad():
    assert config_compatible(Configuration.parse("DICT/CENT"), Configuration.parse("DICT/CENT"))
    assert not config_compatible(Configuration.parse("DICT/CENT"), Configuration.parse("DICT/DIST"))
    assert not config_compatible(Configuration.parse("MAJ/CENT"), Configuration.parse("DICT/CENT"))
