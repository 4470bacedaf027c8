"""Tests del codec de tramas y de los streams asyncio."""

import asyncio

import pytest

from src.core.errors import MalformedFrame, PeerClosed, PeerTimeout
from src.runtime.frames import (
    Listener,
    close_writer,
    connect,
    decode_frame,
    drain_unread,
    encode_frame,
    read_frame,
    render,
    write_frame,
)


def test_codificacion_de_tramas():
    assert encode_frame(None) == b"\x00"
    assert encode_frame("") == b"\x01\x00\x00\x00\x00"
    assert encode_frame("ACK") == b"\x01\x00\x00\x00\x03ACK"
    assert encode_frame("ñ") == b"\x01\x00\x00\x00\x02\xc3\xb1"


def test_decodificacion_deja_el_resto():
    datos = encode_frame("euro") + encode_frame(None) + b"\x07"
    payload, resto = decode_frame(datos)
    assert payload == "euro"
    payload, resto = decode_frame(resto)
    assert payload is None
    assert resto == b"\x07"


@pytest.mark.parametrize(
    "datos",
    [b"", b"\x02", b"\x01\x00\x00", b"\x01\x00\x00\x00\x05abc", b"\x01\x00\x00\x00\x01\xff"],
)
def test_tramas_mal_formadas(datos):
    with pytest.raises(MalformedFrame):
        decode_frame(datos)


def test_render():
    assert render(None) == "NULL"
    assert render("euro") == "'euro'"


async def _par():
    listener = await Listener.open("127.0.0.1", 0)
    cliente = await connect("127.0.0.1", listener.port)
    servidor = await listener.accept(1.0)
    return listener, cliente, servidor


async def test_intercambio_de_tramas():
    listener, (c_reader, c_writer), (s_reader, s_writer) = await _par()
    try:
        await write_frame(c_writer, "ORC_CHECK")
        await write_frame(c_writer, None)
        assert await read_frame(s_reader, 1.0) == "ORC_CHECK"
        assert await read_frame(s_reader, 1.0) is None
    finally:
        await close_writer(c_writer)
        await listener.close()


async def test_lectura_con_plazo():
    listener, (_, c_writer), (s_reader, _) = await _par()
    try:
        with pytest.raises(PeerTimeout):
            await read_frame(s_reader, 0.05)
    finally:
        await close_writer(c_writer)
        await listener.close()


async def test_cierre_del_par():
    listener, (_, c_writer), (s_reader, _) = await _par()
    try:
        await close_writer(c_writer)
        with pytest.raises(PeerClosed):
            await read_frame(s_reader, 1.0)
    finally:
        await listener.close()


async def test_trama_truncada_en_el_stream():
    listener, (_, c_writer), (s_reader, _) = await _par()
    try:
        c_writer.write(b"\x01\x00\x00\x00\x09abc")
        await c_writer.drain()
        await close_writer(c_writer)
        with pytest.raises(MalformedFrame):
            await read_frame(s_reader, 1.0)
    finally:
        await listener.close()


async def test_bytes_sin_leer():
    listener, (_, c_writer), (s_reader, _) = await _par()
    try:
        await write_frame(c_writer, "ACK")
        await close_writer(c_writer)
        assert await drain_unread(s_reader, 1.0) == len(encode_frame("ACK"))
    finally:
        await listener.close()


async def test_connect_reintenta_hasta_que_hay_listener(puerto_libre):
    puerto = puerto_libre()

    async def abrir_tarde():
        await asyncio.sleep(0.2)
        return await Listener.open("127.0.0.1", puerto)

    tarea = asyncio.create_task(abrir_tarde())
    _, writer = await connect("127.0.0.1", puerto, window=3.0)
    listener = await tarea
    await close_writer(writer)
    await listener.close()


async def test_connect_sin_listener(puerto_libre):
    with pytest.raises(PeerTimeout):
        await connect("127.0.0.1", puerto_libre(), window=0.2)


async def test_accept_sin_conexiones():
    listener = await Listener.open("127.0.0.1", 0)
    try:
        with pytest.raises(PeerTimeout):
            await listener.accept(0.05)
    finally:
        await listener.close()


async def test_puerto_disponible_tras_cerrar():
    listener = await Listener.open("127.0.0.1", 0)
    puerto = listener.port
    await listener.close()
    assert puerto > 0
    assert listener.port == puerto
