"""
Codec de tramas del protocolo en vivo.

Formato (big-endian):

    kind=0                      -> 00                     (payload nulo)
    kind=1, len, bytes UTF-8    -> 01 LL LL LL LL <bytes> (texto)

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import asyncio
import logging
import struct
from typing import Optional, Tuple

from tenacity import AsyncRetrying, retry_if_exception_type, stop_after_delay, wait_fixed

from src.core import CONNECT_RETRY, SOCKET_DEADLINE
from src.core.errors import MalformedFrame, PeerClosed, PeerTimeout

logger = logging.getLogger(__name__)

KIND_NULL = 0
KIND_TEXT = 1
HEADER = struct.Struct(">I")
HEADER_SIZE = HEADER.size
MAX_PAYLOAD = 2**32 - 1

Payload = Optional[str]


def encode_frame(payload: Payload) -> bytes:
    """Codifica un payload (None = trama nula)."""
    if payload is None:
        return bytes([KIND_NULL])
    body = payload.encode("utf-8")
    if len(body) > MAX_PAYLOAD:
        raise MalformedFrame(f"payload demasiado grande: {len(body)} bytes")
    return bytes([KIND_TEXT]) + HEADER.pack(len(body)) + body


def decode_frame(data: bytes) -> Tuple[Payload, bytes]:
    """
    Decodifica exactamente una trama.

    Returns:
        (payload, bytes restantes)

    Raises:
        MalformedFrame: Tipo desconocido o trama truncada
    """
    if not data:
        raise MalformedFrame("trama vacía")
    kind = data[0]
    if kind == KIND_NULL:
        return None, data[1:]
    if kind != KIND_TEXT:
        raise MalformedFrame(f"tipo de trama desconocido: {kind}")
    if len(data) < 1 + HEADER_SIZE:
        raise MalformedFrame("longitud truncada")
    (length,) = HEADER.unpack_from(data, 1)
    end = 1 + HEADER_SIZE + length
    if len(data) < end:
        raise MalformedFrame(f"cuerpo truncado: se esperaban {length} bytes")
    try:
        text = data[1 + HEADER_SIZE:end].decode("utf-8")
    except UnicodeDecodeError as e:
        raise MalformedFrame(f"cuerpo no es UTF-8: {e}") from None
    return text, data[end:]


# ============================================================================
# STREAMS ASYNCIO
# ============================================================================

async def _read_frame(reader: asyncio.StreamReader) -> Payload:
    try:
        head = await reader.readexactly(1)
    except asyncio.IncompleteReadError:
        raise PeerClosed("conexión cerrada por el par") from None
    kind = head[0]
    if kind == KIND_NULL:
        return None
    if kind != KIND_TEXT:
        raise MalformedFrame(f"tipo de trama desconocido: {kind}")
    try:
        (length,) = HEADER.unpack(await reader.readexactly(HEADER_SIZE))
        body = await reader.readexactly(length)
    except asyncio.IncompleteReadError:
        raise MalformedFrame("trama truncada") from None
    try:
        return body.decode("utf-8")
    except UnicodeDecodeError as e:
        raise MalformedFrame(f"cuerpo no es UTF-8: {e}") from None


async def read_frame(reader: asyncio.StreamReader, deadline: float = SOCKET_DEADLINE) -> Payload:
    """
    Lee una trama completa con plazo.

    Raises:
        PeerTimeout: Sin trama dentro del plazo
        PeerClosed: El par cerró la conexión
        MalformedFrame: Trama inválida
    """
    try:
        return await asyncio.wait_for(_read_frame(reader), timeout=deadline)
    except asyncio.TimeoutError:
        raise PeerTimeout(f"sin tráfico durante {deadline}s") from None


async def write_frame(writer: asyncio.StreamWriter, payload: Payload) -> None:
    writer.write(encode_frame(payload))
    await writer.drain()


async def drain_unread(reader: asyncio.StreamReader, deadline: float = SOCKET_DEADLINE) -> int:
    """Lee hasta EOF y devuelve cuántos bytes quedaban sin leer."""
    unread = 0
    try:
        while True:
            chunk = await asyncio.wait_for(reader.read(4096), timeout=deadline)
            if not chunk:
                return unread
            unread += len(chunk)
    except asyncio.TimeoutError:
        logger.warning(f"El par no cerró la conexión en {deadline}s ({unread} bytes sin leer)")
        return unread
    except ConnectionError:
        return unread


async def close_writer(writer: asyncio.StreamWriter) -> None:
    writer.close()
    try:
        await writer.wait_closed()
    except ConnectionError:
        pass


def render(payload: Payload) -> str:
    """Representación legible de un payload para logs y reportes."""
    return "NULL" if payload is None else repr(payload)


# ============================================================================
# CONEXIONES
# ============================================================================

Streams = Tuple[asyncio.StreamReader, asyncio.StreamWriter]


async def connect(host: str, port: int, window: float = CONNECT_RETRY) -> Streams:
    """
    Abre una conexión reintentando mientras el listener del par no existe.

    Raises:
        PeerTimeout: Si no se pudo conectar dentro de window segundos
    """
    try:
        async for attempt in AsyncRetrying(
            stop=stop_after_delay(window),
            wait=wait_fixed(0.05),
            retry=retry_if_exception_type(OSError),
            reraise=True,
        ):
            with attempt:
                streams = await asyncio.open_connection(host, port)
    except OSError as e:
        raise PeerTimeout(f"no se pudo conectar a {host}:{port} en {window}s: {e}") from None
    logger.debug(f"Conectado a {host}:{port}")
    return streams


class Listener:
    """Socket en escucha que entrega las conexiones aceptadas en orden."""

    def __init__(self) -> None:
        self._queue: "asyncio.Queue[Streams]" = asyncio.Queue()
        self._release = asyncio.Event()
        self._server: Optional[asyncio.AbstractServer] = None
        self._writers: list = []
        self._port = 0

    @classmethod
    async def open(cls, host: str, port: int) -> "Listener":
        listener = cls()
        listener._server = await asyncio.start_server(listener._on_connect, host, port)
        listener._port = listener._server.sockets[0].getsockname()[1]
        logger.debug(f"Escuchando en {host}:{listener.port}")
        return listener

    @property
    def port(self) -> int:
        return self._port

    async def _on_connect(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        self._writers.append(writer)
        await self._queue.put((reader, writer))
        # El callback no debe terminar mientras la sesión usa los streams
        await self._release.wait()

    async def accept(self, deadline: Optional[float] = SOCKET_DEADLINE) -> Streams:
        try:
            return await asyncio.wait_for(self._queue.get(), timeout=deadline)
        except asyncio.TimeoutError:
            raise PeerTimeout(f"ninguna conexión entrante en {deadline}s (puerto {self.port})") from None

    async def close(self) -> None:
        """Cierra el listener y cualquier conexión aceptada que siga abierta."""
        self._release.set()
        for writer in self._writers:
            if not writer.is_closing():
                writer.close()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "KIND_NULL",
    "KIND_TEXT",
    "HEADER_SIZE",
    "Payload",
    "encode_frame",
    "decode_frame",
    "read_frame",
    "write_frame",
    "drain_unread",
    "close_writer",
    "render",
    "Streams",
    "connect",
    "Listener",
]
