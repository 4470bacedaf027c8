"""
Scripts de conformidad y su ejecución contra pares en vivo.

Una línea por comando, agrupadas por endpoint en orden de archivo:

    svc0: LISTEN "7001"
    svc0: ACCEPT
    svc0: RECV -> msg
    svc0: ASSERT msg == "ORC_CHECK"
    svc1: CONNECT "127.0.0.1" "7102" -> peer
    svc1: SEND@peer "request payload"
    orc: COMMENT requester: 0

Los endpoints cuyos comandos son sólo COMMENT no se ejecutan.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import asyncio
import logging
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from src.core import SOCKET_DEADLINE
from src.core.errors import MalformedFrame, PeerTimeout, RuntimeProtocolError, ScriptError
from src.runtime.frames import Listener, Payload, close_writer, connect, read_frame, render, write_frame

logger = logging.getLogger(__name__)

DEFAULT_CONNECTION = "main"
OPCODES = ("LISTEN", "ACCEPT", "CONNECT", "RECV", "ASSERT", "SEND", "CLOSE", "COMMENT")

_TOKEN = re.compile(r'"(?:[^"\\]|\\.)*"|\S+')
_ESCAPE = re.compile(r"\\(.)")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def quote(text: str) -> str:
    """Literal entrecomillado con escapes de \\ y \"."""
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _literal(token: str, number: int) -> Payload:
    if token == "NULL":
        return None
    if len(token) >= 2 and token.startswith('"') and token.endswith('"'):
        return _ESCAPE.sub(r"\1", token[1:-1])
    raise ScriptError(f"línea {number}: se esperaba un literal \"...\" o NULL, llegó {token!r}")


def _atom(token: str) -> str:
    """Argumento de LISTEN/CONNECT, opcionalmente entrecomillado."""
    if len(token) >= 2 and token.startswith('"') and token.endswith('"'):
        return _ESCAPE.sub(r"\1", token[1:-1])
    return token


def _port(token: str, number: int) -> int:
    value = _atom(token)
    if not value.isdigit() or not 0 <= int(value) < 65536:
        raise ScriptError(f"línea {number}: puerto inválido {value!r}")
    return int(value)


# ============================================================================
# SCRIPT
# ============================================================================

@dataclass(frozen=True)
class Command:
    op: str
    text: str
    line: int
    connection: str = DEFAULT_CONNECTION
    var: Optional[str] = None
    value: Payload = None
    host: Optional[str] = None
    port: Optional[int] = None


@dataclass
class ConformanceScript:
    endpoints: Dict[str, List[Command]] = field(default_factory=dict)

    def __len__(self) -> int:
        return sum(len(c) for c in self.endpoints.values())

    @property
    def runnable(self) -> Dict[str, List[Command]]:
        return {
            name: commands
            for name, commands in self.endpoints.items()
            if any(c.op != "COMMENT" for c in commands)
        }

    def to_text(self) -> str:
        lines = sorted(
            ((c.line, name, c.text) for name, commands in self.endpoints.items() for c in commands)
        )
        return "".join(f"{name}: {text}\n" for _, name, text in lines)


def _split_target(head: str, number: int) -> Tuple[str, str]:
    op, sep, connection = head.partition("@")
    if sep and not _NAME.match(connection):
        raise ScriptError(f"línea {number}: nombre de conexión inválido {connection!r}")
    return op, connection if sep else DEFAULT_CONNECTION


def _bind_target(tokens: List[str], number: int) -> Tuple[List[str], str]:
    """Separa un sufijo opcional '-> nombre'."""
    if len(tokens) >= 2 and tokens[-2] == "->":
        if not _NAME.match(tokens[-1]):
            raise ScriptError(f"línea {number}: nombre inválido {tokens[-1]!r}")
        return tokens[:-2], tokens[-1]
    return tokens, DEFAULT_CONNECTION


def parse_command(text: str, number: int = 0) -> Command:
    """
    Parsea un comando del script.

    Raises:
        ScriptError: Comando desconocido o argumentos inválidos
    """
    text = text.strip()
    if "%{" in text:
        raise ScriptError(f"línea {number}: placeholder sin concretizar en {text!r}")
    head, _, rest = text.partition(" ")
    op, connection = _split_target(head, number)
    if op not in OPCODES:
        raise ScriptError(f"línea {number}: comando desconocido {op!r}")
    if op == "COMMENT":
        return Command(op, text, number)
    tokens = _TOKEN.findall(rest)

    if op == "LISTEN":
        if len(tokens) != 1:
            raise ScriptError(f"línea {number}: LISTEN <puerto>")
        return Command(op, text, number, port=_port(tokens[0], number))
    if op == "ACCEPT":
        tokens, name = _bind_target(tokens, number)
        if tokens:
            raise ScriptError(f"línea {number}: ACCEPT [-> nombre]")
        return Command(op, text, number, connection=name)
    if op == "CONNECT":
        tokens, name = _bind_target(tokens, number)
        if len(tokens) != 2:
            raise ScriptError(f"línea {number}: CONNECT <host> <puerto> [-> nombre]")
        return Command(op, text, number, connection=name, host=_atom(tokens[0]), port=_port(tokens[1], number))
    if op == "RECV":
        if len(tokens) != 2 or tokens[0] != "->" or not _NAME.match(tokens[1]):
            raise ScriptError(f"línea {number}: RECV[@conexión] -> variable")
        return Command(op, text, number, connection=connection, var=tokens[1])
    if op == "ASSERT":
        if len(tokens) != 3 or tokens[1] != "==" or not _NAME.match(tokens[0]):
            raise ScriptError(f"línea {number}: ASSERT variable == \"literal\"|NULL")
        return Command(op, text, number, var=tokens[0], value=_literal(tokens[2], number))
    if op == "SEND":
        if len(tokens) != 1:
            raise ScriptError(f"línea {number}: SEND[@conexión] \"literal\"|NULL")
        return Command(op, text, number, connection=connection, value=_literal(tokens[0], number))
    if tokens:
        raise ScriptError(f"línea {number}: CLOSE[@conexión] no lleva argumentos")
    return Command(op, text, number, connection=connection)


def _validate(endpoint: str, commands: List[Command]) -> None:
    bound: set = set()
    listening = False
    open_: set = set()
    for c in commands:
        where = f"{endpoint}, línea {c.line}"
        if c.op == "LISTEN":
            listening = True
        elif c.op == "ACCEPT":
            if not listening:
                raise ScriptError(f"{where}: ACCEPT sin LISTEN previo")
            open_.add(c.connection)
        elif c.op == "CONNECT":
            open_.add(c.connection)
        elif c.op in ("RECV", "SEND", "CLOSE"):
            if c.connection not in open_:
                raise ScriptError(f"{where}: la conexión {c.connection!r} no está abierta")
            if c.op == "RECV":
                bound.add(c.var)
            elif c.op == "CLOSE":
                open_.discard(c.connection)
        elif c.op == "ASSERT" and c.var not in bound:
            raise ScriptError(f"{where}: la variable {c.var!r} no fue leída por un RECV")


def parse_script(text: str) -> ConformanceScript:
    """
    Parsea y valida un script de conformidad.

    Raises:
        ScriptError: Línea mal formada, variable sin RECV o conexión no abierta
    """
    script = ConformanceScript()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        endpoint, sep, command = line.partition(":")
        endpoint = endpoint.strip()
        if not sep or not _NAME.match(endpoint):
            raise ScriptError(f"línea {number}: se esperaba '<endpoint>: <COMANDO>'")
        script.endpoints.setdefault(endpoint, []).append(parse_command(command, number))
    for endpoint, commands in script.endpoints.items():
        _validate(endpoint, commands)
    return script


def load_script(path: Union[str, Path]) -> ConformanceScript:
    path = Path(path)
    if not path.exists():
        raise ScriptError(f"no existe el script {path}")
    return parse_script(path.read_text(encoding="utf-8"))


# ============================================================================
# EJECUCIÓN
# ============================================================================

@dataclass
class TestResult:
    __test__ = False

    passed: bool
    endpoint: Optional[str] = None
    index: Optional[int] = None
    command: Optional[str] = None
    observed: Optional[str] = None
    expected: Optional[str] = None
    commands_run: int = 0
    duration: float = 0.0

    def to_record(self) -> Dict[str, object]:
        record: Dict[str, object] = {
            "passed": self.passed,
            "commands_run": self.commands_run,
            "duration": f"{self.duration:.3f}",
        }
        if not self.passed:
            record.update(
                endpoint=self.endpoint,
                index=self.index,
                command=self.command,
                observed=self.observed,
                expected=self.expected,
            )
        return record


class _Failure(Exception):
    def __init__(self, result: TestResult):
        super().__init__(result.command)
        self.result = result


class _EndpointRunner:
    def __init__(self, name: str, commands: List[Command], host: str, deadline: float, counter: List[int]):
        self.name = name
        self.commands = commands
        self.host = host
        self.deadline = deadline
        self.counter = counter
        self.listeners: List[Listener] = []
        self.connections: Dict[str, tuple] = {}
        self.variables: Dict[str, Payload] = {}

    def _fail(self, index: int, command: Command, observed: str, expected: str) -> _Failure:
        return _Failure(TestResult(False, self.name, index, command.text, observed, expected))

    async def _step(self, command: Command) -> None:
        op = command.op
        if op == "COMMENT":
            logger.debug(f"   [{self.name}] {command.text}")
        elif op == "LISTEN":
            self.listeners.append(await Listener.open(self.host, command.port))
        elif op == "ACCEPT":
            self.connections[command.connection] = await self.listeners[-1].accept(self.deadline)
        elif op == "CONNECT":
            self.connections[command.connection] = await connect(command.host, command.port)
        elif op == "RECV":
            reader, _ = self.connections[command.connection]
            self.variables[command.var] = await read_frame(reader, self.deadline)
        elif op == "SEND":
            _, writer = self.connections[command.connection]
            await write_frame(writer, command.value)
        elif op == "CLOSE":
            _, writer = self.connections.pop(command.connection)
            await close_writer(writer)

    async def run(self) -> None:
        try:
            for index, command in enumerate(self.commands):
                if command.op == "ASSERT":
                    observed = self.variables[command.var]
                    if observed != command.value:
                        raise self._fail(index, command, render(observed), render(command.value))
                else:
                    try:
                        await self._step(command)
                    except PeerTimeout:
                        raise
                    except (RuntimeProtocolError, MalformedFrame, OSError) as e:
                        raise self._fail(index, command, f"error: {e}", command.text) from None
                self.counter[0] += 1
        finally:
            for _, writer in self.connections.values():
                await close_writer(writer)
            for listener in self.listeners:
                await listener.close()


async def run_conformance(
    script: ConformanceScript,
    deadline: float = SOCKET_DEADLINE,
    host: str = "127.0.0.1",
    total_deadline: Optional[float] = None,
) -> TestResult:
    """
    Ejecuta los endpoints del script en paralelo contra pares en vivo.

    Args:
        script: Script validado
        deadline: Plazo por operación de red en segundos
        total_deadline: Plazo global (por defecto deadline * (comandos + 1))

    Returns:
        TestResult: aprobado, o el primer comando que falló con lo observado y lo esperado

    Raises:
        PeerTimeout: Un par no respondió dentro del plazo
    """
    started = time.perf_counter()
    endpoints = script.runnable
    if not endpoints:
        logger.info("✓ Script vacío: nada que ejecutar")
        return TestResult(True)
    counter = [0]
    runners = [_EndpointRunner(name, commands, host, deadline, counter) for name, commands in endpoints.items()]
    tasks = [asyncio.create_task(r.run(), name=f"endpoint-{r.name}") for r in runners]
    total = total_deadline if total_deadline is not None else deadline * (len(script) + 1)
    logger.info(f"Ejecutando {len(endpoints)} endpoints ({len(script)} comandos)")

    failure: Optional[BaseException] = None
    try:
        pending = set(tasks)
        deadline_at = time.perf_counter() + total
        while pending and failure is None:
            remaining = deadline_at - time.perf_counter()
            if remaining <= 0:
                failure = PeerTimeout(f"el script no terminó en {total}s")
                break
            done, pending = await asyncio.wait(pending, timeout=remaining, return_when=asyncio.FIRST_COMPLETED)
            for task in done:
                if task.exception() is not None and failure is None:
                    failure = task.exception()
    finally:
        for task in tasks:
            task.cancel()
        await asyncio.gather(*tasks, return_exceptions=True)

    duration = time.perf_counter() - started
    if isinstance(failure, _Failure):
        result = failure.result
        result.commands_run, result.duration = counter[0], duration
        logger.error(
            f"✗ Falla en {result.endpoint}[{result.index}] {result.command}: "
            f"observado {result.observed}, esperado {result.expected}"
        )
        return result
    if failure is not None:
        raise failure
    logger.info(f"✓ Script aprobado: {counter[0]} comandos en {duration:.2f}s")
    return TestResult(True, commands_run=counter[0], duration=duration)


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "DEFAULT_CONNECTION",
    "quote",
    "Command",
    "ConformanceScript",
    "parse_command",
    "parse_script",
    "load_script",
    "TestResult",
    "run_conformance",
]
