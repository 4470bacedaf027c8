"""
Jerarquía de excepciones de OrquestaVerif.

Todas las excepciones del proyecto heredan de OrquestaError para que la CLI
pueda distinguir errores del usuario (sintaxis, parámetros, archivos) de
fallos internos y nunca muestre un stack trace por un error del usuario.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

from typing import Iterable, Optional


class OrquestaError(Exception):
    """Error base del proyecto."""

    # Código de salida sugerido para la CLI
    exit_code: int = 3


# ============================================================================
# MODELO DEL PROTOCOLO
# ============================================================================

class ProtocolModelError(OrquestaError):
    """Error en las operaciones de buffer del modelo."""


class BufferFull(ProtocolModelError):
    """enqueue sobre un buffer lleno."""


class BufferEmpty(ProtocolModelError):
    """dequeue sobre un buffer vacío."""


class IllegalMessage(ProtocolModelError):
    """Intento de encolar NIL."""


class InvalidParams(OrquestaError):
    """Parámetros del sistema que violan sus invariantes."""


class NotEnabled(OrquestaError):
    """fire() de una transición que no está habilitada."""


# ============================================================================
# CONSULTAS Y VERIFICACIÓN
# ============================================================================

class MalformedPredicate(OrquestaError):
    """Predicado mal formado (p. ej. índice fuera de rango)."""


class QuerySyntaxError(OrquestaError):
    """Texto de consulta que no respeta la gramática."""


class ResourceExhausted(OrquestaError):
    """Se alcanzó el límite de estados; el veredicto es UNKNOWN."""

    exit_code = 2

    def __init__(self, message: str, states_explored: int = 0):
        super().__init__(message)
        self.states_explored = states_explored


class DomainError(OrquestaError):
    """Argumento fuera de dominio en SMC (alpha, epsilon, K)."""


class TraceFormatError(OrquestaError):
    """Archivo de traza mal formado."""


# ============================================================================
# GENERACIÓN DE PRUEBAS
# ============================================================================

class NoWitness(OrquestaError):
    """La búsqueda agotó el espacio sin encontrar testigo."""

    exit_code = 1


class DepthExceeded(OrquestaError):
    """La búsqueda alcanzó el límite de profundidad sin testigo."""

    exit_code = 2


class UnresolvedInterpolation(OrquestaError):
    """$(variable) que no existe en el estado."""


class UnboundPlaceholder(OrquestaError):
    """Placeholders sin valor en los bindings."""

    def __init__(self, missing: Iterable[str]):
        self.missing = sorted(set(missing))
        super().__init__(f"placeholders sin valor: {', '.join(self.missing)}")


class AnnotationSyntaxError(OrquestaError):
    """Línea inválida en la tabla de anotaciones."""


class BindingsSyntaxError(OrquestaError):
    """Línea inválida en un archivo de bindings o de comportamiento."""


class StepsQuerySyntaxError(OrquestaError):
    """Línea inválida en un archivo de consulta de steps."""


class AbstractTestSyntaxError(OrquestaError):
    """Línea inválida en un test abstracto."""


# ============================================================================
# RUNTIME
# ============================================================================

class MalformedFrame(OrquestaError):
    """Trama con tipo desconocido o truncada."""


class ParseError(OrquestaError):
    """Archivo de contrato mal formado."""


class IllegalLabel(ParseError):
    """Etiqueta que no es request, offer ni match."""


class RuntimeProtocolError(OrquestaError):
    """Base de los errores de una sesión en vivo."""

    exit_code = 1


class HandshakeMismatch(RuntimeProtocolError):
    """Un servicio respondió ERROR al chequeo de configuración."""

    def __init__(self, endpoint: int, message: Optional[str] = None):
        self.endpoint = endpoint
        super().__init__(message or f"el servicio {endpoint} rechazó la configuración")


class ProtocolViolation(RuntimeProtocolError):
    """Trama inesperada para la fase actual."""


class PeerClosed(ProtocolViolation):
    """El par cerró la conexión en un límite de trama."""


class PeerTimeout(RuntimeProtocolError):
    """El par no respondió dentro del plazo del socket."""


class ScriptError(OrquestaError):
    """Script de conformidad mal formado."""


class InvalidRuntimeArgument(OrquestaError):
    """Endpoint, política o rank inválidos para una orquestación."""


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "OrquestaError",
    "ProtocolModelError",
    "BufferFull",
    "BufferEmpty",
    "IllegalMessage",
    "InvalidParams",
    "NotEnabled",
    "MalformedPredicate",
    "QuerySyntaxError",
    "ResourceExhausted",
    "DomainError",
    "TraceFormatError",
    "NoWitness",
    "DepthExceeded",
    "UnresolvedInterpolation",
    "UnboundPlaceholder",
    "AnnotationSyntaxError",
    "BindingsSyntaxError",
    "StepsQuerySyntaxError",
    "AbstractTestSyntaxError",
    "MalformedFrame",
    "ParseError",
    "IllegalLabel",
    "RuntimeProtocolError",
    "HandshakeMismatch",
    "ProtocolViolation",
    "PeerClosed",
    "PeerTimeout",
    "ScriptError",
    "InvalidRuntimeArgument",
]
