"""
OrquestaVerif - Verificación y prueba de un protocolo de orquestación de servicios

Modelo formal del protocolo (orquestador, N servicios y buffers FIFO acotados),
verificación exhaustiva de consultas temporales, estimación estadística
(SMC), generación de tests basada en el modelo y una implementación de
referencia sobre sockets TCP para ejecutar los tests generados.

Autor: OrquestaVerif Team
Versión: 1.0.0
Fecha: 2026-10-16
"""

__version__ = "1.0.0"
__author__ = "OrquestaVerif Team"
