"""
Implementación de referencia del protocolo sobre conexiones TCP de loopback:
codec de tramas, contratos, orquestador, servicio y ejecutor de scripts de
conformidad.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""
