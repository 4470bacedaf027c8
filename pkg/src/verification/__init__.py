"""
Verificación del modelo: exploración exhaustiva (checker) y estimación
estadística por simulación (smc).

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""
