"""
Generación de tests basada en el modelo: testigos de steps-queries,
volcado de anotaciones y concretización de placeholders.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""
