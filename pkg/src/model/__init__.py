"""
Modelo formal del protocolo de orquestación.

- protocol: mensajes, configuraciones y buffers FIFO acotados
- params: parámetros del sistema (pydantic), presets y overrides
- state: ubicaciones, estado inmutable e instancias de transición
- semantics: enabled / fire sobre el sistema compuesto
- predicates, queries: lenguaje de consultas
- trace: trazas, formato de texto y replay

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""
