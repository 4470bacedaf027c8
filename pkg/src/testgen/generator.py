"""
Generación de tests basada en el modelo.

1. find_witness: busca una traza del modelo instrumentado cuyo log de
   steps cumple la steps-query (poda por prefijo escrito).
2. emit_abstract_test: recorre la traza y vuelca las anotaciones de cada
   arista en alcance, interpolando $(...) contra el estado origen.
3. edge_coverage / augment_coverage: cobertura de aristas por plantilla y
   aumento con testigos DFS aleatorios.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import logging
import re
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from src.core import STATE_CAP
from src.core.errors import AbstractTestSyntaxError, DepthExceeded, NoWitness, ResourceExhausted
from src.model.params import SystemParams
from src.model.queries import StepConstraint
from src.model.semantics import declared_edges, enabled, fire, initial_state
from src.model.state import Process, SystemState, TransitionInstance
from src.model.trace import Trace
from src.testgen.annotations import AnnotationTable, interpolate

logger = logging.getLogger(__name__)


class WitnessSearch(str, Enum):
    BFS = "bfs"
    DFS = "dfs"
    RANDOM = "random"


# ============================================================================
# BÚSQUEDA DE TESTIGOS
# ============================================================================

def _consistent(state: SystemState, constraints: Sequence[StepConstraint]) -> bool:
    for k, (owner, marker) in enumerate(state.steps):
        if k >= len(constraints):
            return False
        _, want_owner, want_marker = constraints[k]
        if owner != want_owner or marker is not want_marker:
            return False
    return True


def _search(
    params: SystemParams,
    start: SystemState,
    is_goal,
    prune,
    search: WitnessSearch,
    depth_cap: int,
    rng: Optional[np.random.Generator],
    state_cap: int,
) -> Tuple[Optional[Trace], bool]:
    """
    Búsqueda genérica con punteros al padre.

    Returns:
        (traza o None, True si algún estado quedó cortado por depth_cap)
    """
    parent: Dict[SystemState, Tuple[Optional[SystemState], Optional[TransitionInstance], int]] = {
        start: (None, None, 0)
    }
    if is_goal(start):
        return Trace(start), False
    frontier = deque([start])
    pop = frontier.popleft if search is WitnessSearch.BFS else frontier.pop
    truncated = False
    while frontier:
        state = pop()
        depth = parent[state][2]
        if depth >= depth_cap:
            truncated = True
            continue
        instances = enabled(state, params)
        if rng is not None and len(instances) > 1:
            instances = [instances[k] for k in rng.permutation(len(instances))]
        elif search is WitnessSearch.DFS:
            instances = list(reversed(instances))
        for t in instances:
            child = fire(state, t)
            known = parent.get(child)
            if known is None:
                if prune(child):
                    continue
                if len(parent) >= state_cap:
                    raise ResourceExhausted(f"límite de {state_cap} estados alcanzado", states_explored=len(parent))
            elif known[2] <= depth + 1:
                continue
            # Un camino más corto reabre el estado para que depth_cap no oculte testigos
            parent[child] = (state, t, depth + 1)
            if is_goal(child):
                return _rebuild(parent, child), truncated
            frontier.append(child)
    return None, truncated


def _rebuild(parent, goal: SystemState) -> Trace:
    steps = []
    state = goal
    while True:
        previous, t, _ = parent[state]
        if previous is None:
            break
        steps.append((t, state))
        state = previous
    trace = Trace(state)
    for t, s in reversed(steps):
        trace.append(t, s)
    return trace


def find_witness(
    params: SystemParams,
    constraints: Sequence[StepConstraint],
    search: WitnessSearch = WitnessSearch.BFS,
    depth_cap: int = 500,
    seed: int = 0,
    state_cap: int = STATE_CAP,
) -> Trace:
    """
    Busca una traza cuyo estado final cumple todas las restricciones de steps.

    Args:
        params: Parámetros del sistema
        constraints: Lista (k, dueño, marcador) con k = 0, 1, 2, ...
        search: BFS, DFS o DFS aleatorio (semilla seed)
        depth_cap: Profundidad máxima de la traza

    Returns:
        Traza del modelo instrumentado (capacidad = len(constraints))

    Raises:
        NoWitness: Espacio agotado sin testigo
        DepthExceeded: Sin testigo y con estados cortados por depth_cap
    """
    if depth_cap <= 0:
        raise DepthExceeded(f"depth_cap debe ser > 0: {depth_cap}")
    for position, (k, _, _) in enumerate(constraints):
        if k != position:
            raise NoWitness(f"índices de steps no consecutivos: {k} en la posición {position}")
    target = len(constraints)
    rng = np.random.Generator(np.random.Philox(seed)) if search is WitnessSearch.RANDOM else None
    start = initial_state(params, steps_capacity=target)
    logger.info(f"Buscando testigo para {target} restricciones de steps ({search.value})")
    trace, truncated = _search(
        params,
        start,
        is_goal=lambda s: s.step == target and _consistent(s, constraints),
        prune=lambda s: not _consistent(s, constraints),
        search=search,
        depth_cap=depth_cap,
        rng=rng,
        state_cap=state_cap,
    )
    if trace is None:
        if truncated:
            raise DepthExceeded(f"sin testigo dentro de profundidad {depth_cap}")
        raise NoWitness("no existe traza que cumpla la steps-query")
    logger.info(f"✓ Testigo de {len(trace)} pasos")
    return trace


# ============================================================================
# TEST ABSTRACTO
# ============================================================================

@dataclass(frozen=True)
class Scope:
    """Procesos cuyas aristas se vuelcan."""

    include_orc: bool = True
    include_services: bool = True
    services: Optional[FrozenSet[int]] = None

    @classmethod
    def parse(cls, text: str) -> "Scope":
        text = text.strip()
        if text == "all":
            return cls()
        if text == "services":
            return cls(include_orc=False)
        if text == "orc":
            return cls(include_services=False)
        processes = [Process.parse(p.strip()) for p in text.split(",") if p.strip()]
        return cls(
            include_orc=any(p.kind == "orc" for p in processes),
            include_services=any(p.kind == "svc" for p in processes),
            services=frozenset(p.index for p in processes if p.kind == "svc"),
        )

    def includes(self, process: Process) -> bool:
        if process.kind == "orc":
            return self.include_orc
        if process.kind == "svc":
            return self.include_services and (self.services is None or process.index in self.services)
        return False

    def processes(self, n_services: int) -> List[Process]:
        candidates = [Process.orc()] + [Process.svc(j) for j in range(n_services)]
        return [p for p in candidates if self.includes(p)]


@dataclass(frozen=True)
class AbstractLine:
    owner: str
    text: str
    # Posición en la traza (-1 para prefix, len(trace) para postfix)
    position: int


@dataclass
class AbstractTest:
    lines: List[AbstractLine] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.lines)

    @property
    def placeholders(self) -> Set[str]:
        return {m.group(1) for line in self.lines for m in PLACEHOLDER.finditer(line.text)}

    def to_text(self) -> str:
        return "".join(f"{line.owner}: {line.text}\n" for line in self.lines)

    @classmethod
    def from_text(cls, text: str) -> "AbstractTest":
        test = cls()
        for number, raw in enumerate(text.splitlines()):
            if not raw.strip() or raw.lstrip().startswith("#"):
                continue
            owner, sep, command = raw.partition(":")
            if not sep:
                raise AbstractTestSyntaxError(f"línea {number + 1}: se esperaba '<dueño>: <comando>'")
            test.lines.append(AbstractLine(owner.strip(), command.strip(), number))
        return test


PLACEHOLDER = re.compile(r"%\{([A-Za-z_][A-Za-z0-9_]*(?:\[\d+\])?)\}")
_AUTO = re.compile(r"%\{([A-Za-z_][A-Za-z0-9_]*)\[\]\}")


def _number_placeholders(text: str, counters: Dict[str, int]) -> str:
    def repl(match: "re.Match") -> str:
        symbol = match.group(1)
        k = counters.get(symbol, 0)
        counters[symbol] = k + 1
        return f"%{{{symbol}[{k}]}}"

    return _AUTO.sub(repl, text)


def emit_abstract_test(
    trace: Trace,
    table: AnnotationTable,
    scope: Scope = Scope(),
) -> AbstractTest:
    """
    Vuelca las anotaciones de las aristas en alcance a lo largo de la traza.

    Args:
        trace: Traza reproducible (p. ej. de find_witness)
        table: Tabla de anotaciones
        scope: Procesos incluidos

    Returns:
        AbstractTest con placeholders %{...} numerados

    Raises:
        UnresolvedInterpolation: Si alguna $(var) no tiene valor
    """
    test = AbstractTest()
    counters: Dict[str, int] = {}
    n = trace.initial.n_services

    def emit(owner: Process, texts: Iterable[str], state: SystemState, position: int) -> None:
        for text in texts:
            line = _number_placeholders(interpolate(text, state, owner), counters)
            test.lines.append(AbstractLine(str(owner), line, position))

    for process in scope.processes(n):
        emit(process, table.prefix.get(process.template, []), trace.initial, -1)

    for position, step in enumerate(trace.steps):
        process = step.instance.process
        if not scope.includes(process):
            continue
        texts = table.lines_for(process.template, step.instance.edge_id)
        if texts:
            emit(process, texts, trace.source_of(position), position)

    for process in scope.processes(n):
        emit(process, table.postfix.get(process.template, []), trace.final, len(trace))

    logger.info(f"✓ Test abstracto: {len(test)} líneas, {len(test.placeholders)} placeholders")
    return test


# ============================================================================
# COBERTURA
# ============================================================================

def edge_coverage(traces: Iterable[Trace]) -> Dict[str, Tuple[Set[str], FrozenSet[str]]]:
    """Por plantilla: (aristas disparadas, aristas declaradas)."""
    declared = declared_edges()
    fired: Dict[str, Set[str]] = {template: set() for template in declared}
    for trace in traces:
        for t in trace.instances:
            fired[t.process.template].add(t.edge_id)
    return {template: (fired[template], declared[template]) for template in declared}


def _covered(coverage: Dict[str, Tuple[Set[str], FrozenSet[str]]]) -> int:
    return sum(len(f) for f, _ in coverage.values())


def augment_coverage(
    params: SystemParams,
    traces: List[Trace],
    budget: int,
    seed: int = 0,
    depth_cap: int = 200,
    patience: int = 5,
    state_cap: int = 200_000,
) -> List[Trace]:
    """
    Añade testigos DFS aleatorios que disparan aristas aún no cubiertas.

    Cada ronda elige una arista no cubierta y busca un estado donde esté
    habilitada. Termina tras `patience` rondas seguidas sin mejora o al
    agotar `budget` rondas.

    Returns:
        Lista de trazas añadidas
    """
    added: List[Trace] = []
    rng = np.random.Generator(np.random.Philox(seed))
    coverage = edge_coverage(traces)
    best = _covered(coverage)
    stale = 0
    for round_ in range(budget):
        missing = sorted(
            (template, edge) for template, (fired, declared) in coverage.items() for edge in declared - fired
        )
        if not missing or stale >= patience:
            break
        template, edge = missing[rng.integers(len(missing))]

        def goal(s: SystemState) -> bool:
            return any(t.process.template == template and t.edge_id == edge for t in enabled(s, params))

        try:
            found, _ = _search(
                params,
                initial_state(params, steps_capacity=0),
                is_goal=goal,
                prune=lambda s: False,
                search=WitnessSearch.RANDOM,
                depth_cap=depth_cap,
                rng=rng,
                state_cap=state_cap,
            )
        except ResourceExhausted:
            found = None
        if found is not None:
            source = found.final
            t = next(t for t in enabled(source, params) if t.process.template == template and t.edge_id == edge)
            found.append(t, fire(source, t))
            added.append(found)
            coverage = edge_coverage(traces + added)
        now = _covered(coverage)
        if now > best:
            best, stale = now, 0
        else:
            stale += 1
        logger.debug(f"   Ronda {round_ + 1}: {template}.{edge} -> {now} aristas cubiertas")
    logger.info(f"✓ Aumento de cobertura: {len(added)} trazas nuevas, {best} aristas cubiertas")
    return added


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "WitnessSearch",
    "find_witness",
    "Scope",
    "AbstractLine",
    "AbstractTest",
    "PLACEHOLDER",
    "emit_abstract_test",
    "edge_coverage",
    "augment_coverage",
]
