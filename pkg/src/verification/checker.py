"""
Checker exhaustivo de estados explícitos.

Explora el grafo alcanzable del sistema compuesto (hash de SystemState
completo, BFS por defecto) y decide las cinco clases de query:

    A[] p    invariante: búsqueda de un estado que viole p
    E<> p    alcanzabilidad: búsqueda de un estado que cumpla p
    p --> q  leads-to: ciclos o callejones sin salida en el subgrafo ¬q
    E[] p    existe un camino maximal dentro de p
    A<> p    leads-to desde el estado inicial

Las trazas de evidencia se reconstruyen con punteros al padre y se
reproducen siempre contra enabled()/fire().

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import logging
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

from slugify import slugify

from src.core import STATE_CAP, artifacts_path
from src.core.errors import ResourceExhausted
from src.model.params import SystemParams
from src.model.predicates import Predicate, eval_predicate
from src.model.queries import (
    AlwaysEventually,
    CheckerQuery,
    ExistsGlobally,
    Invariant,
    LeadsTo,
    Reach,
    query_steps_capacity,
)
from src.model.semantics import enabled, fire, initial_state
from src.model.state import SystemState
from src.model.trace import Trace, format_trace

logger = logging.getLogger(__name__)

PROGRESS_EVERY = 100_000


class SearchOrder(str, Enum):
    BFS = "bfs"
    DFS = "dfs"


class VerdictStatus(str, Enum):
    HOLDS = "HOLDS"
    FAILS = "FAILS"
    UNKNOWN = "UNKNOWN"


@dataclass
class Verdict:
    """Resultado de una query con su evidencia opcional."""

    query: str
    status: VerdictStatus
    evidence: Optional[Trace] = None
    evidence_kind: str = ""
    states_explored: int = 0
    duration: float = 0.0
    # Posición (en estados de la evidencia) donde empieza el ciclo de un lazo
    lasso_start: Optional[int] = None
    note: str = ""

    @property
    def holds(self) -> bool:
        return self.status is VerdictStatus.HOLDS

    def to_record(self) -> Dict[str, str]:
        record = {
            "query": self.query,
            "verdict": self.status.value,
            "states": str(self.states_explored),
            "duration": f"{self.duration:.3f}",
        }
        if self.evidence is not None:
            record["evidence"] = self.evidence_kind
            record["evidence_len"] = str(len(self.evidence))
        if self.lasso_start is not None:
            record["lasso_start"] = str(self.lasso_start)
        if self.note:
            record["note"] = self.note
        return record


# ============================================================================
# GRAFO DE ESTADOS
# ============================================================================

class StateGraph:
    """
    Grafo alcanzable con ids enteros, punteros al padre y (opcionalmente)
    lista de sucesores.
    """

    def __init__(self, params: SystemParams, steps_capacity: int = 0, state_cap: int = STATE_CAP):
        self.params = params
        self.state_cap = state_cap
        self.states: List[SystemState] = []
        self.index: Dict[SystemState, int] = {}
        self.parent: List[int] = []
        self.succ: List[Tuple[int, ...]] = []
        self._add(initial_state(params, steps_capacity), -1)

    def __len__(self) -> int:
        return len(self.states)

    def _add(self, state: SystemState, parent: int) -> Tuple[int, bool]:
        known = self.index.get(state)
        if known is not None:
            return known, False
        if len(self.states) >= self.state_cap:
            raise ResourceExhausted(
                f"límite de {self.state_cap} estados alcanzado", states_explored=len(self.states)
            )
        sid = len(self.states)
        self.states.append(state)
        self.index[state] = sid
        self.parent.append(parent)
        if sid and sid % PROGRESS_EVERY == 0:
            logger.info(f"   {sid:,} estados explorados...")
        return sid, True

    def successors(self, sid: int) -> Tuple[int, ...]:
        return self.succ[sid]

    def explore(
        self,
        order: SearchOrder = SearchOrder.BFS,
        stop: Optional[Callable[[SystemState], bool]] = None,
        full: bool = False,
    ) -> Optional[int]:
        """
        Explora desde el estado inicial.

        Args:
            order: BFS (contraejemplos más cortos) o DFS
            stop: Si devuelve True en un estado, la búsqueda termina ahí
            full: Guardar la lista de sucesores de cada estado

        Returns:
            Id del primer estado que cumple stop, o None si se agotó el grafo
        """
        if stop is not None and stop(self.states[0]):
            return 0
        frontier = deque([0])
        pop = frontier.popleft if order is SearchOrder.BFS else frontier.pop
        if full:
            self.succ = [()] * len(self.states)
        while frontier:
            sid = pop()
            state = self.states[sid]
            children = []
            for t in enabled(state, self.params):
                cid, new = self._add(fire(state, t), sid)
                if cid not in children:
                    children.append(cid)
                if new:
                    if full:
                        self.succ.append(())
                    if stop is not None and stop(self.states[cid]):
                        return cid
                    frontier.append(cid)
            if full:
                self.succ[sid] = tuple(children)
        return None

    def path_to(self, sid: int) -> List[int]:
        path = []
        while sid != -1:
            path.append(sid)
            sid = self.parent[sid]
        return path[::-1]

    def trace_of(self, ids: Sequence[int]) -> Trace:
        """Traza que recorre los ids dados (consecutivos deben ser adyacentes)."""
        trace = Trace(self.states[ids[0]])
        for a, b in zip(ids, ids[1:]):
            source, target = self.states[a], self.states[b]
            for t in enabled(source, self.params):
                if fire(source, t) == target:
                    trace.append(t, target)
                    break
            else:
                raise RuntimeError(f"estados {a} -> {b} no son adyacentes")
        return trace


# ============================================================================
# ALGORITMOS SOBRE EL GRAFO
# ============================================================================

def cyclic_nodes(succ: Sequence[Tuple[int, ...]], allowed: Sequence[bool], roots: Iterable[int]) -> Set[int]:
    """
    Nodos en componentes fuertemente conexas no triviales del subgrafo
    inducido por allowed, alcanzables desde roots (Tarjan iterativo).
    """
    index: Dict[int, int] = {}
    low: Dict[int, int] = {}
    stack: List[int] = []
    on_stack: Set[int] = set()
    result: Set[int] = set()
    counter = 0

    for root in roots:
        if root in index or not allowed[root]:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(succ[root]))]
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if not allowed[w]:
                    continue
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                component = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    component.append(w)
                    if w == v:
                        break
                if len(component) > 1 or v in succ[v]:
                    result.update(component)
    return result


def _bfs_within(
    succ: Sequence[Tuple[int, ...]],
    allowed: Sequence[bool],
    sources: Iterable[int],
    is_target: Callable[[int], bool],
) -> Optional[List[int]]:
    """Camino más corto dentro de allowed desde alguna fuente hasta un objetivo."""
    parent: Dict[int, int] = {}
    queue = deque()
    for s in sources:
        if allowed[s] and s not in parent:
            parent[s] = -1
            queue.append(s)
    while queue:
        v = queue.popleft()
        if is_target(v):
            path = []
            while v != -1:
                path.append(v)
                v = parent[v]
            return path[::-1]
        for w in succ[v]:
            if allowed[w] and w not in parent:
                parent[w] = v
                queue.append(w)
    return None


def _cycle_back(succ: Sequence[Tuple[int, ...]], allowed: Sequence[bool], node: int) -> List[int]:
    """Camino no vacío node -> ... -> node dentro de allowed (sin repetir node al inicio)."""
    path = _bfs_within(succ, allowed, succ[node], lambda v: v == node)
    return path or []


def find_bad_path(
    graph: StateGraph,
    allowed: Sequence[bool],
    sources: Sequence[int],
) -> Optional[Tuple[List[int], Optional[int]]]:
    """
    Busca, dentro de allowed, un camino desde alguna fuente hasta un ciclo o
    un estado terminal del grafo completo.

    Returns:
        (ids desde el estado inicial, posición de inicio del lazo o None) o
        None si no existe
    """
    succ = graph.succ
    cyclic = cyclic_nodes(succ, allowed, sources)

    def is_bad(v: int) -> bool:
        return v in cyclic or not succ[v]

    stem = _bfs_within(succ, allowed, sources, is_bad)
    if stem is None:
        return None
    prefix = graph.path_to(stem[0])
    ids = prefix + stem[1:]
    target = ids[-1]
    if target in cyclic:
        lasso_start = len(ids) - 1
        ids = ids + _cycle_back(succ, allowed, target)
        return ids, lasso_start
    return ids, None


# ============================================================================
# OPERACIONES DE CHEQUEO
# ============================================================================

def _graph_for(params: SystemParams, query, state_cap: int) -> StateGraph:
    capacity = query_steps_capacity(query)
    if capacity:
        logger.debug(f"Instrumentando steps con capacidad {capacity}")
    return StateGraph(params, steps_capacity=capacity, state_cap=state_cap)


def _holds_fn(params: SystemParams, pred: Predicate) -> Callable[[SystemState], bool]:
    return lambda s: eval_predicate(s, pred, params)


def check_invariant(
    params: SystemParams,
    pred: Predicate,
    search: SearchOrder = SearchOrder.BFS,
    state_cap: int = STATE_CAP,
) -> Verdict:
    """
    A[] pred: todos los estados alcanzables cumplen pred.

    Raises:
        ResourceExhausted: Límite de estados alcanzado
    """
    inicio = time.perf_counter()
    query = Invariant(pred)
    graph = _graph_for(params, query, state_cap)
    holds = _holds_fn(params, pred)
    bad = graph.explore(search, stop=lambda s: not holds(s))
    verdict = Verdict(str(query), VerdictStatus.HOLDS, states_explored=len(graph))
    if bad is not None:
        verdict.status = VerdictStatus.FAILS
        verdict.evidence = graph.trace_of(graph.path_to(bad))
        verdict.evidence_kind = "counterexample"
    verdict.duration = time.perf_counter() - inicio
    return verdict


def check_reachability(
    params: SystemParams,
    pred: Predicate,
    search: SearchOrder = SearchOrder.BFS,
    state_cap: int = STATE_CAP,
) -> Verdict:
    """E<> pred: algún estado alcanzable cumple pred (evidencia = testigo)."""
    inicio = time.perf_counter()
    query = Reach(pred)
    graph = _graph_for(params, query, state_cap)
    found = graph.explore(search, stop=_holds_fn(params, pred))
    verdict = Verdict(str(query), VerdictStatus.FAILS, states_explored=len(graph))
    if found is not None:
        verdict.status = VerdictStatus.HOLDS
        verdict.evidence = graph.trace_of(graph.path_to(found))
        verdict.evidence_kind = "witness"
    verdict.duration = time.perf_counter() - inicio
    return verdict


def _leads_to(
    params: SystemParams,
    query,
    p: Optional[Predicate],
    q: Predicate,
    search: SearchOrder,
    state_cap: int,
) -> Verdict:
    inicio = time.perf_counter()
    graph = _graph_for(params, query, state_cap)
    graph.explore(search, full=True)
    not_q = [not eval_predicate(s, q, params) for s in graph.states]
    if p is None:
        sources = [0] if not_q[0] else []
    else:
        sources = [sid for sid, s in enumerate(graph.states) if not_q[sid] and eval_predicate(s, p, params)]
    verdict = Verdict(str(query), VerdictStatus.HOLDS, states_explored=len(graph))
    found = find_bad_path(graph, not_q, sources) if sources else None
    if found is not None:
        ids, lasso = found
        verdict.status = VerdictStatus.FAILS
        verdict.evidence = graph.trace_of(ids)
        verdict.evidence_kind = "counterexample"
        verdict.lasso_start = lasso
        verdict.note = "ciclo sin q" if lasso is not None else "estado terminal sin q"
    verdict.duration = time.perf_counter() - inicio
    return verdict


def check_leads_to(
    params: SystemParams,
    p: Predicate,
    q: Predicate,
    search: SearchOrder = SearchOrder.BFS,
    state_cap: int = STATE_CAP,
) -> Verdict:
    """
    p --> q: desde todo estado p, todo camino maximal alcanza q.

    Falla si el subgrafo ¬q alcanzable desde un estado p ∧ ¬q contiene un
    ciclo o un estado sin sucesores. La evidencia es un lazo o un camino
    hasta el callejón sin salida.
    """
    return _leads_to(params, LeadsTo(p, q), p, q, search, state_cap)


def check_always_eventually(
    params: SystemParams,
    pred: Predicate,
    search: SearchOrder = SearchOrder.BFS,
    state_cap: int = STATE_CAP,
) -> Verdict:
    """A<> pred: leads-to desde el estado inicial."""
    return _leads_to(params, AlwaysEventually(pred), None, pred, search, state_cap)


def check_exists_globally(
    params: SystemParams,
    pred: Predicate,
    search: SearchOrder = SearchOrder.BFS,
    state_cap: int = STATE_CAP,
) -> Verdict:
    """E[] pred: existe un camino maximal cuyos estados cumplen todos pred."""
    inicio = time.perf_counter()
    query = ExistsGlobally(pred)
    graph = _graph_for(params, query, state_cap)
    graph.explore(search, full=True)
    inside = [eval_predicate(s, pred, params) for s in graph.states]
    verdict = Verdict(str(query), VerdictStatus.FAILS, states_explored=len(graph))
    found = find_bad_path(graph, inside, [0]) if inside[0] else None
    if found is not None:
        ids, lasso = found
        verdict.status = VerdictStatus.HOLDS
        verdict.evidence = graph.trace_of(ids)
        verdict.evidence_kind = "witness"
        verdict.lasso_start = lasso
    verdict.duration = time.perf_counter() - inicio
    return verdict


def check(
    params: SystemParams,
    query: CheckerQuery,
    search: SearchOrder = SearchOrder.BFS,
    state_cap: int = STATE_CAP,
) -> Verdict:
    """
    Despacha la query a su algoritmo. ResourceExhausted se convierte en UNKNOWN.

    Args:
        params: Parámetros del sistema
        query: Invariant, Reach, LeadsTo, ExistsGlobally o AlwaysEventually
        search: Orden de exploración
        state_cap: Límite de estados

    Returns:
        Verdict con estado HOLDS, FAILS o UNKNOWN
    """
    logger.info(f"Verificando: {query}")
    try:
        if isinstance(query, Invariant):
            verdict = check_invariant(params, query.pred, search, state_cap)
        elif isinstance(query, Reach):
            verdict = check_reachability(params, query.pred, search, state_cap)
        elif isinstance(query, LeadsTo):
            verdict = check_leads_to(params, query.p, query.q, search, state_cap)
        elif isinstance(query, ExistsGlobally):
            verdict = check_exists_globally(params, query.pred, search, state_cap)
        elif isinstance(query, AlwaysEventually):
            verdict = check_always_eventually(params, query.pred, search, state_cap)
        else:
            raise TypeError(f"query no soportada por el checker: {query}")
    except ResourceExhausted as e:
        logger.warning(f"✗ {e}")
        return Verdict(str(query), VerdictStatus.UNKNOWN, states_explored=e.states_explored, note=str(e))

    marca = "✓" if verdict.holds else "✗"
    logger.info(
        f"{marca} {verdict.status.value}: {verdict.states_explored:,} estados en {verdict.duration:.2f}s"
    )
    return verdict


def write_evidence(verdict: Verdict, directory: Optional[Path] = None) -> Optional[Path]:
    """Guarda la traza de evidencia en <artifacts>/<slug(query)>.trace."""
    if verdict.evidence is None:
        return None
    directory = Path(directory) if directory is not None else artifacts_path()
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{slugify(verdict.query, max_length=80) or 'query'}.trace"
    header = [f"query: {verdict.query}", f"verdict: {verdict.status.value}", f"evidence: {verdict.evidence_kind}"]
    if verdict.lasso_start is not None:
        header.append(f"lasso_start: {verdict.lasso_start}")
    path.write_text(format_trace(verdict.evidence, header), encoding="utf-8")
    logger.info(f"Evidencia guardada en {path}")
    return path


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "SearchOrder",
    "VerdictStatus",
    "Verdict",
    "StateGraph",
    "cyclic_nodes",
    "find_bad_path",
    "check_invariant",
    "check_reachability",
    "check_leads_to",
    "check_exists_globally",
    "check_always_eventually",
    "check",
    "write_evidence",
]
