"""
Predicados y expresiones sobre SystemState.

Árboles inmutables construidos por el parser de queries (src.model.queries)
y evaluados contra un estado. Los índices de servicio se resuelven en tiempo
de evaluación: un índice fuera de rango sólo falla si el átomo se evalúa,
así que guardas como `i < N-1 && svc(i+1).Ready` son válidas.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Tuple

from src.core.errors import MalformedPredicate
from src.model.protocol import MessageConst, StepMarker
from src.model.semantics import is_deadlock
from src.model.state import OrcLocation, SvcLocation, SystemState, TimerLocation

logger = logging.getLogger(__name__)


# ============================================================================
# CONTEXTO DE EVALUACIÓN
# ============================================================================

@dataclass
class EvalContext:
    """Estado evaluado, parámetros (para deadlock) y variables ligadas."""

    state: SystemState
    params: Optional[object] = None
    env: Dict[str, int] = field(default_factory=dict)

    def bind(self, name: str, value: int) -> "EvalContext":
        env = dict(self.env)
        env[name] = value
        return EvalContext(self.state, self.params, env)

    def service(self, index: "IndexExpr") -> int:
        j = index.value(self)
        n = self.state.n_services
        if not 0 <= j < n:
            raise MalformedPredicate(f"índice de servicio {j} fuera de rango [0, {n - 1}]")
        return j


# ============================================================================
# EXPRESIONES DE ÍNDICE
# ============================================================================

class IndexExpr:
    def value(self, ctx: EvalContext) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class IdxInt(IndexExpr):
    n: int

    def value(self, ctx: EvalContext) -> int:
        return self.n

    def __str__(self) -> str:
        return str(self.n)


@dataclass(frozen=True)
class IdxVar(IndexExpr):
    name: str

    def value(self, ctx: EvalContext) -> int:
        if self.name not in ctx.env:
            raise MalformedPredicate(f"variable de índice no ligada: {self.name}")
        return ctx.env[self.name]

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class IdxN(IndexExpr):
    def value(self, ctx: EvalContext) -> int:
        return ctx.state.n_services

    def __str__(self) -> str:
        return "N"


@dataclass(frozen=True)
class IdxBin(IndexExpr):
    op: str
    left: IndexExpr
    right: IndexExpr

    def value(self, ctx: EvalContext) -> int:
        a = self.left.value(ctx)
        b = self.right.value(ctx)
        return a + b if self.op == "+" else a - b

    def __str__(self) -> str:
        return f"{self.left}{self.op}{self.right}"


# ============================================================================
# PREDICADOS
# ============================================================================

class Predicate:
    """Nodo base. holds() evalúa; children() recorre el árbol."""

    def holds(self, ctx: EvalContext) -> bool:
        raise NotImplementedError

    def children(self) -> Tuple["Predicate", ...]:
        return ()

    def walk(self) -> Iterator["Predicate"]:
        yield self
        for child in self.children():
            yield from child.walk()


@dataclass(frozen=True)
class Const(Predicate):
    truth: bool

    def holds(self, ctx: EvalContext) -> bool:
        return self.truth

    def __str__(self) -> str:
        return "true" if self.truth else "false"


@dataclass(frozen=True)
class OrcAt(Predicate):
    loc: OrcLocation

    def holds(self, ctx: EvalContext) -> bool:
        return ctx.state.orc_loc is self.loc

    def __str__(self) -> str:
        return f"orc.{self.loc.name}"


@dataclass(frozen=True)
class SvcAt(Predicate):
    index: IndexExpr
    loc: SvcLocation

    def holds(self, ctx: EvalContext) -> bool:
        return ctx.state.svc_locs[ctx.service(self.index)] is self.loc

    def __str__(self) -> str:
        return f"svc({self.index}).{self.loc.name}"


@dataclass(frozen=True)
class TimerAt(Predicate):
    index: IndexExpr
    loc: TimerLocation

    def holds(self, ctx: EvalContext) -> bool:
        return ctx.state.timer_locs[ctx.service(self.index)] is self.loc

    def __str__(self) -> str:
        return f"st({self.index}).{self.loc.name}"


@dataclass(frozen=True)
class SvcD1(Predicate):
    index: IndexExpr
    message: MessageConst
    negated: bool = False

    def holds(self, ctx: EvalContext) -> bool:
        equal = ctx.state.svc_d1[ctx.service(self.index)] is self.message
        return equal != self.negated

    def __str__(self) -> str:
        op = "!=" if self.negated else "=="
        return f"svc({self.index}).d1{op}{self.message.name}"


@dataclass(frozen=True)
class StepsEq(Predicate):
    k: int
    owner: int
    marker: StepMarker

    def holds(self, ctx: EvalContext) -> bool:
        return ctx.state.step_at(self.k) == (self.owner, self.marker)

    def __str__(self) -> str:
        owner = "orc" if self.owner < 0 else f"svc{self.owner}"
        return f"steps[{self.k}]=={owner}:{self.marker.name}"


@dataclass(frozen=True)
class AllEmpty(Predicate):
    def holds(self, ctx: EvalContext) -> bool:
        return ctx.state.all_empty()

    def __str__(self) -> str:
        return "allEmpty()"


@dataclass(frozen=True)
class IsFull(Predicate):
    """Buffer orc2services[i] lleno."""

    index: IndexExpr

    def holds(self, ctx: EvalContext) -> bool:
        return ctx.state.orc2services[ctx.service(self.index)].available == 0

    def __str__(self) -> str:
        return f"isFull({self.index})"


@dataclass(frozen=True)
class AllTerminated(Predicate):
    def holds(self, ctx: EvalContext) -> bool:
        return ctx.state.all_terminated()

    def __str__(self) -> str:
        return "allTerminated()"


@dataclass(frozen=True)
class AnyTimeout(Predicate):
    def holds(self, ctx: EvalContext) -> bool:
        return ctx.state.any_timeout()

    def __str__(self) -> str:
        return "anyTimeout()"


@dataclass(frozen=True)
class Deadlock(Predicate):
    def holds(self, ctx: EvalContext) -> bool:
        if ctx.params is None:
            raise MalformedPredicate("'deadlock' requiere los parámetros del sistema")
        return is_deadlock(ctx.state, ctx.params)

    def __str__(self) -> str:
        return "deadlock"


_CMP = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


@dataclass(frozen=True)
class IdxCmp(Predicate):
    op: str
    left: IndexExpr
    right: IndexExpr

    def holds(self, ctx: EvalContext) -> bool:
        return _CMP[self.op](self.left.value(ctx), self.right.value(ctx))

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class Not(Predicate):
    operand: Predicate

    def holds(self, ctx: EvalContext) -> bool:
        return not self.operand.holds(ctx)

    def children(self) -> Tuple[Predicate, ...]:
        return (self.operand,)

    def __str__(self) -> str:
        text = str(self.operand)
        # Átomos y binarios ya agrupados no llevan paréntesis extra
        if " " not in text or isinstance(self.operand, (And, Or, Imply)):
            return f"!{text}"
        return f"!({text})"


@dataclass(frozen=True)
class And(Predicate):
    left: Predicate
    right: Predicate

    def holds(self, ctx: EvalContext) -> bool:
        return self.left.holds(ctx) and self.right.holds(ctx)

    def children(self) -> Tuple[Predicate, ...]:
        return (self.left, self.right)

    def __str__(self) -> str:
        return f"({self.left} && {self.right})"


@dataclass(frozen=True)
class Or(Predicate):
    left: Predicate
    right: Predicate

    def holds(self, ctx: EvalContext) -> bool:
        return self.left.holds(ctx) or self.right.holds(ctx)

    def children(self) -> Tuple[Predicate, ...]:
        return (self.left, self.right)

    def __str__(self) -> str:
        return f"({self.left} || {self.right})"


@dataclass(frozen=True)
class Imply(Predicate):
    left: Predicate
    right: Predicate

    def holds(self, ctx: EvalContext) -> bool:
        return not self.left.holds(ctx) or self.right.holds(ctx)

    def children(self) -> Tuple[Predicate, ...]:
        return (self.left, self.right)

    def __str__(self) -> str:
        return f"({self.left} -> {self.right})"


@dataclass(frozen=True)
class Forall(Predicate):
    var: str
    body: Predicate

    def holds(self, ctx: EvalContext) -> bool:
        return all(self.body.holds(ctx.bind(self.var, j)) for j in range(ctx.state.n_services))

    def children(self) -> Tuple[Predicate, ...]:
        return (self.body,)

    def __str__(self) -> str:
        return f"(forall {self.var}: {self.body})"


@dataclass(frozen=True)
class Exists(Predicate):
    var: str
    body: Predicate

    def holds(self, ctx: EvalContext) -> bool:
        return any(self.body.holds(ctx.bind(self.var, j)) for j in range(ctx.state.n_services))

    def children(self) -> Tuple[Predicate, ...]:
        return (self.body,)

    def __str__(self) -> str:
        return f"(exists {self.var}: {self.body})"


TRUE = Const(True)
FALSE = Const(False)


def eval_predicate(
    state: SystemState,
    pred: Predicate,
    params: Optional[object] = None,
    env: Optional[Dict[str, int]] = None,
) -> bool:
    """
    Evalúa un predicado en un estado.

    Args:
        state: Estado a evaluar
        pred: Árbol del predicado
        params: SystemParams, necesarios sólo para 'deadlock'
        env: Variables de índice ya ligadas

    Raises:
        MalformedPredicate: Índice fuera de rango o variable no ligada
    """
    return pred.holds(EvalContext(state, params, dict(env or {})))


def max_steps_index(pred: Predicate) -> int:
    """Mayor k de los átomos steps[k] (-1 si no hay)."""
    return max((node.k for node in pred.walk() if isinstance(node, StepsEq)), default=-1)


# ============================================================================
# EXPRESIONES ENTERAS (SMC)
# ============================================================================

class Expression:
    def value(self, ctx: EvalContext) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class ExprInt(Expression):
    n: int

    def value(self, ctx: EvalContext) -> int:
        return self.n

    def __str__(self) -> str:
        return str(self.n)


@dataclass(frozen=True)
class ExprIndex(Expression):
    """Índice usado como valor (N, variable ligada)."""

    index: IndexExpr

    def value(self, ctx: EvalContext) -> int:
        return self.index.value(ctx)

    def __str__(self) -> str:
        return str(self.index)


@dataclass(frozen=True)
class Occ(Expression):
    """Celdas ocupadas de orc2services[j] (o services2orc[j] si back)."""

    index: IndexExpr
    back: bool = False

    def value(self, ctx: EvalContext) -> int:
        j = ctx.service(self.index)
        buffers = ctx.state.services2orc if self.back else ctx.state.orc2services
        return len(buffers[j])

    def __str__(self) -> str:
        return f"{'occ_back' if self.back else 'occ'}({self.index})"


@dataclass(frozen=True)
class Sum(Expression):
    var: str
    body: Expression

    def value(self, ctx: EvalContext) -> int:
        return sum(self.body.value(ctx.bind(self.var, j)) for j in range(ctx.state.n_services))

    def __str__(self) -> str:
        return f"(sum {self.var}: {self.body})"


@dataclass(frozen=True)
class Iverson(Expression):
    pred: Predicate

    def value(self, ctx: EvalContext) -> int:
        return 1 if self.pred.holds(ctx) else 0

    def __str__(self) -> str:
        return f"[{self.pred}]"


@dataclass(frozen=True)
class ExprBin(Expression):
    op: str
    left: Expression
    right: Expression

    def value(self, ctx: EvalContext) -> int:
        a = self.left.value(ctx)
        b = self.right.value(ctx)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        return a * b

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


def eval_expression(
    state: SystemState,
    expr: Expression,
    params: Optional[object] = None,
    env: Optional[Dict[str, int]] = None,
) -> int:
    return expr.value(EvalContext(state, params, dict(env or {})))


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "EvalContext",
    "IndexExpr",
    "IdxInt",
    "IdxVar",
    "IdxN",
    "IdxBin",
    "Predicate",
    "Const",
    "OrcAt",
    "SvcAt",
    "TimerAt",
    "SvcD1",
    "StepsEq",
    "AllEmpty",
    "IsFull",
    "AllTerminated",
    "AnyTimeout",
    "Deadlock",
    "IdxCmp",
    "Not",
    "And",
    "Or",
    "Imply",
    "Forall",
    "Exists",
    "TRUE",
    "FALSE",
    "eval_predicate",
    "max_steps_index",
    "Expression",
    "ExprInt",
    "ExprIndex",
    "Occ",
    "Sum",
    "Iverson",
    "ExprBin",
    "eval_expression",
]
