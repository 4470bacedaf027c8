"""
Lenguaje de queries del checker y del SMC.

Gramática lark (LALR, lexer contextual) para:

    A[] p     E<> p     E[] p     A<> p     p --> q
    Pr[<=T](<> p)       E[<=T;K](max: expr)

y para las líneas de steps-query `steps[k] == svc0:ORC_CHECK`.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

from lark import Lark, Transformer, v_args
from lark.exceptions import LarkError, VisitError

from src.core.errors import QuerySyntaxError, StepsQuerySyntaxError
from src.model.predicates import (
    FALSE,
    TRUE,
    AllEmpty,
    AllTerminated,
    And,
    AnyTimeout,
    Deadlock,
    Exists,
    ExprBin,
    ExprIndex,
    ExprInt,
    Expression,
    Forall,
    IdxBin,
    IdxCmp,
    IdxInt,
    IdxN,
    IdxVar,
    Imply,
    IsFull,
    Iverson,
    Not,
    Occ,
    Or,
    OrcAt,
    Predicate,
    StepsEq,
    Sum,
    SvcAt,
    SvcD1,
    TimerAt,
    max_steps_index,
)
from src.model.protocol import MessageConst, StepMarker
from src.model.state import ORC_OWNER, OrcLocation, SvcLocation, TimerLocation

logger = logging.getLogger(__name__)


# ============================================================================
# TIPOS DE QUERY
# ============================================================================

@dataclass(frozen=True)
class Invariant:
    pred: Predicate

    def __str__(self) -> str:
        return f"A[] {self.pred}"


@dataclass(frozen=True)
class Reach:
    pred: Predicate

    def __str__(self) -> str:
        return f"E<> {self.pred}"


@dataclass(frozen=True)
class LeadsTo:
    p: Predicate
    q: Predicate

    def __str__(self) -> str:
        return f"{self.p} --> {self.q}"


@dataclass(frozen=True)
class ExistsGlobally:
    pred: Predicate

    def __str__(self) -> str:
        return f"E[] {self.pred}"


@dataclass(frozen=True)
class AlwaysEventually:
    pred: Predicate

    def __str__(self) -> str:
        return f"A<> {self.pred}"


@dataclass(frozen=True)
class Probability:
    """Pr[<=horizon](<> pred)."""

    horizon: int
    pred: Predicate

    def __str__(self) -> str:
        return f"Pr[<={self.horizon}](<> {self.pred})"


@dataclass(frozen=True)
class ExpectedMax:
    """E[<=horizon;runs](max: expr)."""

    horizon: int
    runs: int
    expr: Expression

    def __str__(self) -> str:
        return f"E[<={self.horizon};{self.runs}](max: {self.expr})"


Query = Union[Invariant, Reach, LeadsTo, ExistsGlobally, AlwaysEventually, Probability, ExpectedMax]
CheckerQuery = Union[Invariant, Reach, LeadsTo, ExistsGlobally, AlwaysEventually]


def query_predicates(query: Query) -> Tuple[Predicate, ...]:
    if isinstance(query, LeadsTo):
        return (query.p, query.q)
    if isinstance(query, ExpectedMax):
        return ()
    return (query.pred,)


def query_steps_capacity(query: Query) -> int:
    """Capacidad mínima del log de steps que necesita la query (0 = sin instrumentar)."""
    return max((max_steps_index(p) for p in query_predicates(query)), default=-1) + 1


# ============================================================================
# GRAMÁTICA
# ============================================================================

GRAMMAR = r"""
?query: _ALWAYS pred                                        -> invariant
      | _REACH pred                                         -> reach
      | _EXISTS_G pred                                      -> exists_globally
      | _EVENTUALLY pred                                    -> always_eventually
      | pred "-->" pred                                     -> leads_to
      | "Pr" "[" "<=" INT "]" "(" "<>" pred ")"             -> probability
      | "E" "[" "<=" INT ";" INT "]" "(" "max" ":" expr ")" -> expected_max

?pred: disj
     | disj "->" pred                   -> imply
     | disj "imply" pred                -> imply

?disj: conj
     | disj "||" conj                   -> or_
     | disj "or" conj                   -> or_

?conj: unary
     | conj "&&" unary                  -> and_
     | conj "and" unary                 -> and_

?unary: "!" unary                       -> not_
      | "not" unary                     -> not_
      | "forall" NAME ":" pred          -> forall
      | "exists" NAME ":" pred          -> exists
      | atom

?atom: "(" pred ")"
     | "true"                           -> true
     | "false"                          -> false
     | "deadlock"                       -> deadlock
     | "allEmpty" "(" ")"               -> all_empty
     | "allTerminated" "(" ")"          -> all_terminated
     | "anyTimeout" "(" ")"             -> any_timeout
     | "isFull" "(" idx ")"             -> is_full
     | "orc" "." NAME                   -> orc_at
     | "svc" "(" idx ")" "." NAME       -> svc_at
     | "svc" "(" idx ")" "." "d1" EQOP NAME -> svc_d1
     | "st" "(" idx ")" "." NAME        -> st_at
     | "steps" "[" INT "]" "==" owner ":" NAME -> steps_eq
     | idx CMPOP idx                    -> idx_cmp

owner: NAME                             -> owner_name
     | "orc"                            -> owner_orc

?idx: idx_atom
    | idx "+" idx_atom                  -> idx_add
    | idx "-" idx_atom                  -> idx_sub

?idx_atom: INT                          -> idx_int
         | "N"                          -> idx_n
         | NAME                         -> idx_var

?expr: eterm
     | expr "+" eterm                   -> e_add
     | expr "-" eterm                   -> e_sub

?eterm: efactor
      | eterm "*" efactor               -> e_mul

?efactor: INT                           -> e_int
        | "N"                           -> e_n
        | "occ" "(" idx ")"             -> e_occ
        | "occ_back" "(" idx ")"        -> e_occ_back
        | "sum" NAME ":" expr           -> e_sum
        | "[" pred "]"                  -> e_iverson
        | "(" expr ")"

_ALWAYS.2: "A[]"
_REACH.2: "E<>"
_EXISTS_G.2: "E[]"
_EVENTUALLY.2: "A<>"
EQOP: "==" | "!="
CMPOP: "==" | "!=" | "<=" | ">=" | "<" | ">"
NAME: /[A-Za-z_][A-Za-z_0-9]*/

%import common.INT
%import common.WS
%ignore WS
"""


@v_args(inline=True)
class _QueryBuilder(Transformer):
    """Convierte el árbol de lark en queries, predicados y expresiones."""

    # -- queries --
    def invariant(self, p):
        return Invariant(p)

    def reach(self, p):
        return Reach(p)

    def exists_globally(self, p):
        return ExistsGlobally(p)

    def always_eventually(self, p):
        return AlwaysEventually(p)

    def leads_to(self, p, q):
        return LeadsTo(p, q)

    def probability(self, horizon, p):
        return Probability(int(horizon), p)

    def expected_max(self, horizon, runs, expr):
        return ExpectedMax(int(horizon), int(runs), expr)

    # -- conectivas --
    def imply(self, a, b):
        return Imply(a, b)

    def or_(self, a, b):
        return Or(a, b)

    def and_(self, a, b):
        return And(a, b)

    def not_(self, a):
        return Not(a)

    def forall(self, var, body):
        return Forall(str(var), body)

    def exists(self, var, body):
        return Exists(str(var), body)

    # -- átomos --
    def true(self):
        return TRUE

    def false(self):
        return FALSE

    def deadlock(self):
        return Deadlock()

    def all_empty(self):
        return AllEmpty()

    def all_terminated(self):
        return AllTerminated()

    def any_timeout(self):
        return AnyTimeout()

    def is_full(self, idx):
        return IsFull(idx)

    def orc_at(self, name):
        return OrcAt(_lookup(OrcLocation, name, "ubicación del orquestador"))

    def svc_at(self, idx, name):
        return SvcAt(idx, _lookup(SvcLocation, name, "ubicación de servicio"))

    def svc_d1(self, idx, op, name):
        return SvcD1(idx, _lookup(MessageConst, name, "mensaje"), negated=str(op) == "!=")

    def st_at(self, idx, name):
        return TimerAt(idx, _lookup(TimerLocation, name, "ubicación de SocketTimeout"))

    def steps_eq(self, k, owner, marker):
        return StepsEq(int(k), owner, _lookup(StepMarker, marker, "marcador"))

    def owner_name(self, name):
        return parse_owner(str(name))

    def owner_orc(self):
        return ORC_OWNER

    def idx_cmp(self, a, op, b):
        return IdxCmp(str(op), a, b)

    # -- índices --
    def idx_int(self, n):
        return IdxInt(int(n))

    def idx_n(self):
        return IdxN()

    def idx_var(self, name):
        return IdxVar(str(name))

    def idx_add(self, a, b):
        return IdxBin("+", a, b)

    def idx_sub(self, a, b):
        return IdxBin("-", a, b)

    # -- expresiones --
    def e_int(self, n):
        return ExprInt(int(n))

    def e_n(self):
        return ExprIndex(IdxN())

    def e_occ(self, idx):
        return Occ(idx)

    def e_occ_back(self, idx):
        return Occ(idx, back=True)

    def e_sum(self, var, body):
        return Sum(str(var), body)

    def e_iverson(self, pred):
        return Iverson(pred)

    def e_add(self, a, b):
        return ExprBin("+", a, b)

    def e_sub(self, a, b):
        return ExprBin("-", a, b)

    def e_mul(self, a, b):
        return ExprBin("*", a, b)


def _lookup(enum_cls, name, what: str):
    try:
        return enum_cls[str(name)]
    except KeyError:
        raise QuerySyntaxError(f"{what} desconocido: {name}") from None


def parse_owner(text: str) -> int:
    """'orc' -> -1, 'svc3' -> 3."""
    if text == "orc":
        return ORC_OWNER
    if text.startswith("svc") and text[3:].isdigit():
        return int(text[3:])
    raise QuerySyntaxError(f"dueño desconocido: {text!r} (use orc o svc<j>)")


_PARSER = Lark(GRAMMAR, start=["query", "pred", "expr"], parser="lalr", lexer="contextual")


def _parse(text: str, start: str):
    try:
        tree = _PARSER.parse(text, start=start)
        return _QueryBuilder().transform(tree)
    except VisitError as e:
        if isinstance(e.orig_exc, QuerySyntaxError):
            raise e.orig_exc from None
        raise QuerySyntaxError(f"{text!r}: {e.orig_exc}") from None
    except LarkError as e:
        raise QuerySyntaxError(f"{text!r}: {e}") from None


def parse_query(text: str) -> Query:
    """
    Parsea una query del checker o del SMC.

    Raises:
        QuerySyntaxError: Si el texto no pertenece a la gramática
    """
    query = _parse(text.strip(), "query")
    if not isinstance(query, (Invariant, Reach, LeadsTo, ExistsGlobally, AlwaysEventually, Probability, ExpectedMax)):
        raise QuerySyntaxError(f"{text!r}: falta el operador de la query (A[], E<>, -->, E[], A<>, Pr, E)")
    return query


def parse_predicate(text: str) -> Predicate:
    return _parse(text.strip(), "pred")


def parse_expression(text: str) -> Expression:
    return _parse(text.strip(), "expr")


def read_query_file(path: Path) -> List[str]:
    """Líneas de query de un archivo, sin comentarios '#' ni líneas vacías."""
    lines = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    return lines


# ============================================================================
# STEPS-QUERIES
# ============================================================================

StepConstraint = Tuple[int, int, StepMarker]


def parse_steps_query(text: str) -> List[StepConstraint]:
    """
    Parsea un archivo de steps-query.

    Una línea por restricción: `steps[<k>] == <owner>:<MARKER>`. Los índices
    deben crecer de uno en uno desde 0.

    Returns:
        Lista de (k, owner, marker)

    Raises:
        StepsQuerySyntaxError: Línea mal formada o índices no consecutivos
    """
    constraints: List[StepConstraint] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            pred = parse_predicate(line)
        except QuerySyntaxError as e:
            raise StepsQuerySyntaxError(f"línea {number}: {e}") from None
        if not isinstance(pred, StepsEq):
            raise StepsQuerySyntaxError(f"línea {number}: se esperaba steps[k] == dueño:MARCADOR")
        if pred.k != len(constraints):
            raise StepsQuerySyntaxError(
                f"línea {number}: índice {pred.k}, se esperaba {len(constraints)}"
            )
        constraints.append((pred.k, pred.owner, pred.marker))
    return constraints


def steps_predicate(constraints: List[StepConstraint]) -> Predicate:
    """Conjunción de las restricciones (true si no hay)."""
    pred: Predicate = TRUE
    for k, owner, marker in reversed(constraints):
        atom = StepsEq(k, owner, marker)
        pred = atom if pred is TRUE else And(atom, pred)
    return pred


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "Invariant",
    "Reach",
    "LeadsTo",
    "ExistsGlobally",
    "AlwaysEventually",
    "Probability",
    "ExpectedMax",
    "Query",
    "CheckerQuery",
    "query_predicates",
    "query_steps_capacity",
    "GRAMMAR",
    "parse_owner",
    "parse_query",
    "parse_predicate",
    "parse_expression",
    "read_query_file",
    "StepConstraint",
    "parse_steps_query",
    "steps_predicate",
]
