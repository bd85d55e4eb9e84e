"""AST for the Sol subset (Solidity 0.4.x surface syntax).

The parser builds these nodes for anything it can read, including constructs
that are outside Sol (loops, dynamic arrays, bitwise operators, ...): the
subset validator reports those as violations with rule numbers instead of the
parser refusing them.  Every node carries a source span.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


DUMMY_SPAN = Span(0, 0, 0, 0)


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class SolType:
    pass


@dataclass(frozen=True)
class UintType(SolType):
    def __str__(self) -> str:
        return "uint"


@dataclass(frozen=True)
class BoolType(SolType):
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class AddressType(SolType):
    def __str__(self) -> str:
        return "address"


@dataclass(frozen=True)
class EnumType(SolType):
    name: str
    members: tuple[str, ...]

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class MappingType(SolType):
    value: SolType

    def __str__(self) -> str:
        return f"mapping(address => {self.value})"


@dataclass(frozen=True)
class ArrayType(SolType):
    elem: SolType
    length: int

    def __str__(self) -> str:
        return f"{self.elem}[{self.length}]"


@dataclass(frozen=True)
class DynArrayType(SolType):
    elem: SolType

    def __str__(self) -> str:
        return f"{self.elem}[]"


@dataclass(frozen=True)
class StringType(SolType):
    def __str__(self) -> str:
        return "string"


@dataclass(frozen=True)
class BytesType(SolType):
    def __str__(self) -> str:
        return "bytes"


UINT = UintType()
BOOLT = BoolType()
ADDRESS = AddressType()
STRING = StringType()
BYTES = BytesType()


def is_scalar(ty: SolType) -> bool:
    return isinstance(ty, (UintType, BoolType, AddressType, EnumType))


# ---------------------------------------------------------------------------
# Expressions


@dataclass
class Expr:
    span: Span = field(init=False, default=DUMMY_SPAN)
    ty: Optional[SolType] = field(init=False, default=None)

    def with_span(self, span: Span) -> "Expr":
        self.span = span
        return self


@dataclass
class IntLit(Expr):
    value: int


@dataclass
class BoolLit(Expr):
    value: bool


@dataclass
class StrLit(Expr):
    value: str


@dataclass
class Ident(Expr):
    name: str


@dataclass
class Member(Expr):
    obj: Expr
    name: str


@dataclass
class Index(Expr):
    base: Expr
    index: Expr


@dataclass
class Binary(Expr):
    op: str
    lhs: Expr
    rhs: Expr


@dataclass
class Unary(Expr):
    op: str
    operand: Expr


@dataclass
class Conditional(Expr):
    cond: Expr
    then: Expr
    els: Expr


@dataclass
class Call(Expr):
    callee: Expr
    args: list[Expr]


@dataclass
class New(Expr):
    type_name: str
    args: list[Expr]


# ---------------------------------------------------------------------------
# Statements


@dataclass
class Stmt:
    span: Span = field(init=False, default=DUMMY_SPAN)

    def with_span(self, span: Span) -> "Stmt":
        self.span = span
        return self


@dataclass
class VarDeclStmt(Stmt):
    name: str
    declared_ty: Optional[SolType]  # None for `var`
    init: Optional[Expr]


@dataclass
class AssignStmt(Stmt):
    target: Expr
    op: str  # '=', '+=', '-=', '*=', '/=', '%='
    value: Expr


@dataclass
class ExprStmt(Stmt):
    expr: Expr


@dataclass
class IfStmt(Stmt):
    cond: Expr
    then_body: list[Stmt]
    else_body: Optional[list[Stmt]]


@dataclass
class ReturnStmt(Stmt):
    value: Optional[Expr]


@dataclass
class EmitStmt(Stmt):
    event: str
    args: list[Expr]


@dataclass
class ThrowStmt(Stmt):
    pass


@dataclass
class WhileStmt(Stmt):
    cond: Expr
    body: list[Stmt]
    is_do_while: bool = False


@dataclass
class ForStmt(Stmt):
    init: Optional[Stmt]
    cond: Optional[Expr]
    post: Optional[Stmt]
    body: list[Stmt]


# ---------------------------------------------------------------------------
# Declarations


@dataclass
class VarDecl:
    name: str
    ty: SolType
    init: Optional[Expr]
    is_constant: bool
    span: Span


@dataclass
class Param:
    name: str
    ty: SolType
    span: Span


@dataclass
class EventDecl:
    name: str
    params: list[Param]
    span: Span


@dataclass
class EnumDecl:
    name: str
    members: list[str]
    span: Span


@dataclass
class FunDecl:
    name: str
    params: list[Param]
    visibility: str  # public | external | internal | private
    payable: bool
    return_ty: Optional[SolType]
    body: Optional[list[Stmt]]  # None for interface signatures
    is_constructor: bool
    span: Span

    @property
    def is_public(self) -> bool:
        return self.visibility in ("public", "external")


@dataclass
class ContractAst:
    name: str
    state_vars: list[VarDecl]
    enums: list[EnumDecl]
    events: list[EventDecl]
    functions: list[FunDecl]
    ctor: Optional[FunDecl]
    interface_events: list[EventDecl]
    bases: list[str]
    other_contract_names: list[str]  # further concrete contracts in the unit (Sol rule 5)
    span: Span

    def public_functions(self) -> list[FunDecl]:
        return [f for f in self.functions if f.is_public and not f.is_constructor]

    def function(self, name: str) -> Optional[FunDecl]:
        for f in self.functions:
            if f.name == name:
                return f
        return None

    def event(self, name: str) -> Optional[EventDecl]:
        for e in self.events + self.interface_events:
            if e.name == name:
                return e
        return None

    def state_var(self, name: str) -> Optional[VarDecl]:
        for v in self.state_vars:
            if v.name == name:
                return v
        return None

    def enum(self, name: str) -> Optional[EnumDecl]:
        for e in self.enums:
            if e.name == name:
                return e
        return None


# ---------------------------------------------------------------------------
# Diagnostics


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # 'syntax' | 'type'
    message: str
    span: Span

    def __str__(self) -> str:
        return f"{self.span.line}:{self.span.col}: {self.kind} error: {self.message}"


@dataclass(frozen=True)
class SubsetViolation:
    rule: int  # 1..9 for Sol rules, 0 for constructor model restrictions
    message: str
    span: Span

    def __str__(self) -> str:
        label = f"Sol rule {self.rule}" if self.rule else "constructor restriction"
        return f"{self.span.line}:{self.span.col}: {label}: {self.message}"

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "message": self.message,
            "line": self.span.line,
            "col": self.span.col,
        }


class ParseError(Exception):
    def __init__(self, message: str, span: Span):
        super().__init__(message)
        self.message = message
        self.span = span


def ast_equal(a, b) -> bool:
    """Structural equality ignoring spans and inferred types."""
    if type(a) is not type(b):
        return False
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(ast_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, (Expr, Stmt, VarDecl, Param, EventDecl, EnumDecl, FunDecl, ContractAst)):
        for name in a.__dataclass_fields__:
            if name in ("span", "ty"):
                continue
            if not ast_equal(getattr(a, name), getattr(b, name)):
                return False
        return True
    return a == b
