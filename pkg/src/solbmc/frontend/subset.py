"""Sol subset validation: rules 1-9 plus the constructor restrictions.

Rule map:
  1 loops and recursion            6 events limited to 4 arguments
  2 dynamic memory management      7 finite address domain
  3 dynamic (unsized) arrays       8 external calls / contract creation
  4 `var` declarations             9 bitwise and string operations
  5 exactly one contract

Constructor restrictions (rule number 0): no construct that may throw, no
transfer/selfdestruct, no event emission.
"""

from __future__ import annotations

from typing import Iterable, Optional

from .nodes import (
    AddressType, ArrayType, AssignStmt, Binary, BytesType, Call, Conditional,
    ContractAst, DynArrayType, EmitStmt, EventDecl, Expr, ExprStmt, ForStmt,
    FunDecl, Ident, IfStmt, Index, IntLit, MappingType, Member, New,
    ReturnStmt, SolType, Stmt, StringType, SubsetViolation, ThrowStmt, Unary,
    VarDeclStmt, WhileStmt,
)

BITWISE_OPS = {"&", "|", "^", "<<", ">>"}


def _walk_exprs(expr: Expr) -> Iterable[Expr]:
    yield expr
    if isinstance(expr, Member):
        yield from _walk_exprs(expr.obj)
    elif isinstance(expr, Index):
        yield from _walk_exprs(expr.base)
        yield from _walk_exprs(expr.index)
    elif isinstance(expr, Binary):
        yield from _walk_exprs(expr.lhs)
        yield from _walk_exprs(expr.rhs)
    elif isinstance(expr, Unary):
        yield from _walk_exprs(expr.operand)
    elif isinstance(expr, Conditional):
        yield from _walk_exprs(expr.cond)
        yield from _walk_exprs(expr.then)
        yield from _walk_exprs(expr.els)
    elif isinstance(expr, Call):
        yield from _walk_exprs(expr.callee)
        for a in expr.args:
            yield from _walk_exprs(a)
    elif isinstance(expr, New):
        for a in expr.args:
            yield from _walk_exprs(a)


def _walk_stmts(stmts: list[Stmt]) -> Iterable[Stmt]:
    for stmt in stmts:
        yield stmt
        if isinstance(stmt, IfStmt):
            yield from _walk_stmts(stmt.then_body)
            if stmt.else_body is not None:
                yield from _walk_stmts(stmt.else_body)
        elif isinstance(stmt, WhileStmt):
            yield from _walk_stmts(stmt.body)
        elif isinstance(stmt, ForStmt):
            if stmt.init is not None:
                yield from _walk_stmts([stmt.init])
            if stmt.post is not None:
                yield from _walk_stmts([stmt.post])
            yield from _walk_stmts(stmt.body)


def _stmt_exprs(stmt: Stmt) -> Iterable[Expr]:
    if isinstance(stmt, VarDeclStmt) and stmt.init is not None:
        yield from _walk_exprs(stmt.init)
    elif isinstance(stmt, AssignStmt):
        yield from _walk_exprs(stmt.target)
        yield from _walk_exprs(stmt.value)
    elif isinstance(stmt, ExprStmt):
        yield from _walk_exprs(stmt.expr)
    elif isinstance(stmt, EmitStmt):
        for a in stmt.args:
            yield from _walk_exprs(a)
    elif isinstance(stmt, ReturnStmt) and stmt.value is not None:
        yield from _walk_exprs(stmt.value)
    elif isinstance(stmt, WhileStmt):
        yield from _walk_exprs(stmt.cond)
    elif isinstance(stmt, ForStmt):
        if stmt.cond is not None:
            yield from _walk_exprs(stmt.cond)
    elif isinstance(stmt, IfStmt):
        yield from _walk_exprs(stmt.cond)


def _flag_type(ty: SolType, span, what: str, out: list[SubsetViolation]) -> None:
    if isinstance(ty, DynArrayType):
        out.append(SubsetViolation(3, f"{what} uses a dynamic array type (only static arrays)", span))
        _flag_type(ty.elem, span, what, out)
    elif isinstance(ty, StringType):
        out.append(SubsetViolation(9, f"{what} uses the string type", span))
    elif isinstance(ty, BytesType):
        out.append(SubsetViolation(2, f"{what} uses the dynamic bytes type", span))
    elif isinstance(ty, ArrayType):
        _flag_type(ty.elem, span, what, out)
    elif isinstance(ty, MappingType):
        _flag_type(ty.value, span, what, out)


def validate_subset(ast: ContractAst) -> list[SubsetViolation]:
    """Return every rule 1-9 violation; an empty list means the contract is Sol."""
    out: list[SubsetViolation] = []

    for name in ast.other_contract_names:
        out.append(SubsetViolation(5, f"additional contract {name!r} defined (only 1 allowed)", ast.span))

    for ev in ast.events:
        _check_event(ev, out)

    emitted = {s.event for f in _all_functions(ast) for s in _walk_body(f) if isinstance(s, EmitStmt)}
    for ev in ast.interface_events:
        if ev.name in emitted:
            _check_event(ev, out)

    for var in ast.state_vars:
        _flag_type(var.ty, var.span, f"state variable {var.name!r}", out)

    for fn in _all_functions(ast):
        for p in fn.params:
            _flag_type(p.ty, p.span, f"parameter {p.name!r}", out)
        if fn.return_ty is not None:
            _flag_type(fn.return_ty, fn.span, f"return type of {fn.name or 'constructor'}", out)
        if fn.body is not None:
            _check_body(ast, fn, out)

    _check_recursion(ast, out)
    return out


def _check_event(ev: EventDecl, out: list[SubsetViolation]) -> None:
    if len(ev.params) > 4:
        out.append(SubsetViolation(
            6, f"event {ev.name!r} has {len(ev.params)} parameters (no more than 4 allowed)", ev.span
        ))
    for p in ev.params:
        _flag_type(p.ty, p.span, f"event parameter {p.name!r}", out)


def _all_functions(ast: ContractAst) -> list[FunDecl]:
    fns = list(ast.functions)
    if ast.ctor is not None:
        fns.append(ast.ctor)
    return fns


def _walk_body(fn: FunDecl) -> Iterable[Stmt]:
    if fn.body is None:
        return
    yield from _walk_stmts(fn.body)


def _check_body(ast: ContractAst, fn: FunDecl, out: list[SubsetViolation]) -> None:
    for stmt in _walk_body(fn):
        if isinstance(stmt, WhileStmt):
            kind = "do/while" if stmt.is_do_while else "while"
            out.append(SubsetViolation(1, f"{kind} loop is forbidden", stmt.span))
        elif isinstance(stmt, ForStmt):
            out.append(SubsetViolation(1, "for loop is forbidden", stmt.span))
        elif isinstance(stmt, VarDeclStmt):
            if stmt.declared_ty is None:
                out.append(SubsetViolation(4, "the var keyword is forbidden", stmt.span))
            else:
                _flag_type(stmt.declared_ty, stmt.span, f"local {stmt.name!r}", out)
        for expr in _stmt_exprs(stmt):
            _check_expr(ast, expr, out)


def _check_expr(ast: ContractAst, expr: Expr, out: list[SubsetViolation]) -> None:
    if isinstance(expr, Binary) and expr.op in BITWISE_OPS:
        out.append(SubsetViolation(9, f"bitwise operator {expr.op} is not supported", expr.span))
    elif isinstance(expr, Unary) and expr.op == "~":
        out.append(SubsetViolation(9, "bitwise operator ~ is not supported", expr.span))
    elif isinstance(expr, New):
        out.append(SubsetViolation(8, "dynamic contract creation is forbidden", expr.span))
    elif isinstance(expr, Call):
        callee = expr.callee
        if isinstance(callee, Ident):
            if callee.name == "address" and expr.args and isinstance(expr.args[0], IntLit):
                if expr.args[0].value != 0:
                    out.append(SubsetViolation(
                        7, "address values form a finite set; only address(0) is representable", expr.span
                    ))
        elif isinstance(callee, Member):
            obj = callee.obj
            obj_is_address = isinstance(getattr(obj, "ty", None), AddressType)
            if isinstance(obj, Call) and isinstance(obj.callee, Ident) and obj.callee.name == "address":
                obj_is_address = True
            if obj_is_address or (isinstance(obj, Ident) and obj.name == "this"):
                if callee.name == "transfer":
                    return
                if callee.name in ("send", "call", "callcode", "delegatecall"):
                    out.append(SubsetViolation(
                        8, f"low-level call .{callee.name} is not allowed", expr.span
                    ))
                    return
            if isinstance(obj, Ident) and (obj.name == "msg" or ast.enum(obj.name) is not None):
                return
            if callee.name in ("push", "pop"):
                out.append(SubsetViolation(2, f".{callee.name} needs dynamic memory management", expr.span))
                return
            out.append(SubsetViolation(
                8, f"calling another contract's method .{callee.name} is not allowed", expr.span
            ))


def _check_recursion(ast: ContractAst, out: list[SubsetViolation]) -> None:
    graph: dict[str, set[str]] = {}
    fn_names = {f.name for f in ast.functions}
    for fn in _all_functions(ast):
        callees: set[str] = set()
        for stmt in _walk_body(fn):
            for expr in _stmt_exprs(stmt):
                if isinstance(expr, Call) and isinstance(expr.callee, Ident):
                    if expr.callee.name in fn_names:
                        callees.add(expr.callee.name)
        graph[fn.name or "constructor"] = callees

    # Report one violation per cycle (self-loop or larger SCC).
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = [0]
    reported: set[frozenset] = set()

    def strongconnect(v: str) -> None:
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        for w in sorted(graph.get(v, ())):
            if w not in index:
                strongconnect(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp = []
            while True:
                w = stack.pop()
                on_stack.discard(w)
                comp.append(w)
                if w == v:
                    break
            is_cycle = len(comp) > 1 or v in graph.get(v, ())
            key = frozenset(comp)
            if is_cycle and key not in reported:
                reported.add(key)
                names = " -> ".join(sorted(comp))
                fn = ast.function(comp[0])
                span = fn.span if fn is not None else ast.span
                out.append(SubsetViolation(1, f"recursion is forbidden (cycle: {names})", span))

    for v in sorted(graph):
        if v not in index:
            strongconnect(v)


# ---------------------------------------------------------------------------
# Constructor restrictions


def validate_constructor(ast: ContractAst) -> list[SubsetViolation]:
    """Flag constructor statements that may throw or have non-assignment effects.

    An empty result means every initial state comes from a successful
    constructor run whose only side effects are variable assignments.
    """
    out: list[SubsetViolation] = []
    if ast.ctor is None or ast.ctor.body is None:
        return out
    _check_ctor_fn(ast, ast.ctor, out, set())
    return out


def _check_ctor_fn(ast: ContractAst, fn: FunDecl, out: list[SubsetViolation], seen: set[str]) -> None:
    for stmt in _walk_body(fn):
        if isinstance(stmt, ThrowStmt):
            out.append(SubsetViolation(0, "throw is not allowed in a constructor", stmt.span))
        elif isinstance(stmt, EmitStmt):
            out.append(SubsetViolation(0, "event emission is not allowed in a constructor", stmt.span))
        for expr in _stmt_exprs(stmt):
            _check_ctor_expr(ast, expr, out, seen)


def _check_ctor_expr(ast: ContractAst, expr: Expr, out: list[SubsetViolation], seen: set[str]) -> None:
    if isinstance(expr, Binary) and expr.op in ("/", "%"):
        if not isinstance(expr.rhs, IntLit) or expr.rhs.value == 0:
            out.append(SubsetViolation(0, f"operator {expr.op} may throw in a constructor", expr.span))
    elif isinstance(expr, Index):
        base_ty = getattr(expr.base, "ty", None)
        if isinstance(base_ty, ArrayType):
            if not isinstance(expr.index, IntLit) or expr.index.value >= base_ty.length:
                out.append(SubsetViolation(0, "array index may throw in a constructor", expr.span))
    elif isinstance(expr, Call):
        callee = expr.callee
        if isinstance(callee, Ident):
            name = callee.name
            if name in ("require", "assert", "revert", "mulmod", "addmod"):
                out.append(SubsetViolation(0, f"{name} may throw in a constructor", expr.span))
            elif name == "selfdestruct":
                out.append(SubsetViolation(0, "selfdestruct is not allowed in a constructor", expr.span))
            else:
                fn = ast.function(name)
                if fn is not None and fn.name not in seen:
                    seen.add(fn.name)
                    _check_ctor_fn(ast, fn, out, seen)
        elif isinstance(callee, Member) and callee.name == "transfer":
            out.append(SubsetViolation(0, "transfer is not allowed in a constructor", expr.span))
