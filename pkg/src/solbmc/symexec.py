"""Lift public functions to symbolic transitions.

Each public function f is executed symbolically over all paths (finitely
many, since Sol has no loops), producing

  * ``pre``: the exception-freedom precondition over the state and the call
    parameters (value, sender, time, arguments), and
  * per-slot update expressions merging path effects with ite trees,

plus the constructor's initial-state slot expressions and the set of events
the contract can actually emit.

Convention for the symbolic input variables (substituted per step by the
encoder): ``state:<slot>``, ``bal:<addr>``, ``alive``, ``btime``,
``tx:value``, ``tx:sender``, ``tx:time``, ``tx:arg:<param>`` and
``ctor:<param>``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

from . import terms as T
from .frontend.nodes import (
    BOOLT,
    AddressType, ArrayType, AssignStmt, Binary, BoolLit, BoolType, Call,
    Conditional, ContractAst, EmitStmt, EnumType, EventDecl, Expr, ExprStmt,
    FunDecl, Ident, IfStmt, Index, IntLit, MappingType, Member, Param,
    ReturnStmt, SolType, Stmt, StrLit, ThrowStmt, Unary, UintType,
    VarDeclStmt,
)
from .frontend.typecheck import TypeChecker
from .model import AddrDomain, ModelConfig, Slot, state_slots


class UnsupportedConstruct(Exception):
    pass


class MultiEmitError(Exception):
    pass


class CycleError(Exception):
    pass


BUILTIN_CALLS = {"require", "assert", "revert", "selfdestruct", "mulmod", "addmod", "address", "uint"}


def arg_kind(ty: SolType) -> str:
    if isinstance(ty, AddressType):
        return "addr"
    if isinstance(ty, BoolType):
        return "bool"
    return "bv"


# ---------------------------------------------------------------------------
# Event set


@dataclass
class EventSet:
    events: list[EventDecl]
    tag_sort: T.EnumSort
    arg_slots: list[tuple[int, str]]  # (position, kind), deterministic order

    def tag_const(self, name: str) -> T.Term:
        return T.enum_const(self.tag_sort, self.tag_sort.members.index(name))

    @property
    def no_event(self) -> T.Term:
        return T.enum_const(self.tag_sort, 0)

    def event(self, name: str) -> Optional[EventDecl]:
        for e in self.events:
            if e.name == name:
                return e
        return None


def collect_events(ast: ContractAst) -> EventSet:
    """Events actually emitted somewhere in the contract, declaration order."""
    emitted: set[str] = set()

    def walk(stmts: list[Stmt]) -> None:
        for s in stmts:
            if isinstance(s, EmitStmt):
                emitted.add(s.event)
            elif isinstance(s, IfStmt):
                walk(s.then_body)
                if s.else_body is not None:
                    walk(s.else_body)

    for fn in ast.functions:
        if fn.body is not None:
            walk(fn.body)
    events = [e for e in ast.events if e.name in emitted]
    events += [e for e in ast.interface_events if e.name in emitted and ast.event(e.name) is e]
    tag_sort = T.EnumSort("EventTag", ("NoEvent",) + tuple(e.name for e in events))
    slots: set[tuple[int, str]] = set()
    for e in events:
        for pos, p in enumerate(e.params):
            slots.add((pos, arg_kind(p.ty)))
    return EventSet(events, tag_sort, sorted(slots))


# ---------------------------------------------------------------------------
# Inlining


def inline_internal_calls(fn: FunDecl, ast: ContractAst) -> FunDecl:
    """Return a copy of fn whose body contains no internal function calls."""
    inliner = _Inliner(ast)
    out = inliner.inline(fn)
    TypeChecker(ast).check_function(out)
    return out


class _Inliner:
    def __init__(self, ast: ContractAst):
        self.ast = ast
        self.cache: dict[str, FunDecl] = {}
        self.counter = 0
        self.in_progress: set[str] = set()

    def fresh(self, base: str) -> str:
        self.counter += 1
        return f"__{base}_{self.counter}"

    def inline(self, fn: FunDecl) -> FunDecl:
        if fn.name in self.in_progress:
            raise CycleError(f"recursive call chain through {fn.name!r}")
        self.in_progress.add(fn.name)
        try:
            out = copy.deepcopy(fn)
            if out.body is not None:
                out.body = self.rewrite_stmts(out.body)
            return out
        finally:
            self.in_progress.discard(fn.name)

    def inlined_callee(self, name: str) -> FunDecl:
        if name not in self.cache:
            callee = self.ast.function(name)
            assert callee is not None
            self.cache[name] = self.inline(callee)
        return self.cache[name]

    def is_internal_call(self, expr: Expr) -> bool:
        return (
            isinstance(expr, Call)
            and isinstance(expr.callee, Ident)
            and expr.callee.name not in BUILTIN_CALLS
            and self.ast.function(expr.callee.name) is not None
        )

    def rewrite_stmts(self, stmts: list[Stmt]) -> list[Stmt]:
        out: list[Stmt] = []
        for stmt in stmts:
            out.extend(self.rewrite_stmt(stmt))
        return out

    def rewrite_stmt(self, stmt: Stmt) -> list[Stmt]:
        if isinstance(stmt, ExprStmt) and self.is_internal_call(stmt.expr):
            pre, _ = self.splice_call(stmt.expr, want_value=False)
            return pre
        if isinstance(stmt, VarDeclStmt) and stmt.init is not None:
            pre, new = self.hoist(stmt.init)
            stmt.init = new
            return pre + [stmt]
        if isinstance(stmt, AssignStmt):
            pre_t, new_t = self.hoist(stmt.target)
            pre_v, new_v = self.hoist(stmt.value)
            stmt.target = new_t
            stmt.value = new_v
            return pre_t + pre_v + [stmt]
        if isinstance(stmt, ExprStmt):
            pre, new = self.hoist(stmt.expr)
            stmt.expr = new
            return pre + [stmt]
        if isinstance(stmt, IfStmt):
            pre, new_cond = self.hoist(stmt.cond)
            stmt.cond = new_cond
            stmt.then_body = self.rewrite_stmts(stmt.then_body)
            if stmt.else_body is not None:
                stmt.else_body = self.rewrite_stmts(stmt.else_body)
            return pre + [stmt]
        if isinstance(stmt, ReturnStmt) and stmt.value is not None:
            pre, new = self.hoist(stmt.value)
            stmt.value = new
            return pre + [stmt]
        if isinstance(stmt, EmitStmt):
            pre_all: list[Stmt] = []
            new_args = []
            for a in stmt.args:
                pre, new = self.hoist(a)
                pre_all.extend(pre)
                new_args.append(new)
            stmt.args = new_args
            return pre_all + [stmt]
        return [stmt]

    def hoist(self, expr: Expr) -> tuple[list[Stmt], Expr]:
        """Pull internal calls out of an expression in evaluation order."""
        if self.is_internal_call(expr):
            pre, temp = self.splice_call(expr, want_value=True)
            assert temp is not None
            return pre, temp
        if isinstance(expr, Binary):
            if expr.op in ("&&", "||") and self.contains_internal_call(expr.rhs):
                raise UnsupportedConstruct(
                    "internal call in a short-circuit right operand is not supported"
                )
            pre_l, expr.lhs = self.hoist(expr.lhs)
            pre_r, expr.rhs = self.hoist(expr.rhs)
            return pre_l + pre_r, expr
        if isinstance(expr, Unary):
            pre, expr.operand = self.hoist(expr.operand)
            return pre, expr
        if isinstance(expr, Conditional):
            if self.contains_internal_call(expr.then) or self.contains_internal_call(expr.els):
                raise UnsupportedConstruct("internal call in a conditional arm is not supported")
            pre, expr.cond = self.hoist(expr.cond)
            return pre, expr
        if isinstance(expr, Index):
            pre_b, expr.base = self.hoist(expr.base)
            pre_i, expr.index = self.hoist(expr.index)
            return pre_b + pre_i, expr
        if isinstance(expr, Call):
            pre_all: list[Stmt] = []
            new_args = []
            for a in expr.args:
                pre, new = self.hoist(a)
                pre_all.extend(pre)
                new_args.append(new)
            expr.args = new_args
            return pre_all, expr
        if isinstance(expr, Member):
            pre, expr.obj = self.hoist(expr.obj)
            return pre, expr
        return [], expr

    def contains_internal_call(self, expr: Expr) -> bool:
        if self.is_internal_call(expr):
            return True
        children: list[Expr] = []
        if isinstance(expr, Binary):
            children = [expr.lhs, expr.rhs]
        elif isinstance(expr, Unary):
            children = [expr.operand]
        elif isinstance(expr, Conditional):
            children = [expr.cond, expr.then, expr.els]
        elif isinstance(expr, Index):
            children = [expr.base, expr.index]
        elif isinstance(expr, Call):
            children = list(expr.args)
        elif isinstance(expr, Member):
            children = [expr.obj]
        return any(self.contains_internal_call(c) for c in children)

    def splice_call(self, call: Call, want_value: bool) -> tuple[list[Stmt], Optional[Expr]]:
        assert isinstance(call.callee, Ident)
        callee = self.inlined_callee(call.callee.name)
        pre: list[Stmt] = []
        # arguments in evaluation order, hoisting nested calls first
        arg_exprs: list[Expr] = []
        for a in call.args:
            ap, an = self.hoist(a)
            pre.extend(ap)
            arg_exprs.append(an)

        body = copy.deepcopy(callee.body or [])
        rename: dict[str, str] = {}
        for p in callee.params:
            rename[p.name] = self.fresh(f"{callee.name}_{p.name}")
        for name in _declared_locals(body):
            rename[name] = self.fresh(f"{callee.name}_{name}")
        _rename_idents(body, rename)

        for p, a in zip(callee.params, arg_exprs):
            if isinstance(a, (IntLit, BoolLit)):
                _substitute_ident(body, rename[p.name], a)
            else:
                decl = VarDeclStmt(rename[p.name], p.ty, a)
                decl.span = call.span
                pre.append(decl)

        ret_name = None
        if callee.return_ty is not None:
            ret_name = self.fresh(f"{callee.name}_ret")
            decl = VarDeclStmt(ret_name, callee.return_ty, None)
            decl.span = call.span
            pre.append(decl)

        new_body, needs_flag = self.lower_returns(body, ret_name)
        if needs_flag:
            flag = self.fresh(f"{callee.name}_done")
            decl = VarDeclStmt(flag, BOOLT, BoolLit(False))
            decl.span = call.span
            pre.append(decl)
            new_body, _ = self.lower_returns_with_flag(body, ret_name, flag)
        pre.extend(new_body)

        if want_value:
            if ret_name is None:
                raise UnsupportedConstruct(
                    f"function {callee.name!r} returns nothing but is used as a value"
                )
            return pre, Ident(ret_name)
        return pre, None

    def lower_returns(self, stmts: list[Stmt], ret_name: Optional[str]) -> tuple[list[Stmt], bool]:
        """Tail-position returns become assignments; detect non-tail returns."""
        out: list[Stmt] = []
        for i, stmt in enumerate(stmts):
            is_last = i == len(stmts) - 1
            if isinstance(stmt, ReturnStmt):
                if stmt.value is not None and ret_name is not None:
                    assign = AssignStmt(Ident(ret_name), "=", stmt.value)
                    assign.span = stmt.span
                    out.append(assign)
                if not is_last:
                    return out, True
                return out, False
            if isinstance(stmt, IfStmt) and _contains_return(stmt):
                if not is_last:
                    return out, True
                then_body, tf = self.lower_returns(stmt.then_body, ret_name)
                else_body, ef = (
                    self.lower_returns(stmt.else_body, ret_name)
                    if stmt.else_body is not None
                    else ([], False)
                )
                if tf or ef:
                    return out, True
                new_if = IfStmt(stmt.cond, then_body, else_body or stmt.else_body)
                new_if.span = stmt.span
                out.append(new_if)
                continue
            out.append(stmt)
        return out, False

    def lower_returns_with_flag(
        self, stmts: list[Stmt], ret_name: Optional[str], flag: str
    ) -> tuple[list[Stmt], bool]:
        out: list[Stmt] = []
        pending = list(stmts)
        while pending:
            stmt = pending.pop(0)
            if isinstance(stmt, ReturnStmt):
                if stmt.value is not None and ret_name is not None:
                    a = AssignStmt(Ident(ret_name), "=", stmt.value)
                    a.span = stmt.span
                    out.append(a)
                done = AssignStmt(Ident(flag), "=", BoolLit(True))
                done.span = stmt.span
                out.append(done)
                break  # the rest of this block is dead
            if isinstance(stmt, IfStmt) and _contains_return(stmt):
                then_body, _ = self.lower_returns_with_flag(stmt.then_body, ret_name, flag)
                else_body = stmt.else_body
                if else_body is not None and any(_contains_return_s(s) for s in else_body):
                    else_body, _ = self.lower_returns_with_flag(else_body, ret_name, flag)
                new_if = IfStmt(stmt.cond, then_body, else_body)
                new_if.span = stmt.span
                out.append(new_if)
                if pending:
                    guard_cond = Unary("!", Ident(flag))
                    rest, _ = self.lower_returns_with_flag(pending, ret_name, flag)
                    guarded = IfStmt(guard_cond, rest, None)
                    guarded.span = stmt.span
                    out.append(guarded)
                return out, True
            out.append(stmt)
        return out, True


def _contains_return(stmt: IfStmt) -> bool:
    return any(_contains_return_s(s) for s in stmt.then_body) or (
        stmt.else_body is not None and any(_contains_return_s(s) for s in stmt.else_body)
    )


def _contains_return_s(stmt: Stmt) -> bool:
    if isinstance(stmt, ReturnStmt):
        return True
    if isinstance(stmt, IfStmt):
        return _contains_return(stmt)
    return False


def _declared_locals(stmts: list[Stmt]) -> list[str]:
    return [name for name, _ in _declared_locals_typed(stmts)]


def _declared_locals_typed(stmts: list[Stmt]) -> list[tuple[str, SolType]]:
    out: list[tuple[str, SolType]] = []
    for s in stmts:
        if isinstance(s, VarDeclStmt):
            out.append((s.name, s.declared_ty if s.declared_ty is not None else UintType()))
        elif isinstance(s, IfStmt):
            out.extend(_declared_locals_typed(s.then_body))
            if s.else_body is not None:
                out.extend(_declared_locals_typed(s.else_body))
    return out


def _rename_idents(node, rename: dict[str, str]) -> None:
    if isinstance(node, list):
        for item in node:
            _rename_idents(item, rename)
        return
    if isinstance(node, Ident):
        if node.name in rename:
            node.name = rename[node.name]
        return
    if isinstance(node, VarDeclStmt):
        if node.name in rename:
            node.name = rename[node.name]
        if node.init is not None:
            _rename_idents(node.init, rename)
        return
    if isinstance(node, (Expr, Stmt)):
        for name in node.__dataclass_fields__:
            if name in ("span", "ty"):
                continue
            _rename_idents(getattr(node, name), rename)


def _substitute_ident(node, name: str, value: Expr) -> None:
    """Replace Ident(name) reads with a literal (used for literal arguments)."""
    if isinstance(node, list):
        for i, item in enumerate(node):
            if isinstance(item, Ident) and item.name == name:
                node[i] = copy.deepcopy(value)
            else:
                _substitute_ident(item, name, value)
        return
    if isinstance(node, (Expr, Stmt)):
        for fname in node.__dataclass_fields__:
            if fname in ("span", "ty"):
                continue
            child = getattr(node, fname)
            if isinstance(child, Ident) and child.name == name:
                setattr(node, fname, copy.deepcopy(value))
            else:
                _substitute_ident(child, name, value)


def count_call_nodes(fn: FunDecl, ast: ContractAst) -> int:
    """Internal-call nodes remaining in a body (0 after inlining)."""
    count = 0

    def walk_expr(e: Expr) -> None:
        nonlocal count
        if isinstance(e, Call):
            if isinstance(e.callee, Ident) and e.callee.name not in BUILTIN_CALLS \
                    and ast.function(e.callee.name) is not None:
                count += 1
            for a in e.args:
                walk_expr(a)
            walk_expr(e.callee)
        elif isinstance(e, Binary):
            walk_expr(e.lhs)
            walk_expr(e.rhs)
        elif isinstance(e, Unary):
            walk_expr(e.operand)
        elif isinstance(e, Conditional):
            walk_expr(e.cond)
            walk_expr(e.then)
            walk_expr(e.els)
        elif isinstance(e, Index):
            walk_expr(e.base)
            walk_expr(e.index)
        elif isinstance(e, Member):
            walk_expr(e.obj)

    def walk(stmts: list[Stmt]) -> None:
        for s in stmts:
            if isinstance(s, VarDeclStmt) and s.init is not None:
                walk_expr(s.init)
            elif isinstance(s, AssignStmt):
                walk_expr(s.target)
                walk_expr(s.value)
            elif isinstance(s, ExprStmt):
                walk_expr(s.expr)
            elif isinstance(s, IfStmt):
                walk_expr(s.cond)
                walk(s.then_body)
                if s.else_body is not None:
                    walk(s.else_body)
            elif isinstance(s, ReturnStmt) and s.value is not None:
                walk_expr(s.value)
            elif isinstance(s, EmitStmt):
                for a in s.args:
                    walk_expr(a)

    if fn.body is not None:
        walk(fn.body)
    return count


# ---------------------------------------------------------------------------
# Symbolic state and the walker


@dataclass
class SymEnv:
    slots: dict[str, T.Term]
    balances: dict[str, T.Term]
    alive: T.Term
    ev_tag: T.Term
    ev_args: dict[tuple[int, str], T.Term]
    halted: T.Term
    locals: dict[str, T.Term] = field(default_factory=dict)
    local_types: dict[str, SolType] = field(default_factory=dict)

    def copy(self) -> "SymEnv":
        return SymEnv(
            dict(self.slots), dict(self.balances), self.alive, self.ev_tag,
            dict(self.ev_args), self.halted, dict(self.locals), dict(self.local_types),
        )


@dataclass
class TransitionFn:
    fname: str
    payable: bool
    params: list[Param]
    pre: T.Term
    slot_updates: dict[str, T.Term]
    bal_updates: dict[str, T.Term]
    alive_update: T.Term
    ev_tag: T.Term
    ev_args: dict[tuple[int, str], T.Term]


@dataclass
class InitialStateSpec:
    ctor_params: list[Param]
    var_init: dict[str, T.Term]  # slot id -> term over ctor:<param> vars


class _SymExec:
    def __init__(self, ast: ContractAst, cfg: ModelConfig, addrs: AddrDomain,
                 slots: list[Slot], events: EventSet, ctor_mode: bool = False):
        self.ast = ast
        self.cfg = cfg
        self.addrs = addrs
        self.slots = slots
        self.events = events
        self.w = cfg.int_width
        self.addr_sort = T.EnumSort("Addr", addrs.elements)
        self.obligations: list[T.Term] = []
        self.slot_by_id = {s.slot_id: s for s in slots}
        self.ctor_mode = ctor_mode

    # -- sorts / constants ---------------------------------------------------

    def sort_of(self, ty: SolType) -> T.Sort:
        if isinstance(ty, UintType) or isinstance(ty, EnumType):
            return T.bv_sort(self.w)
        if isinstance(ty, BoolType):
            return T.BOOL
        if isinstance(ty, AddressType):
            return self.addr_sort
        raise UnsupportedConstruct(f"no solver sort for type {ty}")

    def zero_term(self, ty: SolType) -> T.Term:
        if isinstance(ty, (UintType, EnumType)):
            return T.bv_const(0, self.w)
        if isinstance(ty, BoolType):
            return T.FALSE
        if isinstance(ty, AddressType):
            return T.enum_const(self.addr_sort, self.addrs.no_addr)
        raise UnsupportedConstruct(f"no zero for type {ty}")

    def addr_const(self, index: int) -> T.Term:
        return T.enum_const(self.addr_sort, index)

    # -- obligations -----------------------------------------------------------

    def obligation(self, guard: T.Term, cond: T.Term) -> None:
        ob = T.implies(guard, cond)
        if ob is not T.TRUE:
            self.obligations.append(ob)

    # -- expression evaluation ---------------------------------------------------

    def eval(self, expr: Expr, env: SymEnv, guard: T.Term) -> T.Term:
        if isinstance(expr, IntLit):
            return T.bv_const(expr.value, self.w)
        if isinstance(expr, BoolLit):
            return T.bool_const(expr.value)
        if isinstance(expr, StrLit):
            raise UnsupportedConstruct("string values have no model representation")
        if isinstance(expr, Ident):
            return self.eval_ident(expr, env)
        if isinstance(expr, Member):
            return self.eval_member(expr, env, guard)
        if isinstance(expr, Index):
            pairs = self.resolve_slots(expr, env, guard)
            if not pairs:
                # statically out of bounds; unreachable under pre
                return self.zero_term(expr.ty)
            value_pairs = [(cond, env.slots[slot_id]) for slot_id, cond in pairs]
            return T.indexed_select(value_pairs, env.slots[pairs[-1][0]])
        if isinstance(expr, Binary):
            return self.eval_binary(expr, env, guard)
        if isinstance(expr, Unary):
            v = self.eval(expr.operand, env, guard)
            if expr.op == "!":
                return T.not_(v)
            if expr.op == "-":
                return T.sub(T.bv_const(0, self.w), v)
            raise UnsupportedConstruct(f"operator {expr.op} is outside Sol")
        if isinstance(expr, Conditional):
            c = self.eval(expr.cond, env, guard)
            a = self.eval(expr.then, env, T.and_(guard, c))
            b = self.eval(expr.els, env, T.and_(guard, T.not_(c)))
            return T.ite(c, a, b)
        if isinstance(expr, Call):
            return self.eval_call(expr, env, guard)
        raise UnsupportedConstruct(f"cannot evaluate {type(expr).__name__}")

    def eval_ident(self, expr: Ident, env: SymEnv) -> T.Term:
        name = expr.name
        if name in env.locals:
            return env.locals[name]
        var = self.ast.state_var(name)
        if var is not None:
            if name in env.slots:
                return env.slots[name]
            raise UnsupportedConstruct(
                f"state variable {name!r} is not scalar and cannot be read whole"
            )
        if name == "now":
            if self.ctor_mode:
                return T.var("btime", T.bv_sort(self.w))
            return T.var("tx:time", T.bv_sort(self.w))
        raise UnsupportedConstruct(f"unknown identifier {name!r}")

    def eval_member(self, expr: Member, env: SymEnv, guard: T.Term) -> T.Term:
        obj = expr.obj
        if isinstance(obj, Ident):
            if obj.name == "msg" and expr.name == "sender":
                if self.ctor_mode:
                    return T.var("ctor:msg.sender", self.addr_sort)
                return T.var("tx:sender", self.addr_sort)
            if obj.name == "msg" and expr.name == "value":
                if self.ctor_mode:
                    return T.bv_const(0, self.w)
                return T.var("tx:value", T.bv_sort(self.w))
            if obj.name == "block" and expr.name == "timestamp":
                if self.ctor_mode:
                    return T.var("btime", T.bv_sort(self.w))
                return T.var("tx:time", T.bv_sort(self.w))
            if obj.name == "this" and expr.name == "balance":
                return env.balances[self.addrs.name(self.addrs.contract_addr)]
            enum_decl = self.ast.enum(obj.name)
            if enum_decl is not None:
                return T.bv_const(enum_decl.members.index(expr.name), self.w)
        if isinstance(obj, Call) and isinstance(obj.callee, Ident) and obj.callee.name == "address":
            if expr.name == "balance":
                target = self.eval_address_cast(obj, env, guard)
                return T.addr_select(
                    target,
                    [(self.addr_const(i), env.balances[a]) for i, a in enumerate(self.addrs.elements[:-1])],
                    env.balances[self.addrs.elements[-1]],
                )
        obj_ty = getattr(obj, "ty", None)
        if isinstance(obj_ty, AddressType) and expr.name == "balance":
            target = self.eval(obj, env, guard)
            return T.addr_select(
                target,
                [(self.addr_const(i), env.balances[a]) for i, a in enumerate(self.addrs.elements[:-1])],
                env.balances[self.addrs.elements[-1]],
            )
        raise UnsupportedConstruct(f"member access .{expr.name} has no model meaning")

    def eval_address_cast(self, expr: Call, env: SymEnv, guard: T.Term) -> T.Term:
        arg = expr.args[0]
        if isinstance(arg, Ident) and arg.name == "this":
            return self.addr_const(self.addrs.contract_addr)
        if isinstance(arg, IntLit):
            if arg.value == 0:
                return self.addr_const(self.addrs.no_addr)
            raise UnsupportedConstruct("only address(0) is representable in the finite domain")
        return self.eval(arg, env, guard)

    def eval_binary(self, expr: Binary, env: SymEnv, guard: T.Term) -> T.Term:
        op = expr.op
        if op == "&&":
            lhs = self.eval(expr.lhs, env, guard)
            rhs = self.eval(expr.rhs, env, T.and_(guard, lhs))
            return T.and_(lhs, rhs)
        if op == "||":
            lhs = self.eval(expr.lhs, env, guard)
            rhs = self.eval(expr.rhs, env, T.and_(guard, T.not_(lhs)))
            return T.or_(lhs, rhs)
        lhs = self.eval(expr.lhs, env, guard)
        rhs = self.eval(expr.rhs, env, guard)
        if op == "+":
            return T.add(lhs, rhs)
        if op == "-":
            return T.sub(lhs, rhs)
        if op == "*":
            return T.mul(lhs, rhs)
        if op == "/":
            self.obligation(guard, T.distinct(rhs, T.bv_const(0, self.w)))
            return T.udiv(lhs, rhs)
        if op == "%":
            self.obligation(guard, T.distinct(rhs, T.bv_const(0, self.w)))
            return T.urem(lhs, rhs)
        if op == "==":
            return T.eq(lhs, rhs)
        if op == "!=":
            return T.distinct(lhs, rhs)
        if op == "<":
            return T.ult(lhs, rhs)
        if op == "<=":
            return T.ule(lhs, rhs)
        if op == ">":
            return T.ugt(lhs, rhs)
        if op == ">=":
            return T.uge(lhs, rhs)
        raise UnsupportedConstruct(f"operator {op} is outside Sol")

    def eval_call(self, expr: Call, env: SymEnv, guard: T.Term) -> T.Term:
        callee = expr.callee
        if isinstance(callee, Ident):
            name = callee.name
            if name == "address":
                return self.eval_address_cast(expr, env, guard)
            if name == "uint":
                return self.eval(expr.args[0], env, guard)
            if name in ("mulmod", "addmod"):
                a = self.eval(expr.args[0], env, guard)
                b = self.eval(expr.args[1], env, guard)
                m = self.eval(expr.args[2], env, guard)
                self.obligation(guard, T.distinct(m, T.bv_const(0, self.w)))
                w2 = 2 * self.w
                wide = T.mul(T.zext(a, w2), T.zext(b, w2)) if name == "mulmod" \
                    else T.add(T.zext(a, w2), T.zext(b, w2))
                return T.extract(T.urem(wide, T.zext(m, w2)), self.w - 1, 0)
        raise UnsupportedConstruct(f"call {getattr(callee, 'name', '?')!r} cannot appear here")

    # -- lvalues ---------------------------------------------------------------------

    def resolve_slots(self, expr: Expr, env: SymEnv, guard: T.Term) -> list[tuple[str, T.Term]]:
        """Resolve an indexed state access to (slot-id, selection-condition) pairs.

        Conditions are mutually exclusive; selections that fold to false are
        dropped (out-of-bounds constants), with the bounds obligation already
        recorded.
        """
        if isinstance(expr, Ident):
            if self.ast.state_var(expr.name) is None:
                raise UnsupportedConstruct(f"{expr.name!r} is not a state variable")
            return [(expr.name, T.TRUE)]
        if isinstance(expr, Index):
            base_ty = expr.base.ty
            prefix_pairs = self.resolve_slots(expr.base, env, guard)
            out: list[tuple[str, T.Term]] = []
            if isinstance(base_ty, MappingType):
                key = self.eval(expr.index, env, guard)
                for prefix, cond in prefix_pairs:
                    for i, a in enumerate(self.addrs.elements):
                        out.append((f"{prefix}[{a}]", T.and_(cond, T.eq(key, self.addr_const(i)))))
            elif isinstance(base_ty, ArrayType):
                idx = self.eval(expr.index, env, guard)
                self.obligation(guard, T.ult(idx, T.bv_const(base_ty.length, self.w)))
                for prefix, cond in prefix_pairs:
                    for i in range(base_ty.length):
                        out.append((f"{prefix}[{i}]", T.and_(cond, T.eq(idx, T.bv_const(i, self.w)))))
            else:
                raise UnsupportedConstruct("indexed expression is not a mapping or array")
            return [(s, c) for s, c in out if c is not T.FALSE]
        raise UnsupportedConstruct("expression is not an assignable storage location")

    # -- statements --------------------------------------------------------------------

    def exec_stmts(self, stmts: list[Stmt], env: SymEnv, guard: T.Term) -> None:
        for stmt in stmts:
            g = T.and_(guard, T.not_(env.halted))
            self.exec_stmt(stmt, env, g)

    def exec_stmt(self, stmt: Stmt, env: SymEnv, g: T.Term) -> None:
        if g is T.FALSE:
            return
        if isinstance(stmt, VarDeclStmt):
            assert stmt.declared_ty is not None
            value = self.eval(stmt.init, env, g) if stmt.init is not None \
                else self.zero_term(stmt.declared_ty)
            if stmt.name in env.locals:
                env.locals[stmt.name] = T.ite(g, value, env.locals[stmt.name])
            else:
                env.locals[stmt.name] = value
            env.local_types[stmt.name] = stmt.declared_ty
            return
        if isinstance(stmt, AssignStmt):
            self.exec_assign(stmt, env, g)
            return
        if isinstance(stmt, ExprStmt):
            self.exec_call_stmt(stmt.expr, env, g)
            return
        if isinstance(stmt, IfStmt):
            cond = self.eval(stmt.cond, env, g)
            if cond is T.TRUE:
                self.exec_stmts(stmt.then_body, env, g)
                return
            if cond is T.FALSE:
                if stmt.else_body is not None:
                    self.exec_stmts(stmt.else_body, env, g)
                return
            then_env = env.copy()
            self.exec_stmts(stmt.then_body, then_env, T.and_(g, cond))
            else_env = env.copy()
            if stmt.else_body is not None:
                self.exec_stmts(stmt.else_body, else_env, T.and_(g, T.not_(cond)))
            self.merge(env, cond, then_env, else_env)
            return
        if isinstance(stmt, ReturnStmt):
            env.halted = T.or_(env.halted, g)
            return
        if isinstance(stmt, ThrowStmt):
            self.obligation(g, T.FALSE)
            env.halted = T.or_(env.halted, g)
            return
        if isinstance(stmt, EmitStmt):
            self.exec_emit(stmt, env, g)
            return
        raise UnsupportedConstruct(f"statement {type(stmt).__name__} is outside Sol")

    def merge(self, env: SymEnv, cond: T.Term, then_env: SymEnv, else_env: SymEnv) -> None:
        for key in env.slots:
            a, b = then_env.slots[key], else_env.slots[key]
            env.slots[key] = a if a is b else T.ite(cond, a, b)
        for key in env.balances:
            a, b = then_env.balances[key], else_env.balances[key]
            env.balances[key] = a if a is b else T.ite(cond, a, b)
        env.alive = then_env.alive if then_env.alive is else_env.alive \
            else T.ite(cond, then_env.alive, else_env.alive)
        env.ev_tag = then_env.ev_tag if then_env.ev_tag is else_env.ev_tag \
            else T.ite(cond, then_env.ev_tag, else_env.ev_tag)
        for key in env.ev_args:
            a, b = then_env.ev_args[key], else_env.ev_args[key]
            env.ev_args[key] = a if a is b else T.ite(cond, a, b)
        env.halted = then_env.halted if then_env.halted is else_env.halted \
            else T.ite(cond, then_env.halted, else_env.halted)
        # locals declared in both branches merge; branch-only locals are dead
        for key in set(then_env.locals) & set(else_env.locals):
            a, b = then_env.locals[key], else_env.locals[key]
            env.locals[key] = a if a is b else T.ite(cond, a, b)
            env.local_types[key] = then_env.local_types[key]

    def exec_assign(self, stmt: AssignStmt, env: SymEnv, g: T.Term) -> None:
        value = self.eval(stmt.value, env, g)
        target = stmt.target
        compound = {"+=": T.add, "-=": T.sub, "*=": T.mul}.get(stmt.op)

        def combined(old: T.Term) -> T.Term:
            if stmt.op == "=":
                return value
            if compound is not None:
                return compound(old, value)
            self.obligation(g, T.distinct(value, T.bv_const(0, self.w)))
            return T.udiv(old, value) if stmt.op == "/=" else T.urem(old, value)

        if isinstance(target, Ident) and target.name in env.locals:
            old = env.locals[target.name]
            env.locals[target.name] = T.ite(g, combined(old), old)
            return
        if isinstance(target, Ident):
            slot_id = target.name
            if slot_id not in env.slots:
                raise UnsupportedConstruct(f"cannot assign whole aggregate {slot_id!r}")
            old = env.slots[slot_id]
            env.slots[slot_id] = T.ite(g, combined(old), old)
            return
        pairs = self.resolve_slots(target, env, g)
        for slot_id, cond in pairs:
            old = env.slots[slot_id]
            env.slots[slot_id] = T.ite(T.and_(g, cond), combined(old), old)

    def exec_call_stmt(self, expr: Expr, env: SymEnv, g: T.Term) -> None:
        if not isinstance(expr, Call):
            raise UnsupportedConstruct("expression statement has no effect")
        callee = expr.callee
        if isinstance(callee, Ident):
            name = callee.name
            if name == "require" or name == "assert":
                cond = self.eval(expr.args[0], env, g)
                self.obligation(g, cond)
                return
            if name == "revert":
                self.obligation(g, T.FALSE)
                env.halted = T.or_(env.halted, g)
                return
            if name == "selfdestruct":
                beneficiary = self.eval(expr.args[0], env, g)
                self.do_selfdestruct(beneficiary, env, g)
                return
            raise UnsupportedConstruct(f"call to {name!r} cannot appear as a statement")
        if isinstance(callee, Member) and callee.name == "transfer":
            target = (
                self.eval_address_cast(callee.obj, env, g)
                if isinstance(callee.obj, Call) and isinstance(callee.obj.callee, Ident)
                and callee.obj.callee.name == "address"
                else self.eval(callee.obj, env, g)
            )
            amount = self.eval(expr.args[0], env, g)
            self.do_transfer(target, amount, env, g)
            return
        raise UnsupportedConstruct("unsupported call statement")

    def do_transfer(self, target: T.Term, amount: T.Term, env: SymEnv, g: T.Term) -> None:
        contract = self.addrs.name(self.addrs.contract_addr)
        self.obligation(g, T.ule(amount, env.balances[contract]))
        env.balances[contract] = T.ite(g, T.sub(env.balances[contract], amount), env.balances[contract])
        for i, a in enumerate(self.addrs.elements):
            cond = T.and_(g, T.eq(target, self.addr_const(i)))
            env.balances[a] = T.ite(cond, T.add(env.balances[a], amount), env.balances[a])

    def do_selfdestruct(self, beneficiary: T.Term, env: SymEnv, g: T.Term) -> None:
        contract = self.addrs.name(self.addrs.contract_addr)
        pot = env.balances[contract]
        for i, a in enumerate(self.addrs.elements):
            cond = T.and_(g, T.eq(beneficiary, self.addr_const(i)))
            env.balances[a] = T.ite(cond, T.add(env.balances[a], pot), env.balances[a])
        env.balances[contract] = T.ite(g, T.bv_const(0, self.w), env.balances[contract])
        env.alive = T.ite(g, T.FALSE, env.alive)
        env.halted = T.or_(env.halted, g)

    def exec_emit(self, stmt: EmitStmt, env: SymEnv, g: T.Term) -> None:
        decl = self.ast.event(stmt.event)
        assert decl is not None
        already = T.and_(g, T.distinct(env.ev_tag, self.events.no_event))
        if already is not T.FALSE:
            raise MultiEmitError(
                f"a path may emit {stmt.event!r} after another event "
                "(the model allows one event per transaction)"
            )
        values = [self.eval(a, env, g) for a in stmt.args]
        env.ev_tag = T.ite(g, self.events.tag_const(stmt.event), env.ev_tag)
        for pos, (p, v) in enumerate(zip(decl.params, values)):
            key = (pos, arg_kind(p.ty))
            env.ev_args[key] = T.ite(g, v, env.ev_args[key])


# ---------------------------------------------------------------------------
# Public operations


def fresh_env(exe: _SymExec) -> SymEnv:
    slots = {s.slot_id: T.var(f"state:{s.slot_id}", exe.sort_of(s.ty)) for s in exe.slots}
    balances = {a: T.var(f"bal:{a}", T.bv_sort(exe.w)) for a in exe.addrs.elements}
    ev_args = {key: _zero_for_kind(exe, key[1]) for key in exe.events.arg_slots}
    return SymEnv(
        slots=slots, balances=balances, alive=T.var("alive", T.BOOL),
        ev_tag=exe.events.no_event, ev_args=ev_args, halted=T.FALSE,
    )


def _zero_for_kind(exe: _SymExec, kind: str) -> T.Term:
    if kind == "bv":
        return T.bv_const(0, exe.w)
    if kind == "bool":
        return T.FALSE
    return T.enum_const(exe.addr_sort, 0)


def build_transition(fn: FunDecl, ast: ContractAst, cfg: ModelConfig, addrs: AddrDomain,
                     slots: Optional[list[Slot]] = None,
                     events: Optional[EventSet] = None) -> TransitionFn:
    """Symbolically execute a public function into precondition + updates.

    ``fn`` must already be inlined (or contain no internal calls).
    """
    if slots is None:
        slots = state_slots(ast, addrs)
    if events is None:
        events = collect_events(ast)
    exe = _SymExec(ast, cfg, addrs, slots, events)
    env = fresh_env(exe)
    w = cfg.int_width

    v = T.var("tx:value", T.bv_sort(w))
    s = T.var("tx:sender", exe.addr_sort)
    contract = addrs.name(addrs.contract_addr)

    head: list[T.Term] = [env.alive]
    head.append(T.distinct(s, exe.addr_const(addrs.contract_addr)))
    sender_balance = T.addr_select(
        s,
        [(exe.addr_const(i), env.balances[a]) for i, a in enumerate(addrs.elements[:-1])],
        env.balances[contract],
    )
    head.append(T.ule(v, sender_balance))

    # parameters read through tx:arg variables; locals are function-scoped
    # with zero defaults (0.4 hoisting), so pre-seed them all
    for p in fn.params:
        env.locals[p.name] = T.var(f"tx:arg:{p.name}", exe.sort_of(p.ty))
        env.local_types[p.name] = p.ty
    for name, ty in _declared_locals_typed(fn.body or []):
        env.locals.setdefault(name, exe.zero_term(ty))
        env.local_types.setdefault(name, ty)

    if fn.payable:
        # sender debit and contract credit happen before the body runs
        for i, a in enumerate(addrs.elements[:-1]):
            cond = T.eq(s, exe.addr_const(i))
            env.balances[a] = T.ite(cond, T.sub(env.balances[a], v), env.balances[a])
        env.balances[contract] = T.add(env.balances[contract], v)

    exe.exec_stmts(fn.body or [], env, T.TRUE)

    pre = T.and_(*head, *exe.obligations)
    if not fn.payable:
        # under pre, msg.value is zero: fold it through the whole transition
        subst = {"tx:value": T.bv_const(0, w)}
        pre = T.and_(T.substitute(pre, subst), T.eq(v, T.bv_const(0, w)))
        env.slots = {k: T.substitute(t, subst) for k, t in env.slots.items()}
        env.balances = {k: T.substitute(t, subst) for k, t in env.balances.items()}
        env.alive = T.substitute(env.alive, subst)
        env.ev_tag = T.substitute(env.ev_tag, subst)
        env.ev_args = {k: T.substitute(t, subst) for k, t in env.ev_args.items()}

    return TransitionFn(
        fname=fn.name,
        payable=fn.payable,
        params=list(fn.params),
        pre=pre,
        slot_updates=dict(env.slots),
        bal_updates=dict(env.balances),
        alive_update=env.alive,
        ev_tag=env.ev_tag,
        ev_args=dict(env.ev_args),
    )


def build_initial(ast: ContractAst, cfg: ModelConfig, addrs: AddrDomain,
                  slots: Optional[list[Slot]] = None) -> InitialStateSpec:
    """Evaluate the constructor into per-slot initial expressions.

    Balances and blocktime stay symbolic; the constructor is guaranteed
    throw-free by validate_constructor.
    """
    if slots is None:
        slots = state_slots(ast, addrs)
    events = collect_events(ast)
    exe = _SymExec(ast, cfg, addrs, slots, events, ctor_mode=True)

    env = fresh_env(exe)
    env.slots = {s.slot_id: exe.zero_term(s.ty) for s in slots}

    ctor = ast.ctor
    params: list[Param] = []
    if ctor is not None:
        ctor_inlined = inline_internal_calls(ctor, ast)
        params = list(ctor.params)
        for p in params:
            env.locals[p.name] = T.var(f"ctor:{p.name}", exe.sort_of(p.ty))
            env.local_types[p.name] = p.ty
        for name, ty in _declared_locals_typed(ctor_inlined.body or []):
            env.locals.setdefault(name, exe.zero_term(ty))
            env.local_types.setdefault(name, ty)
        exe.exec_stmts(ctor_inlined.body or [], env, T.TRUE)

    return InitialStateSpec(ctor_params=params, var_init=dict(env.slots))


# ---------------------------------------------------------------------------
# Assembled model


@dataclass
class ContractModel:
    ast: ContractAst
    cfg: ModelConfig
    addrs: AddrDomain
    slots: list[Slot]
    events: EventSet
    transitions: list[TransitionFn]
    initial: InitialStateSpec
    addr_sort: T.EnumSort

    def transition(self, fname: str) -> Optional[TransitionFn]:
        for t in self.transitions:
            if t.fname == fname:
                return t
        return None


def build_model(ast: ContractAst, cfg: ModelConfig, addrs: AddrDomain) -> ContractModel:
    slots = state_slots(ast, addrs)
    events = collect_events(ast)
    transitions = []
    for fn in ast.public_functions():
        inlined = inline_internal_calls(fn, ast)
        transitions.append(build_transition(inlined, ast, cfg, addrs, slots, events))
    initial = build_initial(ast, cfg, addrs, slots)
    return ContractModel(
        ast=ast, cfg=cfg, addrs=addrs, slots=slots, events=events,
        transitions=transitions, initial=initial,
        addr_sort=T.EnumSort("Addr", addrs.elements),
    )


def dump_model(model: ContractModel) -> str:
    """S-expression dump of the extracted transitions (stable across runs)."""
    lines = [f"(model {model.ast.name}"]
    lines.append(f"  (slots {' '.join(s.slot_id for s in model.slots)})")
    lines.append(f"  (events {' '.join(e.name for e in model.events.events)})")
    init = " ".join(
        f"({slot} {_sexpr(term)})" for slot, term in sorted(model.initial.var_init.items())
    )
    lines.append(f"  (initial {init})")
    for t in model.transitions:
        lines.append(f"  (function {t.fname}{' payable' if t.payable else ''}")
        lines.append(f"    (pre {_sexpr(t.pre)})")
        for slot in sorted(t.slot_updates):
            upd = t.slot_updates[slot]
            if upd.op == "var" and upd.payload == f"state:{slot}":
                continue
            lines.append(f"    (update {slot} {_sexpr(upd)})")
        for a in model.addrs.elements:
            upd = t.bal_updates[a]
            if upd.op == "var" and upd.payload == f"bal:{a}":
                continue
            lines.append(f"    (balance {a} {_sexpr(upd)})")
        lines.append(f"    (event {_sexpr(t.ev_tag)})")
        lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"


def _sexpr(t: T.Term) -> str:
    if t.op == "const":
        if t.sort is T.BOOL:
            return "true" if t.payload else "false"
        if isinstance(t.sort, T.EnumSort):
            return t.sort.members[t.payload]
        return str(t.payload)
    if t.op == "var":
        return f"|{t.payload}|"
    if t.op == "sum":
        const, coeffs = t.payload
        inner = " ".join(
            f"(* {c} {_sexpr(a)})" if c != 1 else _sexpr(a)
            for c, a in zip(coeffs, t.args)
        )
        head = f"{const} " if const else ""
        return f"(+ {head}{inner})"
    inner = " ".join(_sexpr(a) for a in t.args)
    return f"({t.op} {inner})"
