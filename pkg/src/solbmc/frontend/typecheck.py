"""Name resolution and type checking over the parsed AST.

Annotates every expression node's `ty` in place and returns diagnostics
instead of raising, so `parse` stays total.  Subset policing (rules 1-9) is
not done here; the typer accepts e.g. bitwise operators and string locals and
leaves flagging them to the subset validator.
"""

from __future__ import annotations

from typing import Optional

from .nodes import (
    ADDRESS, BOOLT, STRING, UINT,
    AddressType, ArrayType, AssignStmt, Binary, BoolLit, BoolType, Call,
    Conditional, ContractAst, Diagnostic, DynArrayType, EmitStmt, EnumType,
    EventDecl, Expr, ExprStmt, ForStmt, FunDecl, Ident, IfStmt, Index, IntLit,
    MappingType, Member, New, ReturnStmt, SolType, Stmt, StrLit, ThrowStmt,
    Unary, UintType, VarDeclStmt, WhileStmt, is_scalar,
)

BUILTIN_VOID_FNS = {"require", "assert", "revert", "selfdestruct"}
BUILTIN_UINT_FNS = {"mulmod", "addmod"}


class TypeChecker:
    def __init__(self, ast: ContractAst):
        self.ast = ast
        self.diags: list[Diagnostic] = []
        self.locals: dict[str, SolType] = {}

    def error(self, message: str, span) -> None:
        self.diags.append(Diagnostic("type", message, span))

    # -- entry ----------------------------------------------------------------

    def check(self) -> list[Diagnostic]:
        seen: set[str] = set()
        for var in self.ast.state_vars:
            if var.name in seen:
                self.error(f"duplicate state variable {var.name!r}", var.span)
            seen.add(var.name)
            if var.init is not None:
                ty = self.check_expr(var.init)
                if ty is not None and not self.assignable(var.ty, ty):
                    self.error(
                        f"cannot initialize {var.ty} variable with {ty}", var.init.span
                    )
                if not self.is_constant_expr(var.init):
                    self.error("state variable initializer must be constant", var.init.span)
        for ev in self.ast.events + self.ast.interface_events:
            for p in ev.params:
                if not is_scalar(p.ty) and not isinstance(p.ty, (DynArrayType,)):
                    self.error(f"event parameter {p.name!r} has non-scalar type", p.span)
        fn_names: set[str] = set()
        for fn in self.ast.functions:
            if fn.name in fn_names:
                self.error(f"duplicate function {fn.name!r}", fn.span)
            fn_names.add(fn.name)
        for fn in self.ast.functions:
            self.check_function(fn)
        if self.ast.ctor is not None:
            self.check_function(self.ast.ctor)
        return self.diags

    def check_function(self, fn: FunDecl) -> None:
        self.locals = {}
        for p in fn.params:
            if p.name in self.locals:
                self.error(f"duplicate parameter {p.name!r}", p.span)
            self.locals[p.name] = p.ty
        if fn.body is not None:
            self.check_stmts(fn.body, fn)

    # -- statements -------------------------------------------------------------

    def check_stmts(self, stmts: list[Stmt], fn: FunDecl) -> None:
        for stmt in stmts:
            self.check_stmt(stmt, fn)

    def check_stmt(self, stmt: Stmt, fn: FunDecl) -> None:
        if isinstance(stmt, VarDeclStmt):
            init_ty = self.check_expr(stmt.init) if stmt.init is not None else None
            ty = stmt.declared_ty
            if isinstance(ty, MappingType):
                self.error("local variables cannot have mapping type", stmt.span)
            if ty is None:
                # `var` declaration; infer so downstream stays typed (rule 4
                # rejection happens in the subset validator).
                ty = init_ty if init_ty is not None else UINT
            elif init_ty is not None and not self.assignable(ty, init_ty):
                self.error(f"cannot assign {init_ty} to {ty} variable", stmt.init.span)
            if stmt.name in self.locals:
                self.error(f"redeclaration of {stmt.name!r}", stmt.span)
            self.locals[stmt.name] = ty
        elif isinstance(stmt, AssignStmt):
            target_ty = self.check_expr(stmt.target)
            value_ty = self.check_expr(stmt.value)
            if not self.is_lvalue(stmt.target):
                self.error("assignment target is not assignable", stmt.target.span)
            if target_ty is not None and value_ty is not None:
                if stmt.op != "=" and not (
                    isinstance(target_ty, UintType) and isinstance(value_ty, UintType)
                ):
                    self.error(f"operator {stmt.op} requires uint operands", stmt.span)
                elif not self.assignable(target_ty, value_ty):
                    self.error(f"cannot assign {value_ty} to {target_ty}", stmt.span)
        elif isinstance(stmt, ExprStmt):
            self.check_expr(stmt.expr)
            if not isinstance(stmt.expr, Call):
                self.error("expression statement has no effect", stmt.span)
        elif isinstance(stmt, IfStmt):
            cond_ty = self.check_expr(stmt.cond)
            if cond_ty is not None and not isinstance(cond_ty, BoolType):
                self.error("if condition must be bool", stmt.cond.span)
            self.check_stmts(stmt.then_body, fn)
            if stmt.else_body is not None:
                self.check_stmts(stmt.else_body, fn)
        elif isinstance(stmt, ReturnStmt):
            if stmt.value is not None:
                ty = self.check_expr(stmt.value)
                if fn.return_ty is None:
                    self.error("function has no return type", stmt.span)
                elif ty is not None and not self.assignable(fn.return_ty, ty):
                    self.error(f"cannot return {ty} from {fn.return_ty} function", stmt.span)
            elif fn.return_ty is not None:
                self.error("missing return value", stmt.span)
        elif isinstance(stmt, EmitStmt):
            decl = self.ast.event(stmt.event)
            if decl is None:
                self.error(f"unknown event {stmt.event!r}", stmt.span)
            else:
                self.check_call_args(decl.params, stmt.args, f"event {stmt.event}", stmt)
        elif isinstance(stmt, WhileStmt):
            self.check_expr(stmt.cond)
            self.check_stmts(stmt.body, fn)
        elif isinstance(stmt, ForStmt):
            if stmt.init is not None:
                self.check_stmt(stmt.init, fn)
            if stmt.cond is not None:
                self.check_expr(stmt.cond)
            if stmt.post is not None:
                self.check_stmt(stmt.post, fn)
            self.check_stmts(stmt.body, fn)
        elif isinstance(stmt, ThrowStmt):
            pass
        else:
            raise AssertionError(f"unhandled statement {stmt!r}")

    def check_call_args(self, params, args, what: str, node) -> None:
        if len(params) != len(args):
            self.error(f"{what} expects {len(params)} argument(s), got {len(args)}", node.span)
        for p, a in zip(params, args):
            ty = self.check_expr(a)
            if ty is not None and not self.assignable(p.ty, ty):
                self.error(f"argument {p.name!r} of {what} expects {p.ty}, got {ty}", a.span)

    # -- expressions ----------------------------------------------------------------

    def check_expr(self, expr: Expr) -> Optional[SolType]:
        ty = self._infer(expr)
        expr.ty = ty
        return ty

    def _infer(self, expr: Expr) -> Optional[SolType]:
        if isinstance(expr, IntLit):
            return UINT
        if isinstance(expr, BoolLit):
            return BOOLT
        if isinstance(expr, StrLit):
            return STRING
        if isinstance(expr, Ident):
            name = expr.name
            if name in self.locals:
                return self.locals[name]
            var = self.ast.state_var(name)
            if var is not None:
                return var.ty
            if name == "now":
                return UINT
            if name in ("msg", "this", "address", "uint", "bool"):
                return None  # only meaningful inside Member/Call; handled there
            if self.ast.enum(name) is not None:
                return None  # enum namespace, handled by Member
            self.error(f"unknown identifier {name!r}", expr.span)
            return None
        if isinstance(expr, Member):
            return self._infer_member(expr)
        if isinstance(expr, Index):
            base_ty = self.check_expr(expr.base)
            idx_ty = self.check_expr(expr.index)
            if base_ty is None:
                return None
            if isinstance(base_ty, MappingType):
                if idx_ty is not None and not isinstance(idx_ty, AddressType):
                    self.error("mapping index must be an address", expr.index.span)
                return base_ty.value
            if isinstance(base_ty, (ArrayType, DynArrayType)):
                if idx_ty is not None and not isinstance(idx_ty, UintType):
                    self.error("array index must be a uint", expr.index.span)
                return base_ty.elem
            self.error(f"{base_ty} is not indexable", expr.span)
            return None
        if isinstance(expr, Binary):
            return self._infer_binary(expr)
        if isinstance(expr, Unary):
            operand_ty = self.check_expr(expr.operand)
            if expr.op == "!":
                if operand_ty is not None and not isinstance(operand_ty, BoolType):
                    self.error("operator ! requires bool", expr.span)
                return BOOLT
            if operand_ty is not None and not isinstance(operand_ty, UintType):
                self.error(f"operator {expr.op} requires uint", expr.span)
            return UINT
        if isinstance(expr, Conditional):
            cond_ty = self.check_expr(expr.cond)
            if cond_ty is not None and not isinstance(cond_ty, BoolType):
                self.error("condition must be bool", expr.cond.span)
            then_ty = self.check_expr(expr.then)
            else_ty = self.check_expr(expr.els)
            if then_ty is not None and else_ty is not None and then_ty != else_ty:
                self.error("conditional arms have mismatched types", expr.span)
            return then_ty or else_ty
        if isinstance(expr, Call):
            return self._infer_call(expr)
        if isinstance(expr, New):
            for a in expr.args:
                self.check_expr(a)
            return None  # flagged as rule 8 by the subset validator
        raise AssertionError(f"unhandled expression {expr!r}")

    def _infer_member(self, expr: Member) -> Optional[SolType]:
        obj = expr.obj
        if isinstance(obj, Ident):
            if obj.name == "msg":
                if expr.name == "sender":
                    return ADDRESS
                if expr.name == "value":
                    return UINT
                self.error(f"unknown member msg.{expr.name}", expr.span)
                return None
            if obj.name == "this":
                if expr.name == "balance":
                    return UINT
                self.error(f"unknown member this.{expr.name}", expr.span)
                return None
            if obj.name == "block":
                if expr.name == "timestamp":
                    return UINT
                self.error(f"unknown member block.{expr.name}", expr.span)
                return None
            enum_decl = self.ast.enum(obj.name)
            if enum_decl is not None:
                if expr.name not in enum_decl.members:
                    self.error(f"unknown enum member {obj.name}.{expr.name}", expr.span)
                    return None
                return EnumType(enum_decl.name, tuple(enum_decl.members))
        # address(this).balance
        if isinstance(obj, Call) and isinstance(obj.callee, Ident) and obj.callee.name == "address":
            self.check_expr(obj)
            if expr.name == "balance":
                return UINT
        obj_ty = self.check_expr(obj)
        if isinstance(obj_ty, AddressType) and expr.name == "balance":
            return UINT
        if isinstance(obj_ty, AddressType) and expr.name in ("transfer", "send", "call", "delegatecall"):
            return None  # call-position member; validated in _infer_call / subset
        self.error(f"unknown member access .{expr.name}", expr.span)
        return None

    def _infer_binary(self, expr: Binary) -> Optional[SolType]:
        lhs = self.check_expr(expr.lhs)
        rhs = self.check_expr(expr.rhs)
        op = expr.op
        if op in ("&&", "||"):
            for side, ty in ((expr.lhs, lhs), (expr.rhs, rhs)):
                if ty is not None and not isinstance(ty, BoolType):
                    self.error(f"operator {op} requires bool operands", side.span)
            return BOOLT
        if op in ("==", "!="):
            if lhs is not None and rhs is not None and lhs != rhs:
                self.error(f"cannot compare {lhs} with {rhs}", expr.span)
            elif lhs is not None and not is_scalar(lhs):
                self.error(f"cannot compare values of type {lhs}", expr.span)
            return BOOLT
        if op in ("<", "<=", ">", ">="):
            for side, ty in ((expr.lhs, lhs), (expr.rhs, rhs)):
                if ty is not None and not isinstance(ty, UintType):
                    self.error(f"operator {op} requires uint operands", side.span)
            return BOOLT
        # arithmetic, shifts and bitwise operators all type as uint; the
        # subset validator rejects the bitwise family under rule 9
        for side, ty in ((expr.lhs, lhs), (expr.rhs, rhs)):
            if ty is not None and not isinstance(ty, UintType):
                self.error(f"operator {op} requires uint operands", side.span)
        return UINT

    def _infer_call(self, expr: Call) -> Optional[SolType]:
        callee = expr.callee
        if isinstance(callee, Ident):
            name = callee.name
            if name == "require":
                if len(expr.args) not in (1, 2):
                    self.error("require expects 1 or 2 arguments", expr.span)
                if expr.args:
                    ty = self.check_expr(expr.args[0])
                    if ty is not None and not isinstance(ty, BoolType):
                        self.error("require condition must be bool", expr.args[0].span)
                if len(expr.args) == 2:
                    self.check_expr(expr.args[1])
                return None
            if name == "assert":
                if len(expr.args) != 1:
                    self.error("assert expects 1 argument", expr.span)
                else:
                    ty = self.check_expr(expr.args[0])
                    if ty is not None and not isinstance(ty, BoolType):
                        self.error("assert condition must be bool", expr.args[0].span)
                return None
            if name == "revert":
                for a in expr.args:
                    self.check_expr(a)
                if len(expr.args) > 1:
                    self.error("revert expects at most 1 argument", expr.span)
                return None
            if name == "selfdestruct":
                if len(expr.args) != 1:
                    self.error("selfdestruct expects 1 argument", expr.span)
                else:
                    ty = self.check_expr(expr.args[0])
                    if ty is not None and not isinstance(ty, AddressType):
                        self.error("selfdestruct beneficiary must be an address", expr.args[0].span)
                return None
            if name in BUILTIN_UINT_FNS:
                if len(expr.args) != 3:
                    self.error(f"{name} expects 3 arguments", expr.span)
                for a in expr.args:
                    ty = self.check_expr(a)
                    if ty is not None and not isinstance(ty, UintType):
                        self.error(f"{name} arguments must be uint", a.span)
                return UINT
            if name == "address":
                if len(expr.args) != 1:
                    self.error("address cast expects 1 argument", expr.span)
                    return ADDRESS
                arg = expr.args[0]
                if isinstance(arg, Ident) and arg.name == "this":
                    return ADDRESS
                ty = self.check_expr(arg)
                if not isinstance(arg, IntLit) and ty is not None and not isinstance(ty, AddressType):
                    self.error("address cast supports only address(0) and address(this)", expr.span)
                return ADDRESS
            if name == "uint":
                if len(expr.args) != 1:
                    self.error("uint cast expects 1 argument", expr.span)
                    return UINT
                ty = self.check_expr(expr.args[0])
                if ty is not None and not isinstance(ty, (UintType, EnumType)):
                    self.error(f"cannot cast {ty} to uint", expr.span)
                return UINT
            fn = self.ast.function(name)
            if fn is not None:
                self.check_call_args(fn.params, expr.args, f"function {name}", expr)
                return fn.return_ty
            ev = self.ast.event(name)
            if ev is not None:
                self.error(f"events must be emitted with `emit {name}(...)`", expr.span)
                return None
            self.error(f"unknown function {name!r}", expr.span)
            return None
        if isinstance(callee, Member):
            obj_ty = self.check_expr(callee.obj)
            if isinstance(obj_ty, AddressType) and callee.name == "transfer":
                if len(expr.args) != 1:
                    self.error("transfer expects 1 argument", expr.span)
                else:
                    ty = self.check_expr(expr.args[0])
                    if ty is not None and not isinstance(ty, UintType):
                        self.error("transfer amount must be uint", expr.args[0].span)
                callee.ty = None
                return None
            # any other member call: external call / low-level call; typed as
            # unknown and left for the subset validator (rule 8)
            for a in expr.args:
                self.check_expr(a)
            return None
        self.error("expression is not callable", expr.span)
        return None

    # -- helpers ----------------------------------------------------------------------

    def assignable(self, target: SolType, value: SolType) -> bool:
        return target == value

    def is_lvalue(self, expr: Expr) -> bool:
        if isinstance(expr, Ident):
            name = expr.name
            if name in self.locals:
                return True
            var = self.ast.state_var(name)
            return var is not None and not var.is_constant
        if isinstance(expr, Index):
            base = expr.base
            while isinstance(base, Index):
                base = base.base
            return self.is_lvalue(base)
        return False

    def is_constant_expr(self, expr: Expr) -> bool:
        if isinstance(expr, (IntLit, BoolLit)):
            return True
        if isinstance(expr, Member) and isinstance(expr.obj, Ident):
            return self.ast.enum(expr.obj.name) is not None
        if isinstance(expr, Binary):
            return self.is_constant_expr(expr.lhs) and self.is_constant_expr(expr.rhs)
        if isinstance(expr, Unary):
            return self.is_constant_expr(expr.operand)
        return False


def typecheck(ast: ContractAst) -> list[Diagnostic]:
    return TypeChecker(ast).check()
