"""Source regeneration from the AST (round-trip checked in the tests)."""

from __future__ import annotations

from .nodes import (
    AssignStmt, Binary, BoolLit, Call, Conditional, ContractAst, EmitStmt,
    EnumDecl, EventDecl, Expr, ExprStmt, ForStmt, FunDecl, Ident, IfStmt,
    Index, IntLit, Member, New, Param, ReturnStmt, Stmt, StrLit, ThrowStmt,
    Unary, VarDecl, VarDeclStmt, WhileStmt,
)


def pretty_expr(e: Expr) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, StrLit):
        return f'"{e.value}"'
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, Member):
        return f"{pretty_expr(e.obj)}.{e.name}"
    if isinstance(e, Index):
        return f"{pretty_expr(e.base)}[{pretty_expr(e.index)}]"
    if isinstance(e, Binary):
        return f"({pretty_expr(e.lhs)} {e.op} {pretty_expr(e.rhs)})"
    if isinstance(e, Unary):
        return f"({e.op}{pretty_expr(e.operand)})"
    if isinstance(e, Conditional):
        return f"({pretty_expr(e.cond)} ? {pretty_expr(e.then)} : {pretty_expr(e.els)})"
    if isinstance(e, Call):
        args = ", ".join(pretty_expr(a) for a in e.args)
        return f"{pretty_expr(e.callee)}({args})"
    if isinstance(e, New):
        args = ", ".join(pretty_expr(a) for a in e.args)
        return f"new {e.type_name}({args})"
    raise AssertionError(f"unhandled expression {e!r}")


def _stmt_lines(stmt: Stmt, indent: str) -> list[str]:
    if isinstance(stmt, VarDeclStmt):
        ty = "var" if stmt.declared_ty is None else str(stmt.declared_ty)
        tail = f" = {pretty_expr(stmt.init)}" if stmt.init is not None else ""
        return [f"{indent}{ty} {stmt.name}{tail};"]
    if isinstance(stmt, AssignStmt):
        return [f"{indent}{pretty_expr(stmt.target)} {stmt.op} {pretty_expr(stmt.value)};"]
    if isinstance(stmt, ExprStmt):
        return [f"{indent}{pretty_expr(stmt.expr)};"]
    if isinstance(stmt, IfStmt):
        lines = [f"{indent}if ({pretty_expr(stmt.cond)}) {{"]
        for s in stmt.then_body:
            lines.extend(_stmt_lines(s, indent + "    "))
        if stmt.else_body is not None:
            lines.append(f"{indent}}} else {{")
            for s in stmt.else_body:
                lines.extend(_stmt_lines(s, indent + "    "))
        lines.append(f"{indent}}}")
        return lines
    if isinstance(stmt, ReturnStmt):
        tail = f" {pretty_expr(stmt.value)}" if stmt.value is not None else ""
        return [f"{indent}return{tail};"]
    if isinstance(stmt, EmitStmt):
        args = ", ".join(pretty_expr(a) for a in stmt.args)
        return [f"{indent}emit {stmt.event}({args});"]
    if isinstance(stmt, ThrowStmt):
        return [f"{indent}throw;"]
    if isinstance(stmt, WhileStmt):
        if stmt.is_do_while:
            lines = [f"{indent}do {{"]
            for s in stmt.body:
                lines.extend(_stmt_lines(s, indent + "    "))
            lines.append(f"{indent}}} while ({pretty_expr(stmt.cond)});")
            return lines
        lines = [f"{indent}while ({pretty_expr(stmt.cond)}) {{"]
        for s in stmt.body:
            lines.extend(_stmt_lines(s, indent + "    "))
        lines.append(f"{indent}}}")
        return lines
    if isinstance(stmt, ForStmt):
        init = _stmt_lines(stmt.init, "")[0].rstrip(";") if stmt.init is not None else ""
        cond = pretty_expr(stmt.cond) if stmt.cond is not None else ""
        post = _stmt_lines(stmt.post, "")[0].rstrip(";") if stmt.post is not None else ""
        lines = [f"{indent}for ({init}; {cond}; {post}) {{"]
        for s in stmt.body:
            lines.extend(_stmt_lines(s, indent + "    "))
        lines.append(f"{indent}}}")
        return lines
    raise AssertionError(f"unhandled statement {stmt!r}")


def _param_list(params: list[Param]) -> str:
    return ", ".join(f"{p.ty} {p.name}" for p in params)


def _fun_lines(fn: FunDecl, indent: str) -> list[str]:
    head = "constructor" if fn.is_constructor else f"function {fn.name}"
    sig = f"{indent}{head}({_param_list(fn.params)}) {fn.visibility}"
    if fn.payable:
        sig += " payable"
    if fn.return_ty is not None:
        sig += f" returns ({fn.return_ty})"
    if fn.body is None:
        return [sig + ";"]
    lines = [sig + " {"]
    for s in fn.body:
        lines.extend(_stmt_lines(s, indent + "    "))
    lines.append(indent + "}")
    return lines


def pretty_print(ast: ContractAst) -> str:
    lines: list[str] = []
    if ast.interface_events:
        lines.append("interface __Declared {")
        for ev in ast.interface_events:
            lines.append(f"    event {ev.name}({_param_list(ev.params)});")
        lines.append("}")
    head = f"contract {ast.name}"
    if ast.bases:
        head += " is " + ", ".join(ast.bases)
    lines.append(head + " {")
    for en in ast.enums:
        lines.append(f"    enum {en.name} {{ {', '.join(en.members)} }}")
    for var in ast.state_vars:
        tail = f" = {pretty_expr(var.init)}" if var.init is not None else ""
        const = " constant" if var.is_constant else ""
        lines.append(f"    {var.ty}{const} {var.name}{tail};")
    for ev in ast.events:
        lines.append(f"    event {ev.name}({_param_list(ev.params)});")
    if ast.ctor is not None:
        lines.extend(_fun_lines(ast.ctor, "    "))
    for fn in ast.functions:
        lines.extend(_fun_lines(fn, "    "))
    lines.append("}")
    for name in ast.other_contract_names:
        lines.append(f"contract {name} {{ }}")
    return "\n".join(lines) + "\n"
