"""Recursive-descent parser producing a ContractAst.

Grammar baseline is the Solidity 0.4.x dialect of the model's source corpus
(`throw`, `emit`, `constructor` and old-style constructors).  Constructs that
Sol forbids but Solidity allows (loops, `var`, dynamic arrays, bitwise
operators, ...) are parsed into the AST so the subset validator can point at
them with a rule number; constructs outside the grammar raise ParseError,
which `parse` turns into a diagnostic.
"""

from __future__ import annotations

from typing import Optional

from .lexer import Token
from .nodes import (
    ADDRESS, BOOLT, BYTES, STRING, UINT,
    ArrayType, AssignStmt, Binary, BoolLit, Call, Conditional, ContractAst,
    DynArrayType, EmitStmt, EnumDecl, EnumType, EventDecl, Expr,
    ExprStmt, ForStmt, FunDecl, Ident, IfStmt, Index, IntLit, MappingType,
    Member, New, Param, ParseError, ReturnStmt, SolType, Stmt, StrLit,
    ThrowStmt, Unary, VarDecl, VarDeclStmt, WhileStmt,
)

MODIFIER_KEYWORDS = {"public", "external", "internal", "private", "payable", "view", "pure", "constant"}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.current: Optional[ContractAst] = None

    # -- token plumbing -----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.text == text and tok.kind in ("punct", "keyword")

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if not self.at(text):
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.span)
        return self.advance()

    def expect_ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise ParseError(f"expected identifier, found {tok.text!r}", tok.span)
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    # -- unit ----------------------------------------------------------------

    def parse_unit(self) -> ContractAst:
        while self.at("pragma"):
            while not self.accept(";"):
                if self.peek().kind == "eof":
                    raise ParseError("unterminated pragma", self.peek().span)
                self.advance()
        contracts: list[ContractAst] = []
        interfaces: list[ContractAst] = []
        while self.peek().kind != "eof":
            if self.at("contract"):
                contracts.append(self.parse_contract("contract"))
            elif self.at("interface"):
                interfaces.append(self.parse_contract("interface"))
            else:
                raise ParseError(
                    f"expected contract or interface, found {self.peek().text!r}",
                    self.peek().span,
                )
        if not contracts:
            raise ParseError("no contract defined", self.peek().span)
        main = contracts[0]
        main.other_contract_names = [c.name for c in contracts[1:]]
        for iface in interfaces:
            main.interface_events.extend(iface.events)
        return main

    def parse_contract(self, kind: str) -> ContractAst:
        start = self.expect(kind)
        name = self.expect_ident().text
        bases: list[str] = []
        if self.accept("is"):
            bases.append(self.expect_ident().text)
            while self.accept(","):
                bases.append(self.expect_ident().text)
        self.expect("{")
        ast = ContractAst(
            name=name, state_vars=[], enums=[], events=[], functions=[],
            ctor=None, interface_events=[], bases=bases, other_contract_names=[],
            span=start.span,
        )
        outer = self.current
        self.current = ast
        try:
            while not self.at("}"):
                tok = self.peek()
                if self.at("event"):
                    ast.events.append(self.parse_event())
                elif self.at("enum"):
                    ast.enums.append(self.parse_enum())
                elif self.at("function") or self.at("constructor"):
                    fn = self.parse_function(name)
                    if fn.is_constructor:
                        if ast.ctor is not None:
                            raise ParseError("duplicate constructor", fn.span)
                        ast.ctor = fn
                    else:
                        ast.functions.append(fn)
                elif tok.kind == "eof":
                    raise ParseError("unexpected end of input in contract body", tok.span)
                else:
                    ast.state_vars.append(self.parse_state_var())
        finally:
            self.current = outer
        self.expect("}")
        return ast

    def parse_event(self) -> EventDecl:
        start = self.expect("event")
        name = self.expect_ident().text
        self.expect("(")
        params: list[Param] = []
        if not self.at(")"):
            while True:
                ty = self.parse_type()
                if self.peek().kind == "ident" and self.peek().text == "indexed":
                    self.advance()
                pname_tok = self.expect_ident()
                params.append(Param(pname_tok.text, ty, pname_tok.span))
                if not self.accept(","):
                    break
        self.expect(")")
        self.expect(";")
        return EventDecl(name, params, start.span)

    def parse_enum(self) -> EnumDecl:
        start = self.expect("enum")
        name = self.expect_ident().text
        self.expect("{")
        members = [self.expect_ident().text]
        while self.accept(","):
            members.append(self.expect_ident().text)
        self.expect("}")
        return EnumDecl(name, members, start.span)

    def parse_state_var(self) -> VarDecl:
        start = self.peek()
        ty = self.parse_type()
        is_constant = False
        while self.peek().text in MODIFIER_KEYWORDS:
            if self.peek().text == "constant":
                is_constant = True
            self.advance()
        name = self.expect_ident().text
        init = None
        if self.accept("="):
            init = self.parse_expr()
        self.expect(";")
        return VarDecl(name, ty, init, is_constant, start.span)

    # -- types -----------------------------------------------------------------

    def parse_type(self) -> SolType:
        tok = self.peek()
        base: SolType
        if self.accept("uint"):
            base = UINT
        elif self.accept("bool"):
            base = BOOLT
        elif self.accept("address"):
            base = ADDRESS
        elif self.accept("string"):
            base = STRING
        elif self.accept("bytes"):
            base = BYTES
        elif self.at("mapping"):
            self.advance()
            self.expect("(")
            self.expect("address")
            self.expect("=>")
            value = self.parse_type()
            self.expect(")")
            base = MappingType(value)
        elif tok.kind == "ident":
            decl = self.current.enum(tok.text) if self.current is not None else None
            if decl is None:
                raise ParseError(f"unknown type {tok.text!r}", tok.span)
            self.advance()
            base = EnumType(decl.name, tuple(decl.members))
        else:
            raise ParseError(f"expected type, found {tok.text!r}", tok.span)
        while self.at("["):
            self.advance()
            if self.at("]"):
                self.advance()
                base = DynArrayType(base)
            else:
                size_tok = self.peek()
                if size_tok.kind != "number":
                    raise ParseError("array length must be a number literal", size_tok.span)
                self.advance()
                self.expect("]")
                base = ArrayType(base, int(size_tok.text, 0))
        return base

    def looks_like_type(self) -> bool:
        tok = self.peek()
        if tok.text in ("uint", "bool", "address", "string", "bytes", "mapping"):
            return True
        if tok.kind == "ident" and self.current is not None and self.current.enum(tok.text) is not None:
            nxt = self.peek(1)
            return nxt.kind == "ident" or nxt.text == "["
        return False

    # -- functions ---------------------------------------------------------------

    def parse_function(self, contract_name: str) -> FunDecl:
        start = self.peek()
        is_ctor = False
        name = ""
        if self.accept("constructor"):
            is_ctor = True
        else:
            self.expect("function")
            name = self.expect_ident().text
            if name == contract_name:
                is_ctor = True
                name = ""
        self.expect("(")
        params: list[Param] = []
        if not self.at(")"):
            while True:
                ty = self.parse_type()
                pname_tok = self.expect_ident()
                params.append(Param(pname_tok.text, ty, pname_tok.span))
                if not self.accept(","):
                    break
        self.expect(")")
        visibility = "public"
        payable = False
        while self.peek().text in MODIFIER_KEYWORDS:
            text = self.advance().text
            if text in ("public", "external", "internal", "private"):
                visibility = text
            elif text == "payable":
                payable = True
        return_ty = None
        if self.accept("returns"):
            self.expect("(")
            return_ty = self.parse_type()
            if self.peek().kind == "ident":
                raise ParseError("named return values are not supported", self.peek().span)
            if self.at(","):
                raise ParseError("multiple return values are not supported", self.peek().span)
            self.expect(")")
            while self.peek().text in MODIFIER_KEYWORDS:
                self.advance()
        if self.accept(";"):
            body: Optional[list[Stmt]] = None
        else:
            body = self.parse_block()
        return FunDecl(name, params, visibility, payable, return_ty, body, is_ctor, start.span)

    # -- statements -----------------------------------------------------------------

    def parse_block(self) -> list[Stmt]:
        self.expect("{")
        stmts: list[Stmt] = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                raise ParseError("unterminated block", self.peek().span)
            stmts.append(self.parse_stmt())
        self.expect("}")
        return stmts

    def parse_stmt_or_block(self) -> list[Stmt]:
        if self.at("{"):
            return self.parse_block()
        return [self.parse_stmt()]

    def parse_stmt(self) -> Stmt:
        tok = self.peek()
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then_body = self.parse_stmt_or_block()
            else_body = None
            if self.accept("else"):
                else_body = self.parse_stmt_or_block()
            return IfStmt(cond, then_body, else_body).with_span(tok.span)
        if self.at("return"):
            self.advance()
            value = None
            if not self.at(";"):
                value = self.parse_expr()
            self.expect(";")
            return ReturnStmt(value).with_span(tok.span)
        if self.at("emit"):
            self.advance()
            ev = self.expect_ident().text
            self.expect("(")
            args = self.parse_args()
            self.expect(")")
            self.expect(";")
            return EmitStmt(ev, args).with_span(tok.span)
        if self.at("throw"):
            self.advance()
            self.expect(";")
            return ThrowStmt().with_span(tok.span)
        if self.at("while"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            body = self.parse_stmt_or_block()
            return WhileStmt(cond, body).with_span(tok.span)
        if self.at("do"):
            self.advance()
            body = self.parse_stmt_or_block()
            self.expect("while")
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            self.expect(";")
            return WhileStmt(cond, body, is_do_while=True).with_span(tok.span)
        if self.at("for"):
            self.advance()
            self.expect("(")
            init: Optional[Stmt] = None
            if not self.at(";"):
                init = self.parse_loop_header_stmt()
            self.expect(";")
            cond = None if self.at(";") else self.parse_expr()
            self.expect(";")
            post = None if self.at(")") else self.parse_simple_stmt_no_semi()
            self.expect(")")
            body = self.parse_stmt_or_block()
            return ForStmt(init, cond, post, body).with_span(tok.span)
        if self.at("var"):
            self.advance()
            name = self.expect_ident().text
            init_expr = None
            if self.accept("="):
                init_expr = self.parse_expr()
            self.expect(";")
            return VarDeclStmt(name, None, init_expr).with_span(tok.span)
        if self.looks_like_type():
            ty = self.parse_type()
            name = self.expect_ident().text
            init_expr = None
            if self.accept("="):
                init_expr = self.parse_expr()
            self.expect(";")
            return VarDeclStmt(name, ty, init_expr).with_span(tok.span)
        stmt = self.parse_simple_stmt_no_semi()
        self.expect(";")
        return stmt

    def parse_loop_header_stmt(self) -> Stmt:
        tok = self.peek()
        if self.at("var"):
            self.advance()
            name = self.expect_ident().text
            init_expr = None
            if self.accept("="):
                init_expr = self.parse_expr()
            return VarDeclStmt(name, None, init_expr).with_span(tok.span)
        if self.looks_like_type():
            ty = self.parse_type()
            name = self.expect_ident().text
            init_expr = None
            if self.accept("="):
                init_expr = self.parse_expr()
            return VarDeclStmt(name, ty, init_expr).with_span(tok.span)
        return self.parse_simple_stmt_no_semi()

    def parse_simple_stmt_no_semi(self) -> Stmt:
        tok = self.peek()
        expr = self.parse_expr()
        for op in ("=", "+=", "-=", "*=", "/=", "%="):
            if self.at(op):
                self.advance()
                value = self.parse_expr()
                return AssignStmt(expr, op, value).with_span(tok.span)
        if self.at("++") or self.at("--"):
            op = self.advance().text
            one = IntLit(1)
            one.span = tok.span
            return AssignStmt(expr, "+=" if op == "++" else "-=", one).with_span(tok.span)
        return ExprStmt(expr).with_span(tok.span)

    # -- expressions ------------------------------------------------------------------

    def parse_args(self) -> list[Expr]:
        args: list[Expr] = []
        if not self.at(")"):
            while True:
                args.append(self.parse_expr())
                if not self.accept(","):
                    break
        return args

    def parse_expr(self) -> Expr:
        return self.parse_conditional()

    def parse_conditional(self) -> Expr:
        cond = self.parse_or()
        if self.at("?"):
            tok = self.advance()
            then = self.parse_expr()
            self.expect(":")
            els = self.parse_conditional()
            return Conditional(cond, then, els).with_span(tok.span)
        return cond

    def _binary_level(self, ops: tuple[str, ...], next_level) -> Expr:
        lhs = next_level()
        while self.peek().kind == "punct" and self.peek().text in ops:
            tok = self.advance()
            rhs = next_level()
            lhs = Binary(tok.text, lhs, rhs).with_span(tok.span)
        return lhs

    def parse_or(self) -> Expr:
        return self._binary_level(("||",), self.parse_and)

    def parse_and(self) -> Expr:
        return self._binary_level(("&&",), self.parse_equality)

    def parse_equality(self) -> Expr:
        return self._binary_level(("==", "!="), self.parse_relational)

    def parse_relational(self) -> Expr:
        return self._binary_level(("<", "<=", ">", ">="), self.parse_bitor)

    def parse_bitor(self) -> Expr:
        return self._binary_level(("|",), self.parse_bitxor)

    def parse_bitxor(self) -> Expr:
        return self._binary_level(("^",), self.parse_bitand)

    def parse_bitand(self) -> Expr:
        return self._binary_level(("&",), self.parse_shift)

    def parse_shift(self) -> Expr:
        return self._binary_level(("<<", ">>"), self.parse_additive)

    def parse_additive(self) -> Expr:
        return self._binary_level(("+", "-"), self.parse_multiplicative)

    def parse_multiplicative(self) -> Expr:
        return self._binary_level(("*", "/", "%"), self.parse_unary)

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "punct" and tok.text in ("!", "-", "~"):
            self.advance()
            operand = self.parse_unary()
            return Unary(tok.text, operand).with_span(tok.span)
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        expr = self.parse_primary()
        while True:
            if self.at("."):
                tok = self.advance()
                name = self.peek()
                if name.kind not in ("ident", "keyword"):
                    raise ParseError("expected member name", name.span)
                self.advance()
                expr = Member(expr, name.text).with_span(tok.span)
            elif self.at("["):
                tok = self.advance()
                index = self.parse_expr()
                self.expect("]")
                expr = Index(expr, index).with_span(tok.span)
            elif self.at("("):
                tok = self.advance()
                args = self.parse_args()
                self.expect(")")
                expr = Call(expr, args).with_span(tok.span)
            else:
                return expr

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return IntLit(int(tok.text, 0)).with_span(tok.span)
        if tok.kind == "string":
            self.advance()
            return StrLit(tok.text).with_span(tok.span)
        if self.at("true"):
            self.advance()
            return BoolLit(True).with_span(tok.span)
        if self.at("false"):
            self.advance()
            return BoolLit(False).with_span(tok.span)
        if self.at("new"):
            self.advance()
            name = self.expect_ident().text
            self.expect("(")
            args = self.parse_args()
            self.expect(")")
            return New(name, args).with_span(tok.span)
        if self.at("("):
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if tok.kind == "ident" or tok.text in ("address", "uint", "bool"):
            self.advance()
            return Ident(tok.text).with_span(tok.span)
        raise ParseError(f"unexpected token {tok.text!r} in expression", tok.span)


def parse_tokens(tokens: list[Token]) -> ContractAst:
    return _Parser(tokens).parse_unit()
