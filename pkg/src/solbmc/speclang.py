"""Specification DSL: parse and lower the four property classes.

Syntax (one property per statement, ``#`` comments, optional
``property <name>:`` prefix for report keying):

    invariant <pred>
    trace(<k>) <pred>
    chain forbid E3(pats) between E1(pats) and E2(pats) [where <pred>]
    between E1(pats) and E2(pats) call f(pats) is {always|never} possible
        [where <pred>]

Predicates read state variables (with mapping/array indexing), ``balances[a]``,
``blocktime``, ``alive``, address constants (``noAddr``, ``addr1``...,
``contractAddr``), event binders, and a finite sum ``SUM x in Addr: <term>``
(``UserAddr`` excludes noAddr and contractAddr).  In a call-possibility
``where`` clause, ``sender``, ``value`` and ``time`` name the hypothetical
call's parameters, and the target function's parameter names are in scope.

Lowered predicates are terms over the extractor's symbolic input names
(``state:*``, ``bal:*``, ``alive``, ``btime``) plus ``bind:<binder>`` and
``hyp:*`` variables; the checker substitutes per-step vectors for them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from . import terms as T
from .frontend.nodes import (
    AddressType, ArrayType, BoolType, ContractAst, EnumType, MappingType,
    SolType, UintType,
)
from .model import AddrDomain, SystemState
from .symexec import ContractModel, arg_kind


class SpecError(Exception):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.message = message
        self.line = line


# ---------------------------------------------------------------------------
# Property AST


@dataclass
class Pat:
    kind: str  # wild | int | bool | addr | bind
    value: object = None


@dataclass
class EventPattern:
    event: str
    args: list[Pat]
    line: int = 0


@dataclass
class PExpr:
    pass


@dataclass
class PInt(PExpr):
    value: int


@dataclass
class PBool(PExpr):
    value: bool


@dataclass
class PAddr(PExpr):
    name: str


@dataclass
class PName(PExpr):
    name: str  # binder, call parameter, builtin, or scalar state variable


@dataclass
class PIndex(PExpr):
    base: str
    indices: list[PExpr]


@dataclass
class PBalances(PExpr):
    addr: PExpr


@dataclass
class PBinary(PExpr):
    op: str
    lhs: PExpr
    rhs: PExpr


@dataclass
class PUnary(PExpr):
    op: str
    operand: PExpr


@dataclass
class PSum(PExpr):
    binder: str
    over: str  # Addr | UserAddr
    body: PExpr


@dataclass
class Invariant:
    pred: PExpr


@dataclass
class TraceProp:
    pred: PExpr
    k: int


@dataclass
class EventChain:
    first: EventPattern
    second: EventPattern
    forbidden: EventPattern
    where: Optional[PExpr]


@dataclass
class CallPossibility:
    first: EventPattern
    second: EventPattern
    fname: str
    call_args: list[Pat]
    always: bool
    where: Optional[PExpr]


Body = Union[Invariant, TraceProp, EventChain, CallPossibility]


@dataclass
class Property:
    name: str
    body: Body
    line: int = 0


# ---------------------------------------------------------------------------
# Tokenizer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<comment>#[^\n]*)|(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>==|!=|<=|>=|&&|\|\||[-+*/%<>()\[\]:,_!]))"
)

KEYWORDS = {
    "property", "invariant", "trace", "chain", "forbid", "between", "and",
    "or", "not", "call", "is", "always", "never", "possible", "where",
    "SUM", "in", "true", "false",
}


@dataclass
class _Tok:
    kind: str  # num | id | op | eof
    text: str
    line: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            stripped = text[pos:].strip()
            if not stripped:
                break
            line = text.count("\n", 0, pos) + 1
            raise SpecError(f"unexpected character {stripped[0]!r}", line)
        line_here = text.count("\n", 0, m.start(m.lastgroup)) + 1
        pos = m.end()
        if m.lastgroup == "comment":
            continue
        kind = m.lastgroup
        toks.append(_Tok("op" if kind == "op" else kind, m.group(kind), line_here))
    toks.append(_Tok("eof", "", text.count("\n") + 1))
    return toks


class _SpecParser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.pos = 0

    def peek(self, off: int = 0) -> _Tok:
        return self.toks[min(self.pos + off, len(self.toks) - 1)]

    def advance(self) -> _Tok:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, text: str) -> bool:
        return self.peek().text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if t.text != text:
            raise SpecError(f"expected {text!r}, found {t.text or 'end of file'!r}", t.line)
        return self.advance()

    def expect_ident(self) -> _Tok:
        t = self.peek()
        if t.kind != "id":
            raise SpecError(f"expected identifier, found {t.text!r}", t.line)
        return self.advance()

    # -- properties -------------------------------------------------------------

    def parse_file(self) -> list[Property]:
        out: list[Property] = []
        while self.peek().kind != "eof":
            out.append(self.parse_property(len(out) + 1))
        return out

    def parse_property(self, ordinal: int) -> Property:
        line = self.peek().line
        name = f"property{ordinal}"
        if self.at("property"):
            self.advance()
            name = self.expect_ident().text
            self.expect(":")
        body = self.parse_body()
        return Property(name, body, line)

    def parse_body(self) -> Body:
        t = self.peek()
        if self.accept("invariant"):
            return Invariant(self.parse_pred())
        if self.accept("trace"):
            self.expect("(")
            k_tok = self.peek()
            if k_tok.kind != "num":
                raise SpecError("trace(k) expects a number", k_tok.line)
            self.advance()
            self.expect(")")
            return TraceProp(self.parse_pred(), int(k_tok.text))
        if self.accept("chain"):
            self.expect("forbid")
            forbidden = self.parse_event_pattern()
            self.expect("between")
            first = self.parse_event_pattern()
            self.expect("and")
            second = self.parse_event_pattern()
            where = self.parse_pred() if self.accept("where") else None
            return EventChain(first, second, forbidden, where)
        if self.accept("between"):
            first = self.parse_event_pattern()
            self.expect("and")
            second = self.parse_event_pattern()
            self.expect("call")
            fname = self.expect_ident().text
            self.expect("(")
            call_args: list[Pat] = []
            if not self.at(")"):
                while True:
                    call_args.append(self.parse_pat())
                    if not self.accept(","):
                        break
            self.expect(")")
            self.expect("is")
            if self.accept("always"):
                always = True
            elif self.accept("never"):
                always = False
            else:
                raise SpecError("expected 'always' or 'never'", self.peek().line)
            self.expect("possible")
            where = self.parse_pred() if self.accept("where") else None
            return CallPossibility(first, second, fname, call_args, always, where)
        raise SpecError(
            f"expected a property (invariant/trace/chain/between), found {t.text!r}", t.line
        )

    def parse_event_pattern(self) -> EventPattern:
        name_tok = self.expect_ident()
        self.expect("(")
        args: list[Pat] = []
        if not self.at(")"):
            while True:
                args.append(self.parse_pat())
                if not self.accept(","):
                    break
        self.expect(")")
        return EventPattern(name_tok.text, args, name_tok.line)

    def parse_pat(self) -> Pat:
        t = self.peek()
        if self.accept("_"):
            return Pat("wild")
        if t.kind == "num":
            self.advance()
            return Pat("int", int(t.text))
        if self.accept("true"):
            return Pat("bool", True)
        if self.accept("false"):
            return Pat("bool", False)
        if t.kind == "id":
            self.advance()
            return Pat("bind", t.text)  # may later resolve to an address constant
        raise SpecError(f"bad pattern {t.text!r}", t.line)

    # -- predicates ---------------------------------------------------------------

    def parse_pred(self) -> PExpr:
        return self.parse_or()

    def parse_or(self) -> PExpr:
        lhs = self.parse_and()
        while self.at("or") or self.at("||"):
            self.advance()
            lhs = PBinary("or", lhs, self.parse_and())
        return lhs

    def parse_and(self) -> PExpr:
        lhs = self.parse_not()
        while self.at("and") or self.at("&&"):
            self.advance()
            lhs = PBinary("and", lhs, self.parse_not())
        return lhs

    def parse_not(self) -> PExpr:
        if self.accept("not") or self.accept("!"):
            return PUnary("not", self.parse_not())
        return self.parse_comparison()

    def parse_comparison(self) -> PExpr:
        lhs = self.parse_additive()
        for op in ("==", "!=", "<=", ">=", "<", ">"):
            if self.at(op):
                self.advance()
                return PBinary(op, lhs, self.parse_additive())
        return lhs

    def parse_additive(self) -> PExpr:
        lhs = self.parse_multiplicative()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            lhs = PBinary(op, lhs, self.parse_multiplicative())
        return lhs

    def parse_multiplicative(self) -> PExpr:
        lhs = self.parse_unary()
        while self.at("*") or self.at("/") or self.at("%"):
            op = self.advance().text
            lhs = PBinary(op, lhs, self.parse_unary())
        return lhs

    def parse_unary(self) -> PExpr:
        if self.accept("-"):
            return PUnary("-", self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> PExpr:
        t = self.peek()
        if t.kind == "num":
            self.advance()
            return PInt(int(t.text))
        if self.accept("true"):
            return PBool(True)
        if self.accept("false"):
            return PBool(False)
        if self.accept("("):
            inner = self.parse_pred()
            self.expect(")")
            return inner
        if self.accept("SUM"):
            binder = self.expect_ident().text
            self.expect("in")
            over = self.expect_ident().text
            if over not in ("Addr", "UserAddr"):
                raise SpecError("SUM range must be Addr or UserAddr", t.line)
            self.expect(":")
            return PSum(binder, over, self.parse_additive())
        if t.kind == "id":
            self.advance()
            name = t.text
            if name == "balances":
                self.expect("[")
                addr = self.parse_pred()
                self.expect("]")
                return PBalances(addr)
            if self.at("["):
                indices: list[PExpr] = []
                while self.accept("["):
                    indices.append(self.parse_pred())
                    self.expect("]")
                return PIndex(name, indices)
            return PName(name)
        raise SpecError(f"unexpected token {t.text!r} in predicate", t.line)


# ---------------------------------------------------------------------------
# Type checking and lowering


@dataclass
class Binder:
    name: str
    ty: SolType


@dataclass
class LoweredInvariant:
    pred: T.Term  # over state:* / bal:* / alive / btime


@dataclass
class LoweredTrace:
    pred: T.Term
    k: int


@dataclass
class LoweredPattern:
    tag: str
    constraints: list[tuple[int, str, T.Term]]  # (position, kind, expected term)


@dataclass
class LoweredChain:
    first: LoweredPattern
    second: LoweredPattern
    forbidden: LoweredPattern
    binders: list[tuple[str, T.Sort]]
    where: Optional[T.Term]  # over state:* at sigma_q plus bind:* vars


@dataclass
class LoweredCall:
    first: LoweredPattern
    second: LoweredPattern
    fname: str
    arg_constraints: list[tuple[str, str, T.Term]]  # (param name, kind, expected)
    always: bool
    binders: list[tuple[str, T.Sort]]
    where: Optional[T.Term]


@dataclass
class LoweredProperty:
    name: str
    body: Union[LoweredInvariant, LoweredTrace, LoweredChain, LoweredCall]


class _Lowerer:
    def __init__(self, model: ContractModel):
        self.model = model
        self.ast = model.ast
        self.w = model.cfg.int_width
        self.addrs = model.addrs
        self.addr_sort = model.addr_sort
        self.binders: dict[str, SolType] = {}
        self.call_params: dict[str, SolType] = {}
        self.hyp_scope = False
        self.sum_binders: dict[str, T.Term] = {}

    def sort_of(self, ty: SolType) -> T.Sort:
        if isinstance(ty, (UintType, EnumType)):
            return T.bv_sort(self.w)
        if isinstance(ty, BoolType):
            return T.BOOL
        if isinstance(ty, AddressType):
            return self.addr_sort
        raise SpecError(f"type {ty} cannot appear in a predicate", 0)

    def addr_const_index(self, name: str) -> Optional[int]:
        if name in self.addrs.elements:
            return self.addrs.index(name)
        return None

    # -- binder inference -----------------------------------------------------------

    def register_pattern(self, pat: EventPattern) -> None:
        decl = self.ast.event(pat.event)
        if decl is None or self.model.events.event(pat.event) is None:
            raise SpecError(f"unknown or never-emitted event {pat.event!r}", pat.line)
        if len(pat.args) != len(decl.params):
            raise SpecError(
                f"event {pat.event} has {len(decl.params)} parameters, pattern has {len(pat.args)}",
                pat.line,
            )
        for p, a in zip(decl.params, pat.args):
            if a.kind == "bind":
                name = a.value
                if self.addr_const_index(name) is not None:
                    continue  # address constant, not a binder
                prior = self.binders.get(name)
                if prior is not None and type(prior) is not type(p.ty):
                    raise SpecError(
                        f"binder {name!r} used at {prior} and {p.ty} positions", pat.line
                    )
                self.binders[name] = p.ty

    def lower_pattern(self, pat: EventPattern) -> LoweredPattern:
        decl = self.ast.event(pat.event)
        constraints: list[tuple[int, str, T.Term]] = []
        for pos, (p, a) in enumerate(zip(decl.params, pat.args)):
            kind = arg_kind(p.ty)
            if a.kind == "wild":
                continue
            if a.kind == "int":
                if kind != "bv":
                    raise SpecError(f"numeric pattern for non-numeric parameter", pat.line)
                constraints.append((pos, kind, T.bv_const(a.value, self.w)))
            elif a.kind == "bool":
                if kind != "bool":
                    raise SpecError("boolean pattern for non-bool parameter", pat.line)
                constraints.append((pos, kind, T.bool_const(a.value)))
            else:
                idx = self.addr_const_index(a.value)
                if idx is not None:
                    if kind != "addr":
                        raise SpecError("address pattern for non-address parameter", pat.line)
                    constraints.append((pos, kind, T.enum_const(self.addr_sort, idx)))
                else:
                    constraints.append(
                        (pos, kind, T.var(f"bind:{a.value}", self.sort_of(self.binders[a.value])))
                    )
        return LoweredPattern(pat.event, constraints)

    # -- predicate lowering ------------------------------------------------------------

    def lower_pred(self, e: PExpr) -> T.Term:
        term, ty = self.lower_expr(e)
        if not isinstance(ty, BoolType):
            raise SpecError("predicate must be boolean", 0)
        return term

    def lower_expr(self, e: PExpr) -> tuple[T.Term, SolType]:
        if isinstance(e, PInt):
            return T.bv_const(e.value, self.w), UintType()
        if isinstance(e, PBool):
            return T.bool_const(e.value), BoolType()
        if isinstance(e, PName):
            return self.lower_name(e.name)
        if isinstance(e, PIndex):
            return self.lower_index(e)
        if isinstance(e, PBalances):
            addr_term, ty = self.lower_expr(e.addr)
            if not isinstance(ty, AddressType):
                raise SpecError("balances[...] index must be an address", 0)
            table = [
                (T.enum_const(self.addr_sort, i), T.var(f"bal:{a}", T.bv_sort(self.w)))
                for i, a in enumerate(self.addrs.elements[:-1])
            ]
            default = T.var(f"bal:{self.addrs.elements[-1]}", T.bv_sort(self.w))
            return T.addr_select(addr_term, table, default), UintType()
        if isinstance(e, PSum):
            return self.lower_sum(e)
        if isinstance(e, PUnary):
            term, ty = self.lower_expr(e.operand)
            if e.op == "not":
                if not isinstance(ty, BoolType):
                    raise SpecError("not requires a boolean", 0)
                return T.not_(term), BoolType()
            if not isinstance(ty, UintType):
                raise SpecError("unary - requires a uint", 0)
            return T.sub(T.bv_const(0, self.w), term), UintType()
        if isinstance(e, PBinary):
            return self.lower_binary(e)
        raise SpecError(f"cannot lower {type(e).__name__}", 0)

    def lower_name(self, name: str) -> tuple[T.Term, SolType]:
        if name in self.sum_binders:
            return self.sum_binders[name], AddressType()
        idx = self.addr_const_index(name)
        if idx is not None:
            return T.enum_const(self.addr_sort, idx), AddressType()
        if name == "blocktime":
            return T.var("btime", T.bv_sort(self.w)), UintType()
        if name == "alive":
            return T.var("alive", T.BOOL), BoolType()
        if name in self.binders:
            ty = self.binders[name]
            return T.var(f"bind:{name}", self.sort_of(ty)), ty
        if self.hyp_scope:
            if name == "sender":
                return T.var("hyp:sender", self.addr_sort), AddressType()
            if name == "value":
                return T.var("hyp:value", T.bv_sort(self.w)), UintType()
            if name == "time":
                return T.var("hyp:time", T.bv_sort(self.w)), UintType()
            if name in self.call_params:
                ty = self.call_params[name]
                return T.var(f"hyp:arg:{name}", self.sort_of(ty)), ty
        var = self.ast.state_var(name)
        if var is not None:
            if isinstance(var.ty, (MappingType, ArrayType)):
                raise SpecError(f"state variable {name!r} needs an index", 0)
            return T.var(f"state:{name}", self.sort_of(var.ty)), var.ty
        enum_decl = None
        for en in self.ast.enums:
            if name in en.members:
                enum_decl = en
        if enum_decl is not None:
            return (
                T.bv_const(enum_decl.members.index(name), self.w),
                EnumType(enum_decl.name, tuple(enum_decl.members)),
            )
        raise SpecError(f"unknown identifier {name!r}", 0)

    def lower_index(self, e: PIndex) -> tuple[T.Term, SolType]:
        var = self.ast.state_var(e.base)
        if var is None:
            raise SpecError(f"unknown state variable {e.base!r}", 0)
        ty: SolType = var.ty
        prefix_terms: list[tuple[str, T.Term]] = [(e.base, T.TRUE)]
        for idx_expr in e.indices:
            if isinstance(ty, MappingType):
                idx_term, idx_ty = self.lower_expr(idx_expr)
                if not isinstance(idx_ty, AddressType):
                    raise SpecError("mapping index must be an address", 0)
                new: list[tuple[str, T.Term]] = []
                for prefix, cond in prefix_terms:
                    for i, a in enumerate(self.addrs.elements):
                        new.append((
                            f"{prefix}[{a}]",
                            T.and_(cond, T.eq(idx_term, T.enum_const(self.addr_sort, i))),
                        ))
                prefix_terms = [(p, c) for p, c in new if c is not T.FALSE]
                ty = ty.value
            elif isinstance(ty, ArrayType):
                idx_term, idx_ty = self.lower_expr(idx_expr)
                if not isinstance(idx_ty, UintType):
                    raise SpecError("array index must be a uint", 0)
                new = []
                for prefix, cond in prefix_terms:
                    for i in range(ty.length):
                        new.append((
                            f"{prefix}[{i}]",
                            T.and_(cond, T.eq(idx_term, T.bv_const(i, self.w))),
                        ))
                prefix_terms = [(p, c) for p, c in new if c is not T.FALSE]
                ty = ty.elem
            else:
                raise SpecError(f"{e.base!r} is indexed too deeply", 0)
        if isinstance(ty, (MappingType, ArrayType)):
            raise SpecError(f"{e.base!r} is not fully indexed", 0)
        sort = self.sort_of(ty)
        if not prefix_terms:
            raise SpecError(f"index of {e.base!r} is out of bounds", 0)
        value_pairs = [(cond, T.var(f"state:{prefix}", sort)) for prefix, cond in prefix_terms]
        out = T.indexed_select(value_pairs, T.var(f"state:{prefix_terms[-1][0]}", sort))
        return out, ty

    def lower_sum(self, e: PSum) -> tuple[T.Term, SolType]:
        if e.binder in self.sum_binders:
            raise SpecError(f"nested SUM reuses binder {e.binder!r}", 0)
        indices = (
            list(range(len(self.addrs)))
            if e.over == "Addr"
            else list(self.addrs.user_addrs)
        )
        total = T.bv_const(0, self.w)
        for i in indices:
            self.sum_binders[e.binder] = T.enum_const(self.addr_sort, i)
            term, ty = self.lower_expr(e.body)
            if not isinstance(ty, UintType):
                raise SpecError("SUM body must be a uint", 0)
            total = T.add(total, term)
        del self.sum_binders[e.binder]
        return total, UintType()

    def lower_binary(self, e: PBinary) -> tuple[T.Term, SolType]:
        lt, lty = self.lower_expr(e.lhs)
        rt, rty = self.lower_expr(e.rhs)
        op = e.op
        if op in ("and", "or"):
            if not isinstance(lty, BoolType) or not isinstance(rty, BoolType):
                raise SpecError(f"{op} requires booleans", 0)
            return (T.and_(lt, rt) if op == "and" else T.or_(lt, rt)), BoolType()
        if op in ("==", "!="):
            if type(lty) is not type(rty):
                raise SpecError(f"cannot compare {lty} with {rty}", 0)
            out = T.eq(lt, rt)
            return (out if op == "==" else T.not_(out)), BoolType()
        if op in ("<", "<=", ">", ">="):
            if not isinstance(lty, UintType) or not isinstance(rty, UintType):
                raise SpecError(f"{op} requires uints", 0)
            table = {"<": T.ult, "<=": T.ule, ">": T.ugt, ">=": T.uge}
            return table[op](lt, rt), BoolType()
        if not isinstance(lty, UintType) or not isinstance(rty, UintType):
            raise SpecError(f"{op} requires uints", 0)
        table2 = {"+": T.add, "-": T.sub, "*": T.mul, "/": T.udiv, "%": T.urem}
        return table2[op](lt, rt), UintType()


def parse_spec(text: str, ast: ContractAst) -> list[Property]:
    """Parse a spec file; name resolution happens at lowering time."""
    return _SpecParser(_tokenize(text)).parse_file()


def lower_property(prop: Property, model: ContractModel) -> LoweredProperty:
    low = _Lowerer(model)
    body = prop.body
    if isinstance(body, Invariant):
        return LoweredProperty(prop.name, LoweredInvariant(low.lower_pred(body.pred)))
    if isinstance(body, TraceProp):
        return LoweredProperty(prop.name, LoweredTrace(low.lower_pred(body.pred), body.k))
    if isinstance(body, EventChain):
        for pat in (body.first, body.second, body.forbidden):
            low.register_pattern(pat)
        first = low.lower_pattern(body.first)
        second = low.lower_pattern(body.second)
        forbidden = low.lower_pattern(body.forbidden)
        where = low.lower_pred(body.where) if body.where is not None else None
        binders = [(n, low.sort_of(t)) for n, t in low.binders.items()]
        return LoweredProperty(prop.name, LoweredChain(first, second, forbidden, binders, where))
    if isinstance(body, CallPossibility):
        fn = model.transition(body.fname)
        if fn is None:
            raise SpecError(f"unknown public function {body.fname!r}", prop.line)
        low.register_pattern(body.first)
        low.register_pattern(body.second)
        if len(body.call_args) > len(fn.params):
            raise SpecError(f"{body.fname} takes {len(fn.params)} arguments", prop.line)
        arg_constraints: list[tuple[str, str, T.Term]] = []
        for p, a in zip(fn.params, body.call_args):
            kind = arg_kind(p.ty)
            if a.kind == "wild":
                continue
            if a.kind == "int":
                arg_constraints.append((p.name, kind, T.bv_const(a.value, model.cfg.int_width)))
            elif a.kind == "bool":
                arg_constraints.append((p.name, kind, T.bool_const(a.value)))
            else:
                idx = low.addr_const_index(a.value)
                if idx is not None:
                    arg_constraints.append((p.name, kind, T.enum_const(low.addr_sort, idx)))
                else:
                    if a.value not in low.binders:
                        raise SpecError(f"unknown binder {a.value!r} in call pattern", prop.line)
                    arg_constraints.append(
                        (p.name, kind, T.var(f"bind:{a.value}", low.sort_of(low.binders[a.value])))
                    )
        low.call_params = {p.name: p.ty for p in fn.params}
        low.hyp_scope = True
        where = low.lower_pred(body.where) if body.where is not None else None
        first = low.lower_pattern(body.first)
        second = low.lower_pattern(body.second)
        binders = [(n, low.sort_of(t)) for n, t in low.binders.items()]
        return LoweredProperty(prop.name, LoweredCall(
            first, second, body.fname, arg_constraints, body.always, binders, where,
        ))
    raise SpecError("unknown property class", prop.line)


def state_env(model: ContractModel, state: SystemState) -> dict[str, object]:
    """Concrete evaluation environment for a lowered state predicate."""
    env: dict[str, object] = {}
    for slot, value in zip(model.slots, state.vars):
        env[f"state:{slot.slot_id}"] = value
    for i, a in enumerate(model.addrs.elements):
        env[f"bal:{a}"] = state.balances[i]
    env["alive"] = state.alive
    env["btime"] = state.blocktime
    return env


def eval_state_pred(model: ContractModel, pred: T.Term, state: SystemState) -> bool:
    return bool(T.evaluate(pred, state_env(model, state)))
